"""Surrogate training strategies and the fidelity/macro-F1 metrics.

Three ways to distill a black-box classifier into a decision tree:

  AccuracyDT   fit on ground-truth labels (D_S); ignores the black box.
  FidelityDT   fit on the black box's own predictions (D_F).
  TrusteeDT    iterative dataset augmentation: inner loop repeatedly refits,
               duplicating the original rows the tree still gets wrong, and
               keeps the inner tree with the best fidelity on the ORIGINAL
               rows; the outer loop repeats with fresh seeds and returns the
               candidate with the highest mean pairwise prediction agreement
               (ties: higher fidelity, then fewer nodes, then lower seed).

Fidelity is the raw agreement rate with the oracle's labels; macro_f1 is the
unweighted mean of per-class F1 over the union of predicted and true classes
(a truth class never predicted contributes 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .features import FeatureVector
from .tree import DecisionTree, DTParams, fit, predict

TRUTH = "truth"
ORACLE = "oracle"


@dataclass
class LabeledFeatureSet:
    """Row-aligned feature matrix, labels, and their provenance."""

    X: np.ndarray
    y: list[str]
    feature_names: list[str]
    graph_ids: list[str]
    label_source: str

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        n = self.X.shape[0]
        if not (len(self.y) == len(self.graph_ids) == n):
            raise ValueError("rows, labels, and graph ids must align")
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError("feature_names must match X columns")
        if self.label_source not in (TRUTH, ORACLE):
            raise ValueError(f"label_source must be '{TRUTH}' or '{ORACLE}'")
        if any(label is None for label in self.y):
            raise ValueError("every row needs a label")

    @classmethod
    def from_vectors(cls, vectors: list[FeatureVector], labels: list[str] | None = None,
                     label_source: str = TRUTH) -> "LabeledFeatureSet":
        if not vectors:
            raise ValueError("no feature vectors")
        names = vectors[0].names()
        for v in vectors:
            if v.names() != names:
                raise ValueError(f"inconsistent feature names at {v.graph_id!r}")
        if labels is None:
            labels = [v.label for v in vectors]
        return cls(
            X=np.array([v.as_list() for v in vectors], dtype=float),
            y=list(labels),
            feature_names=names,
            graph_ids=[v.graph_id for v in vectors],
            label_source=label_source,
        )

    def with_labels(self, labels: list[str], label_source: str) -> "LabeledFeatureSet":
        """Same rows, different labels (e.g. swap truth for oracle output)."""
        return LabeledFeatureSet(
            X=self.X,
            y=list(labels),
            feature_names=self.feature_names,
            graph_ids=self.graph_ids,
            label_source=label_source,
        )

    def __len__(self) -> int:
        return self.X.shape[0]


@dataclass
class TrusteeParams:
    outer_iters: int = 10
    inner_iters: int = 20
    dt_params: DTParams = field(default_factory=DTParams)
    rng_seed: int = 0

    def validate(self) -> None:
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ValueError("outer_iters and inner_iters must be >= 1")
        self.dt_params.validate()


def _require_source(ds: LabeledFeatureSet, source: str, op: str) -> None:
    if ds.label_source != source:
        raise ValueError(f"{op} needs {source}-labeled data, got {ds.label_source!r}")


def _agreement(a: list[str], b: list[str]) -> float:
    return sum(x == y for x, y in zip(a, b)) / len(a)


def train_accuracy_dt(ds: LabeledFeatureSet, p: DTParams | None = None) -> DecisionTree:
    _require_source(ds, TRUTH, "train_accuracy_dt")
    return fit(ds.X, ds.y, p if p is not None else DTParams(), ds.feature_names)


def train_fidelity_dt(df: LabeledFeatureSet, p: DTParams | None = None) -> DecisionTree:
    _require_source(df, ORACLE, "train_fidelity_dt")
    return fit(df.X, df.y, p if p is not None else DTParams(), df.feature_names)


def trustee_inner(df: LabeledFeatureSet, tp: TrusteeParams, seed: int) -> DecisionTree:
    """One augmentation run; returns the iterate with max fidelity on df.

    Each iteration appends one duplicate of every ORIGINAL row the current
    tree misclassifies. When nothing is misclassified the dataset stops
    changing, so later iterations would refit the identical tree and the
    loop can end early.
    """
    X_aug = df.X
    y_aug = list(df.y)
    best_tree = None
    best_fid = -1.0
    for i in range(tp.inner_iters):
        params = replace(tp.dt_params, rng_seed=seed * 1009 + i)
        t = fit(X_aug, y_aug, params, df.feature_names)
        pred = predict(t, df.X)
        fid = _agreement(pred, df.y)
        if fid > best_fid:  # strict: earliest iterate wins ties
            best_tree, best_fid = t, fid
        wrong = [r for r in range(len(df)) if pred[r] != df.y[r]]
        if not wrong:
            break
        X_aug = np.vstack([X_aug, df.X[wrong]])
        y_aug.extend(df.y[r] for r in wrong)
    return best_tree


def select_candidate(candidates: list[tuple[int, DecisionTree]],
                     df: LabeledFeatureSet) -> DecisionTree:
    """Pick the candidate with max mean pairwise agreement on df's rows.

    A single candidate's mean agreement over its empty peer set is 1.0.
    Ties: higher fidelity on df, then fewer tree nodes, then lower seed.
    """
    if not candidates:
        raise ValueError("no candidates")
    if len(df) == 0:
        raise ValueError("empty feature set")
    preds = [predict(t, df.X) for _, t in candidates]
    n = len(candidates)
    best_key = None
    best_tree = None
    for i, (seed, t) in enumerate(candidates):
        if n == 1:
            mean_agree = 1.0
        else:
            mean_agree = sum(_agreement(preds[i], preds[j]) for j in range(n) if j != i) / (n - 1)
        key = (mean_agree, _agreement(preds[i], df.y), -t.n_nodes, -seed)
        if best_key is None or key > best_key:
            best_key = key
            best_tree = t
    return best_tree


def train_trustee_dt(df: LabeledFeatureSet, tp: TrusteeParams | None = None) -> DecisionTree:
    _require_source(df, ORACLE, "train_trustee_dt")
    tp = tp if tp is not None else TrusteeParams()
    tp.validate()
    candidates = [
        (seed, trustee_inner(df, tp, seed))
        for seed in range(tp.rng_seed, tp.rng_seed + tp.outer_iters)
    ]
    return select_candidate(candidates, df)


def fidelity(t: DecisionTree, df: LabeledFeatureSet) -> float:
    """Fraction of rows where the tree agrees with the oracle's label."""
    _require_source(df, ORACLE, "fidelity")
    if len(df) == 0:
        raise ValueError("empty feature set")
    return _agreement(predict(t, df.X), df.y)


def macro_f1(pred: list[str], truth: list[str]) -> float:
    """Unweighted mean per-class F1 over the union of observed classes."""
    if len(pred) != len(truth):
        raise ValueError(f"{len(pred)} predictions vs {len(truth)} truths")
    if not truth:
        raise ValueError("empty label lists")
    classes = sorted(set(pred) | set(truth))
    scores = []
    for c in classes:
        tp = sum(1 for p, t in zip(pred, truth) if p == c and t == c)
        fp = sum(1 for p, t in zip(pred, truth) if p == c and t != c)
        fn = sum(1 for p, t in zip(pred, truth) if p != c and t == c)
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
    return sum(scores) / len(scores)
