"""Cross-validated F1/fidelity evaluation and the feature-set ablation grid.

kfold_eval queries the oracle exactly once on the whole corpus, so every
strategy within a fold trains and is scored against the same Y'. Folds are
stratified per true label and deterministic per seed. Aggregates store the
population (ddof=0) standard deviation over fold cells.

Report renderings: CSV carries one row per (strategy, feature set, fold)
cell; Markdown adds the aggregate table, ablation deltas against the All
column when present, and one representative decision path per group.
"""

from __future__ import annotations

import csv
import io
import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FEATURE_SETS, CANONICAL_FEATURES, FeatureSetId, extract
from .oracle import query
from .surrogate import (
    ORACLE,
    TRUTH,
    LabeledFeatureSet,
    TrusteeParams,
    fidelity,
    macro_f1,
    train_accuracy_dt,
    train_fidelity_dt,
    train_trustee_dt,
)
from .tree import DTParams, decision_path, feature_importance, predict, predict_row

STRATEGY_NAMES = ("AccuracyDT", "FidelityDT", "TrusteeDT")

REPORT_COLUMNS = (
    "strategy", "feature_set", "fold", "f1_truth", "fidelity",
    "f1_vs_oracle", "n_tree_nodes", "top_features",
)

_METRICS = ("f1_truth", "fidelity", "f1_vs_oracle", "n_tree_nodes")


@dataclass(frozen=True)
class EvalCell:
    strategy: str
    feature_set: str
    fold: int
    f1_truth: float
    fidelity: float
    f1_vs_oracle: float
    n_tree_nodes: int
    top_features: tuple[str, ...]


@dataclass
class EvalReport:
    cells: list[EvalCell]
    aggregates: dict[tuple[str, str], dict[str, float]]
    representative_paths: dict[tuple[str, str], str] = field(
        default_factory=dict, compare=False
    )

    @classmethod
    def from_cells(cls, cells, paths=None) -> "EvalReport":
        return cls(list(cells), _aggregate(cells), dict(paths or {}))

    def groups(self) -> list[tuple[str, str]]:
        seen = []
        for c in self.cells:
            key = (c.strategy, c.feature_set)
            if key not in seen:
                seen.append(key)
        return seen


def _aggregate(cells) -> dict[tuple[str, str], dict[str, float]]:
    grouped: dict[tuple[str, str], list[EvalCell]] = {}
    for c in cells:
        grouped.setdefault((c.strategy, c.feature_set), []).append(c)
    out = {}
    for key, group in grouped.items():
        stats: dict[str, float] = {"n_folds": float(len(group))}
        for metric in _METRICS:
            values = np.array([getattr(c, metric) for c in group], dtype=float)
            stats[f"{metric}_mean"] = float(values.mean())
            stats[f"{metric}_std"] = float(values.std(ddof=0))
        out[key] = stats
    return out


def stratified_folds(labels: list[str], k: int, seed: int) -> list[list[int]]:
    """k index lists, stratified per label, deterministic per seed.

    A class with fewer than k members triggers a warning and simply misses
    some folds (leave-some-out); indices always partition range(len(labels)).
    """
    n = len(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} graphs")
    rng = random.Random(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    by_label: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_label.setdefault(label, []).append(i)
    offset = 0
    for label in sorted(by_label):
        idxs = by_label[label]
        if len(idxs) < k:
            warnings.warn(
                f"class {label!r} has {len(idxs)} members < k={k};"
                " some folds will not contain it",
                RuntimeWarning,
            )
        rng.shuffle(idxs)
        for j, idx in enumerate(idxs):
            folds[(offset + j) % k].append(idx)
        offset += len(idxs)
    return [sorted(f) for f in folds]


def stratified_holdout(labels: list[str], seed: int,
                       test_fraction: float = 0.2) -> tuple[list[int], list[int]]:
    """One stratified train/test split (per-class shuffle, deterministic)."""
    if not (0.0 < test_fraction < 1.0):
        raise ValueError("test_fraction must be in (0, 1)")
    rng = random.Random(seed)
    train: list[int] = []
    test: list[int] = []
    by_label: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_label.setdefault(label, []).append(i)
    for label in sorted(by_label):
        idxs = by_label[label]
        rng.shuffle(idxs)
        cut = max(1, round(len(idxs) * test_fraction)) if len(idxs) > 1 else 0
        test.extend(idxs[:cut])
        train.extend(idxs[cut:])
    return sorted(train), sorted(test)


def _graphs_of(corpus):
    return list(corpus.graphs) if hasattr(corpus, "graphs") else list(corpus)


def _top_features(tree) -> tuple[str, ...]:
    imp = feature_importance(tree)
    ranked = sorted(imp.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(name for name, value in ranked[:3] if value > 0)


def _render_path(tree, names, row) -> str:
    x = dict(zip(names, row))
    steps = decision_path(tree, x)
    label = predict_row(tree, x)
    if not steps:
        return f"(leaf) => {label}"
    rendered = " -> ".join(
        f"{feat} <= {thr:g}" if side == "<=" else f"{feat} > {thr:g}"
        for feat, thr, side in steps
    )
    return f"{rendered} => {label}"


def _train(strategy: str, ds, df, dt_params, trustee_params):
    if strategy == "AccuracyDT":
        return train_accuracy_dt(ds, dt_params)
    if strategy == "FidelityDT":
        return train_fidelity_dt(df, dt_params)
    if strategy == "TrusteeDT":
        return train_trustee_dt(df, trustee_params)
    raise ValueError(f"unknown strategy {strategy!r}")


def kfold_eval(corpus, oracle, strategies=STRATEGY_NAMES,
               feature_sets=(FeatureSetId.ALL,), k: int = 10, seed: int = 0,
               dt_params: DTParams | None = None,
               trustee_params: TrusteeParams | None = None) -> EvalReport:
    """Stratified k-fold evaluation of surrogate strategies.

    The oracle is queried once, up front, on the whole corpus; an oracle
    failure therefore aborts the entire run before any training happens.
    """
    graphs = _graphs_of(corpus)
    labels = [g.label for g in graphs]
    if any(label is None for label in labels):
        raise ValueError("every graph needs a true label")
    for s in strategies:
        if s not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {s!r}")
    feature_sets = [FeatureSetId(fs) for fs in feature_sets]
    dt_params = dt_params if dt_params is not None else DTParams()
    if trustee_params is None:
        trustee_params = TrusteeParams(dt_params=dt_params, rng_seed=seed)

    y_oracle = [p.label for p in query(oracle, graphs)]
    vectors = [extract(g) for g in graphs]
    base = LabeledFeatureSet.from_vectors(vectors, labels=labels, label_source=TRUTH)

    folds = stratified_folds(labels, k, seed)
    all_idx = set(range(len(graphs)))
    cells: list[EvalCell] = []
    paths: dict[tuple[str, str], str] = {}

    for fold_i, test_idx in enumerate(folds):
        train_idx = sorted(all_idx - set(test_idx))
        for fs in feature_sets:
            names = list(FEATURE_SETS[fs])
            cols = [CANONICAL_FEATURES.index(f) for f in names]
            Xtr = base.X[np.ix_(train_idx, cols)]
            Xte = base.X[np.ix_(test_idx, cols)]
            ds = LabeledFeatureSet(
                Xtr, [labels[i] for i in train_idx], names,
                [base.graph_ids[i] for i in train_idx], TRUTH)
            df = ds.with_labels([y_oracle[i] for i in train_idx], ORACLE)
            df_test = LabeledFeatureSet(
                Xte, [y_oracle[i] for i in test_idx], names,
                [base.graph_ids[i] for i in test_idx], ORACLE)
            truth_test = [labels[i] for i in test_idx]
            for strategy in strategies:
                tree = _train(strategy, ds, df, dt_params, trustee_params)
                pred = predict(tree, Xte)
                cells.append(EvalCell(
                    strategy=strategy,
                    feature_set=fs.value,
                    fold=fold_i,
                    f1_truth=macro_f1(pred, truth_test),
                    fidelity=fidelity(tree, df_test),
                    f1_vs_oracle=macro_f1(pred, df_test.y),
                    n_tree_nodes=tree.n_nodes,
                    top_features=_top_features(tree),
                ))
                if fold_i == 0:
                    paths[(strategy, fs.value)] = _render_path(tree, names, Xte[0])
    return EvalReport.from_cells(cells, paths)


def ablation_grid(corpus, oracle, k: int = 10, seed: int = 0,
                  strategies=("FidelityDT",),
                  dt_params: DTParams | None = None,
                  trustee_params: TrusteeParams | None = None) -> EvalReport:
    """kfold_eval over every feature set, for delta-vs-All comparisons."""
    return kfold_eval(
        corpus, oracle, strategies=strategies,
        feature_sets=list(FeatureSetId), k=k, seed=seed,
        dt_params=dt_params, trustee_params=trustee_params,
    )


def ablation_deltas(report: EvalReport, metric: str = "f1_truth") -> dict[tuple[str, str], float]:
    """Per (strategy, feature_set): mean(metric) minus the strategy's All mean."""
    key = f"{metric}_mean"
    deltas = {}
    for (strategy, fs), stats in report.aggregates.items():
        all_stats = report.aggregates.get((strategy, FeatureSetId.ALL.value))
        if all_stats is None:
            raise ValueError(f"no All column for strategy {strategy!r}")
        deltas[(strategy, fs)] = stats[key] - all_stats[key]
    return deltas


def render_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for c in report.cells:
        writer.writerow([
            c.strategy, c.feature_set, c.fold,
            repr(c.f1_truth), repr(c.fidelity), repr(c.f1_vs_oracle),
            c.n_tree_nodes, "|".join(c.top_features),
        ])
    return buf.getvalue()


def read_report_csv(path: str | Path) -> EvalReport:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError(f"{path}: empty report file") from None
    if tuple(header) != REPORT_COLUMNS:
        raise ValueError(f"{path}: unexpected report header {header!r}")
    cells = []
    for row in reader:
        if len(row) != len(REPORT_COLUMNS):
            raise ValueError(f"{path}: bad row {row!r}")
        cells.append(EvalCell(
            strategy=row[0], feature_set=row[1], fold=int(row[2]),
            f1_truth=float(row[3]), fidelity=float(row[4]),
            f1_vs_oracle=float(row[5]), n_tree_nodes=int(row[6]),
            top_features=tuple(t for t in row[7].split("|") if t),
        ))
    return EvalReport.from_cells(cells)


def _fmt(mean: float, std: float) -> str:
    return f"{mean:.4f} +/- {std:.4f}"


def render_markdown(report: EvalReport) -> str:
    lines = ["# Evaluation report", ""]
    groups = report.groups()
    feature_sets = {fs for _, fs in groups}
    with_deltas = FeatureSetId.ALL.value in feature_sets and len(feature_sets) > 1
    deltas = ablation_deltas(report) if with_deltas else {}

    lines.append("## Aggregates")
    lines.append("")
    head = "| Strategy | Feature set | F1 (truth) | Fidelity | F1 (vs oracle) | Nodes | Top features |"
    lines.append(head)
    lines.append("|" + " --- |" * 7)
    for key in groups:
        strategy, fs = key
        s = report.aggregates[key]
        f1 = _fmt(s["f1_truth_mean"], s["f1_truth_std"])
        if with_deltas:
            f1 += f" ({deltas[key]:+.4f})"
        top = next((c.top_features for c in report.cells
                    if (c.strategy, c.feature_set) == key), ())
        lines.append(
            f"| {strategy} | {fs} | {f1} |"
            f" {_fmt(s['fidelity_mean'], s['fidelity_std'])} |"
            f" {_fmt(s['f1_vs_oracle_mean'], s['f1_vs_oracle_std'])} |"
            f" {s['n_tree_nodes_mean']:.1f} | {', '.join(top) or '-'} |"
        )
    lines.append("")

    lines.append("## Fold detail")
    lines.append("")
    lines.append("| Strategy | Feature set | Fold | F1 (truth) | Fidelity | F1 (vs oracle) | Nodes |")
    lines.append("|" + " --- |" * 7)
    for c in report.cells:
        lines.append(
            f"| {c.strategy} | {c.feature_set} | {c.fold} | {c.f1_truth:.4f} |"
            f" {c.fidelity:.4f} | {c.f1_vs_oracle:.4f} | {c.n_tree_nodes} |"
        )
    lines.append("")

    if report.representative_paths:
        lines.append("## Representative decision paths")
        lines.append("")
        for (strategy, fs), path in report.representative_paths.items():
            lines.append(f"- **{strategy} / {fs}**: `{path}`")
        lines.append("")
    return "\n".join(lines)


def emit_report(report: EvalReport, path: str | Path, fmt: str = "csv") -> Path:
    path = Path(path)
    if fmt == "csv":
        path.write_text(render_csv(report), encoding="utf-8")
    elif fmt in ("markdown", "md"):
        path.write_text(render_markdown(report), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path
