"""From-scratch CART decision tree with fully specified tie-breaking.

Split search maximizes weighted Gini impurity decrease over midpoint
thresholds between consecutive distinct sorted values. Ties break toward the
lowest feature index, then the lowest threshold, so refitting identical data
always yields an identical tree: explanations are the product here, and
nondeterminism would be a bug. `x <= threshold` routes left everywhere.

A node splits only when the best decrease is >= min_impurity_decrease AND
strictly positive; class weights are either uniform ("none") or balanced
(n / (k * count_c), recomputed from the training labels).

Serialization is a small self-describing JSON document (format "dtree",
version 1) whose floats survive round-trips bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Union

import numpy as np

TREE_FORMAT = "dtree"
TREE_VERSION = 1


@dataclass
class DTParams:
    max_depth: int | None = 8
    min_samples_leaf: int = 5
    min_impurity_decrease: float = 1e-7
    class_weighting: str = "balanced"
    rng_seed: int = 0

    def validate(self) -> None:
        if self.max_depth is not None and (not isinstance(self.max_depth, int) or self.max_depth < 0):
            raise ValueError("max_depth must be None or an int >= 0")
        if not isinstance(self.min_samples_leaf, int) or self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be an int >= 1")
        if self.min_impurity_decrease < 0:
            raise ValueError("min_impurity_decrease must be >= 0")
        if self.class_weighting not in ("balanced", "none"):
            raise ValueError("class_weighting must be 'balanced' or 'none'")


@dataclass
class Leaf:
    label: str
    counts: dict[str, int]


@dataclass
class Split:
    feature: str
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass
class DecisionTree:
    params: DTParams
    feature_names: list[str]
    classes: list[str]
    root: TreeNode

    @property
    def n_nodes(self) -> int:
        def count(node):
            if isinstance(node, Leaf):
                return 1
            return 1 + count(node.left) + count(node.right)

        return count(self.root)

    @property
    def depth(self) -> int:
        def down(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(down(node.left), down(node.right))

        return down(self.root)


def _class_weights(y_idx: np.ndarray, k: int, weighting: str) -> np.ndarray:
    if weighting == "none":
        return np.ones(k)
    counts = np.bincount(y_idx, minlength=k)
    n = len(y_idx)
    return n / (k * counts.astype(float))


def _exact_class_weights(y_idx: np.ndarray, k: int, weighting: str) -> list[Fraction]:
    if weighting == "none":
        return [Fraction(1)] * k
    counts = np.bincount(y_idx, minlength=k)
    n = len(y_idx)
    return [Fraction(n, k * int(c)) for c in counts]


def _gini(weighted_counts: np.ndarray, total: float) -> float:
    if total <= 0.0:
        return 0.0
    p = weighted_counts / total
    return float(1.0 - (p * p).sum())


# Candidates whose float delta lands within this slack of the maximum are
# re-ranked in exact rational arithmetic: mathematically tied splits must
# resolve by (lowest feature index, lowest threshold), and float summation
# order alone must never pick the winner.
_TIE_SLACK = 1e-10


def _exact_gini(masses: list[Fraction]) -> Fraction:
    total = sum(masses)
    if total == 0:
        return Fraction(0)
    return 1 - sum((m / total) ** 2 for m in masses)


def _search_node(X: np.ndarray, y_idx: np.ndarray, sw: np.ndarray, idx: np.ndarray,
                 k: int, min_samples_leaf: int, exact_w: list[Fraction]):
    """Best (feature, threshold, decrease) on the rows in idx, or None.

    All features are scanned in one matrix pass: per-column stable argsort,
    per-class weighted cumsums, then a dense (boundary x feature) delta grid
    with invalid boundaries masked out.
    """
    n_here = len(idx)
    if n_here < 2:
        return None
    Xn = X[idx]
    ys = y_idx[idx]
    ws = sw[idx]
    wc = np.bincount(ys, weights=ws, minlength=k)
    w_parent = float(ws.sum())
    imp_parent = _gini(wc, w_parent)

    order = np.argsort(Xn, axis=0, kind="stable")
    v = np.take_along_axis(Xn, order, axis=0)
    yo = ys[order]
    wo = ws[order]
    w_left = np.zeros((n_here - 1, Xn.shape[1]))
    sumsq_left = np.zeros_like(w_left)
    sumsq_right = np.zeros_like(w_left)
    for c in range(k):
        cum_c = np.cumsum(wo * (yo == c), axis=0)[:-1]
        w_left += cum_c
        sumsq_left += cum_c * cum_c
        right_c = wc[c] - cum_c
        sumsq_right += right_c * right_c
    w_right = w_parent - w_left
    imp_left = 1.0 - sumsq_left / (w_left * w_left)
    imp_right = 1.0 - sumsq_right / (w_right * w_right)
    delta = imp_parent - (w_left * imp_left + w_right * imp_right) / w_parent

    left_n = np.arange(1, n_here)
    size_ok = (left_n >= min_samples_leaf) & (n_here - left_n >= min_samples_leaf)
    valid = (v[1:] != v[:-1]) & size_ok[:, None]
    if not valid.any():
        return None
    delta = np.where(valid, delta, -np.inf)
    local_max = delta.max(axis=0)
    best_float = float(local_max.max())
    if best_float <= 0.0:
        return None

    suspects = []  # built in (feature asc, threshold asc) order
    for j in np.nonzero(local_max >= best_float - _TIE_SLACK)[0]:
        for b in np.nonzero(delta[:, j] >= best_float - _TIE_SLACK)[0]:
            threshold = float((v[b, j] + v[b + 1, j]) / 2.0)
            left_counts = tuple(int((yo[: b + 1, j] == c).sum()) for c in range(k))
            suspects.append((int(j), threshold, left_counts, float(delta[b, j])))
    if len(suspects) == 1:
        j, threshold, _, d = suspects[0]
        return j, threshold, d

    node_counts = np.bincount(ys, minlength=k)
    parent_mass = [exact_w[c] * int(node_counts[c]) for c in range(k)]
    total_mass = sum(parent_mass)
    parent_gini = _exact_gini(parent_mass)
    best = None
    best_exact = None
    for j, threshold, left_counts, _ in suspects:
        lmass = [exact_w[c] * left_counts[c] for c in range(k)]
        rmass = [parent_mass[c] - lmass[c] for c in range(k)]
        exact = parent_gini - (sum(lmass) * _exact_gini(lmass) + sum(rmass) * _exact_gini(rmass)) / total_mass
        if best_exact is None or exact > best_exact:  # strict: first wins ties
            best_exact = exact
            best = (j, threshold, float(exact))
    return best


def root_split(X, y, p: DTParams):
    """The root's chosen (feature_index, threshold, impurity_decrease), or None.

    Exposed separately so the split search can be checked against exhaustive
    enumeration without digging into a fitted tree.
    """
    X, y_idx, classes = _coerce(X, y)
    p.validate()
    sw = _class_weights(y_idx, len(classes), p.class_weighting)[y_idx]
    exact_w = _exact_class_weights(y_idx, len(classes), p.class_weighting)
    if p.max_depth == 0 or len(y_idx) < 2 * p.min_samples_leaf:
        return None
    found = _search_node(X, y_idx, sw, np.arange(len(y_idx)), len(classes), p.min_samples_leaf, exact_w)
    if found is None:
        return None
    j, threshold, delta = found
    if delta < p.min_impurity_decrease or delta <= 0.0:
        return None
    return j, threshold, delta


def _coerce(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if X.shape[0] != len(y):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y)} labels")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    classes = sorted(set(y))
    index = {c: i for i, c in enumerate(classes)}
    y_idx = np.fromiter((index[label] for label in y), dtype=np.int64, count=len(y))
    return X, y_idx, classes


def fit(X, y, p: DTParams | None = None, feature_names: list[str] | None = None) -> DecisionTree:
    """Greedy CART fit. Deterministic: the seed never influences the tree."""
    p = p if p is not None else DTParams()
    p.validate()
    X, y_idx, classes = _coerce(X, y)
    d = X.shape[1]
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(d)]
    if len(feature_names) != d:
        raise ValueError(f"{len(feature_names)} feature names for {d} columns")
    k = len(classes)
    sw = _class_weights(y_idx, k, p.class_weighting)[y_idx]
    exact_w = _exact_class_weights(y_idx, k, p.class_weighting)

    def leaf_of(idx: np.ndarray) -> Leaf:
        raw = np.bincount(y_idx[idx], minlength=k)
        weighted = np.bincount(y_idx[idx], weights=sw[idx], minlength=k)
        label = classes[int(np.argmax(weighted))]  # first max: lexicographic tie-break
        return Leaf(label=label, counts={classes[c]: int(raw[c]) for c in range(k) if raw[c]})

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        if p.max_depth is not None and depth >= p.max_depth:
            return leaf_of(idx)
        if len(idx) < 2 * p.min_samples_leaf:
            return leaf_of(idx)
        if len(np.unique(y_idx[idx])) == 1:
            return leaf_of(idx)
        found = _search_node(X, y_idx, sw, idx, k, p.min_samples_leaf, exact_w)
        if found is None:
            return leaf_of(idx)
        j, threshold, delta = found
        if delta < p.min_impurity_decrease or delta <= 0.0:
            return leaf_of(idx)
        go_left = X[idx, j] <= threshold
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        if len(left_idx) == 0 or len(right_idx) == 0:
            return leaf_of(idx)  # degenerate midpoint rounding; cannot recurse
        return Split(
            feature=feature_names[j],
            threshold=threshold,
            left=build(left_idx, depth + 1),
            right=build(right_idx, depth + 1),
        )

    root = build(np.arange(X.shape[0]), 0)
    return DecisionTree(params=p, feature_names=list(feature_names), classes=classes, root=root)


def predict_row(t: DecisionTree, x) -> str:
    """Route one feature mapping (name -> value) to its leaf label."""
    node = t.root
    while isinstance(node, Split):
        try:
            value = x[node.feature]
        except KeyError:
            raise ValueError(f"missing feature {node.feature!r}") from None
        node = node.left if value <= node.threshold else node.right
    return node.label


def predict(t: DecisionTree, X: np.ndarray) -> list[str]:
    """Batch prediction over a matrix aligned to t.feature_names."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(t.feature_names):
        raise ValueError(f"X must be n x {len(t.feature_names)}")
    col = {name: j for j, name in enumerate(t.feature_names)}
    out = np.empty(X.shape[0], dtype=object)

    def walk(node: TreeNode, rows: np.ndarray) -> None:
        if not rows.size:
            return
        if isinstance(node, Leaf):
            out[rows] = node.label
            return
        go_left = X[rows, col[node.feature]] <= node.threshold
        walk(node.left, rows[go_left])
        walk(node.right, rows[~go_left])

    walk(t.root, np.arange(X.shape[0]))
    return out.tolist()


def decision_path(t: DecisionTree, x) -> list[tuple[str, float, str]]:
    """The split tests taken for x, as (feature, threshold, '<=' or '>')."""
    path = []
    node = t.root
    while isinstance(node, Split):
        try:
            value = x[node.feature]
        except KeyError:
            raise ValueError(f"missing feature {node.feature!r}") from None
        if value <= node.threshold:
            path.append((node.feature, node.threshold, "<="))
            node = node.left
        else:
            path.append((node.feature, node.threshold, ">"))
            node = node.right
    return path


def _leaf_distribution(node: TreeNode) -> dict[str, int]:
    if isinstance(node, Leaf):
        return dict(node.counts)
    out: dict[str, int] = {}
    for child in (node.left, node.right):
        for label, n in _leaf_distribution(child).items():
            out[label] = out.get(label, 0) + n
    return out


def feature_importance(t: DecisionTree) -> dict[str, float]:
    """Normalized total Gini decrease per feature; {} for a bare leaf.

    Recomputed from the stored leaf counts, so importances survive
    serialization without extra bookkeeping.
    """
    if isinstance(t.root, Leaf):
        return {}
    root_dist = _leaf_distribution(t.root)
    k = len(t.classes)
    n = sum(root_dist.values())
    if t.params.class_weighting == "balanced":
        weight = {c: n / (k * cnt) for c, cnt in root_dist.items() if cnt}
    else:
        weight = {c: 1.0 for c in root_dist}

    def weighted(dist: dict[str, int]) -> tuple[float, float]:
        masses = np.array([dist.get(c, 0) * weight.get(c, 0.0) for c in t.classes])
        total = float(masses.sum())
        return total, _gini(masses, total)

    totals: dict[str, float] = {}
    w_root, _ = weighted(root_dist)

    def walk(node: TreeNode) -> None:
        if isinstance(node, Leaf):
            return
        dist = _leaf_distribution(node)
        w_node, imp = weighted(dist)
        wl, imp_l = weighted(_leaf_distribution(node.left))
        wr, imp_r = weighted(_leaf_distribution(node.right))
        delta = imp - (wl * imp_l + wr * imp_r) / w_node
        totals[node.feature] = totals.get(node.feature, 0.0) + (w_node / w_root) * delta
        walk(node.left)
        walk(node.right)

    walk(t.root)
    total = sum(totals.values())
    if total <= 0.0:
        return {name: 0.0 for name in totals}
    return {name: value / total for name, value in totals.items()}


# serialization

def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"kind": "leaf", "label": node.label, "counts": node.counts}
    return {
        "kind": "split",
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d: dict) -> TreeNode:
    kind = d.get("kind")
    if kind == "leaf":
        return Leaf(label=d["label"], counts={str(c): int(n) for c, n in d["counts"].items()})
    if kind == "split":
        return Split(
            feature=d["feature"],
            threshold=float(d["threshold"]),
            left=_node_from_dict(d["left"]),
            right=_node_from_dict(d["right"]),
        )
    raise ValueError(f"unknown tree node kind {kind!r}")


def dumps_tree(t: DecisionTree) -> str:
    doc = {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "params": asdict(t.params),
        "feature_names": t.feature_names,
        "classes": t.classes,
        "root": _node_to_dict(t.root),
    }
    return json.dumps(doc, indent=2) + "\n"


def loads_tree(text: str) -> DecisionTree:
    doc = json.loads(text)
    if doc.get("format") != TREE_FORMAT:
        raise ValueError(f"not a {TREE_FORMAT} file")
    if doc.get("version") != TREE_VERSION:
        raise ValueError(f"unsupported {TREE_FORMAT} version {doc.get('version')!r}")
    return DecisionTree(
        params=DTParams(**doc["params"]),
        feature_names=list(doc["feature_names"]),
        classes=list(doc["classes"]),
        root=_node_from_dict(doc["root"]),
    )


def save_tree(t: DecisionTree, path: str | Path) -> None:
    Path(path).write_text(dumps_tree(t), encoding="utf-8")


def load_tree(path: str | Path) -> DecisionTree:
    try:
        return loads_tree(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid tree file: {exc}") from None


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(t: DecisionTree) -> str:
    """DOT digraph; split labels use ASCII '<=', edges are true/false."""
    lines = ["digraph dtree {", "  node [shape=box];"]
    counter = [0]

    def emit(node: TreeNode) -> int:
        my_id = counter[0]
        counter[0] += 1
        if isinstance(node, Leaf):
            counts = ", ".join(f"{c}={n}" for c, n in sorted(node.counts.items()))
            lines.append(f'  n{my_id} [label="{_dot_escape(node.label)}\\n[{_dot_escape(counts)}]"];')
            return my_id
        lines.append(f'  n{my_id} [label="{_dot_escape(node.feature)} <= {node.threshold!r}"];')
        left_id = emit(node.left)
        right_id = emit(node.right)
        lines.append(f'  n{my_id} -> n{left_id} [label="true"];')
        lines.append(f'  n{my_id} -> n{right_id} [label="false"];')
        return my_id

    emit(t.root)
    lines.append("}")
    return "\n".join(lines) + "\n"
