"""Black-box classifier abstraction the surrogates are trained against.

Three oracle kinds, exactly one configured per run:

  PredictionFile    replays a JSON-lines file of precomputed predictions
                    (the hand-off format for external classifiers).
  Subprocess        pipes graphs to a child process, one JSON graph per
                    stdin line, and reads one prediction JSON-line per
                    input back, same order; child must exit 0.
  BuiltinEnsemble   a seeded bag of 25 deep randomized trees over the
                    canonical feature vector PLUS 16 walk-histogram
                    features the surrogates never see, so fidelity < 1
                    stays achievable and meaningful.

Oracles are read-only after construction: query() never learns.
"""

from __future__ import annotations

import json
import math
import random
import subprocess
import sys
import zlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .features import CANONICAL_FEATURES, extract
from .graphs import ProvGraph, dumps_graph, orient_edges
from .tree import DecisionTree, DTParams, fit, predict

ENSEMBLE_SIZE = 25
WALK_BUCKETS = 16
WALK_LENGTH = 3


class OracleError(RuntimeError):
    """Oracle misconfiguration, missing predictions, or child failure."""


class OracleKind(str, Enum):
    PREDICTION_FILE = "PredictionFile"
    SUBPROCESS = "Subprocess"
    BUILTIN_ENSEMBLE = "BuiltinEnsemble"


@dataclass
class Prediction:
    graph_id: str
    label: str
    scores: dict[str, float] | None = None

    def __post_init__(self):
        if not self.graph_id:
            raise ValueError("prediction needs a graph_id")
        if not self.label:
            raise ValueError(f"prediction for {self.graph_id!r} needs a label")
        if self.scores is not None:
            for cls, value in self.scores.items():
                if not (value >= 0.0):  # also rejects NaN
                    raise ValueError(
                        f"negative score {value!r} for class {cls!r}"
                        f" in prediction {self.graph_id!r}"
                    )


def prediction_from_json(obj: object, where: str = "prediction") -> Prediction:
    if not isinstance(obj, dict):
        raise OracleError(f"{where}: not a JSON object")
    gid = obj.get("graph_id")
    label = obj.get("label")
    if not isinstance(gid, str) or not gid:
        raise OracleError(f"{where}: missing graph_id")
    if not isinstance(label, str) or not label:
        raise OracleError(f"{where}: missing label")
    raw = obj.get("scores")
    scores = None
    if raw is not None:
        if not isinstance(raw, dict):
            raise OracleError(f"{where}: scores must be an object or null")
        try:
            scores = {str(c): float(v) for c, v in raw.items()}
        except (TypeError, ValueError):
            raise OracleError(f"{where}: non-numeric score") from None
    try:
        return Prediction(gid, label, scores)
    except ValueError as exc:
        raise OracleError(f"{where}: {exc}") from None


def parse_prediction_line(line: str, where: str) -> Prediction:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise OracleError(f"{where}: invalid JSON: {exc}") from None
    return prediction_from_json(obj, where)


def prediction_to_json(p: Prediction) -> str:
    return json.dumps(
        {"graph_id": p.graph_id, "label": p.label, "scores": p.scores},
        separators=(",", ":"),
    )


def save_prediction_file(predictions: list[Prediction], path: str | Path) -> None:
    text = "".join(prediction_to_json(p) + "\n" for p in predictions)
    Path(path).write_text(text, encoding="utf-8")


class PredictionFileOracle:
    """Keyed replay of a prediction file; every queried id must be present."""

    kind = OracleKind.PREDICTION_FILE

    def __init__(self, predictions: list[Prediction], source: str = "<memory>"):
        self.source = source
        self._by_id: dict[str, Prediction] = {}
        for p in predictions:
            if p.graph_id in self._by_id:
                raise OracleError(f"{source}: duplicate graph_id {p.graph_id!r}")
            self._by_id[p.graph_id] = p

    def query(self, graphs: list[ProvGraph]) -> list[Prediction]:
        out = []
        for g in graphs:
            p = self._by_id.get(g.graph_id)
            if p is None:
                raise OracleError(f"{self.source}: no prediction for graph_id {g.graph_id!r}")
            out.append(p)
        return out


def load_prediction_file(path: str | Path) -> PredictionFileOracle:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise OracleError(f"cannot read {path}: {exc}") from None
    predictions = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        predictions.append(parse_prediction_line(line, f"{path}:{lineno}"))
    return PredictionFileOracle(predictions, source=str(path))


class SubprocessOracle:
    """Line-JSON child process: one graph in per line, one prediction out."""

    kind = OracleKind.SUBPROCESS

    def __init__(self, argv: list[str]):
        if not argv:
            raise OracleError("subprocess oracle needs a command")
        self.argv = list(argv)

    def query(self, graphs: list[ProvGraph]) -> list[Prediction]:
        payload = "".join(dumps_graph(g) + "\n" for g in graphs)
        try:
            proc = subprocess.run(
                self.argv, input=payload, capture_output=True, text=True,
            )
        except OSError as exc:
            raise OracleError(f"cannot run {self.argv[0]!r}: {exc}") from None
        if proc.returncode != 0:
            detail = proc.stderr.strip().splitlines()
            raise OracleError(
                f"oracle command exited {proc.returncode}"
                + (f": {detail[-1]}" if detail else "")
            )
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != len(graphs):
            raise OracleError(
                f"oracle wrote {len(lines)} predictions for {len(graphs)} graphs"
            )
        out = []
        for i, (g, line) in enumerate(zip(graphs, lines)):
            p = parse_prediction_line(line, f"oracle output line {i + 1}")
            if p.graph_id != g.graph_id:
                raise OracleError(
                    f"oracle output line {i + 1}: graph_id {p.graph_id!r}"
                    f" does not match input {g.graph_id!r}"
                )
            out.append(p)
        return out


def walk_histogram(g: ProvGraph) -> list[float]:
    """Proportions of all length-3 directed walks, hashed into 16 buckets.

    A walk signature is the alternating kind/op string along the walk;
    parallel edges yield distinct walks. All-zero when no walk exists.
    """
    view = orient_edges(g)
    kinds = [node.kind.value for node in g.nodes]
    out: list[list[tuple[int, str]]] = [[] for _ in range(view.n)]
    for (u, v), op in zip(view.edges, view.ops):
        out[u].append((v, op.value))
    buckets = [0] * WALK_BUCKETS
    total = 0
    for u in range(view.n):
        for v, op1 in out[u]:
            head = f"{kinds[u]}>{op1}>{kinds[v]}"
            for w, op2 in out[v]:
                mid = f"{head}>{op2}>{kinds[w]}"
                for x, op3 in out[w]:
                    sig = f"{mid}>{op3}>{kinds[x]}"
                    buckets[zlib.crc32(sig.encode("ascii")) % WALK_BUCKETS] += 1
                    total += 1
    if total == 0:
        return [0.0] * WALK_BUCKETS
    return [count / total for count in buckets]


ORACLE_FEATURES = tuple(CANONICAL_FEATURES) + tuple(
    f"walk_hist_{i}" for i in range(WALK_BUCKETS)
)


def oracle_features(graphs: list[ProvGraph]) -> np.ndarray:
    rows = []
    for g in graphs:
        rows.append(extract(g).as_list() + walk_histogram(g))
    return np.asarray(rows, dtype=float)


class BuiltinEnsembleOracle:
    """Bagged deep randomized trees over canonical + walk features."""

    kind = OracleKind.BUILTIN_ENSEMBLE

    def __init__(self, members: list[tuple[tuple[int, ...], DecisionTree]],
                 classes: list[str], seed: int):
        self.members = members
        self.classes = classes
        self.seed = seed

    def query(self, graphs: list[ProvGraph]) -> list[Prediction]:
        if not graphs:
            return []
        X = oracle_features(graphs)
        votes = [dict() for _ in graphs]
        for cols, tree in self.members:
            for i, label in enumerate(predict(tree, X[:, cols])):
                votes[i][label] = votes[i].get(label, 0) + 1
        out = []
        for g, tally in zip(graphs, votes):
            top = max(tally.values())
            label = min(c for c, n in tally.items() if n == top)
            scores = {c: tally[c] / len(self.members) for c in sorted(tally)}
            out.append(Prediction(g.graph_id, label, scores))
        return out


def train_builtin(graphs: list[ProvGraph], labels: list[str], seed: int = 0) -> BuiltinEnsembleOracle:
    """Fit the 25-tree bagged stand-in for a black-box graph classifier."""
    if len(graphs) != len(labels):
        raise ValueError(f"{len(graphs)} graphs vs {len(labels)} labels")
    if not graphs:
        raise ValueError("empty training corpus")
    X = oracle_features(graphs)
    n, d = X.shape
    subspace = min(d, int(round(2.0 * math.sqrt(d))))
    member_params = DTParams(
        max_depth=None, min_samples_leaf=1, min_impurity_decrease=0.0,
        class_weighting="none",
    )
    members = []
    for b in range(ENSEMBLE_SIZE):
        rng = random.Random(seed * 7919 + b)
        rows = [rng.randrange(n) for _ in range(n)]
        cols = tuple(sorted(rng.sample(range(d), subspace)))
        names = [ORACLE_FEATURES[j] for j in cols]
        tree = fit(X[rows][:, cols], [labels[r] for r in rows], member_params, names)
        members.append((cols, tree))
    return BuiltinEnsembleOracle(members, sorted(set(labels)), seed)


def query(oracle, graphs: list[ProvGraph]) -> list[Prediction]:
    """Order-aligned predictions, one per input graph."""
    out = oracle.query(list(graphs))
    if len(out) != len(graphs):
        raise OracleError(f"oracle returned {len(out)} predictions for {len(graphs)} graphs")
    return out
