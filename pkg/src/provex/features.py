"""Canonical named feature vector and the ablation feature-set groups.

Layout (version 1, 45 features, order is load-bearing for CSV and trees):

  counts      n_nodes n_edges n_process n_file n_socket
              n_read n_write n_exec n_fork n_send n_recv n_connect
  type-blind  all_{degree,closeness,betweenness,eigenvector}_centrality,
              all_triangles, all_clustering_coefficient
  typed       {process,file,socket}_x each of the six structural features
  security    dropper/clone/probe triangles, socket locality counts

Every ablation subset keeps the basic size counts (n_nodes, n_edges) so that
subset deltas measure the named feature group, not graph size awareness; the
motif-only subsets deliberately exclude per-op counts, which would leak the
same signal the ablation is isolating.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path

from .graphs import EdgeOp, NodeKind, ProvGraph
from .security import MotifCounts, motif_counts
from .structural import KIND_ORDER, NODE_FEATURES, aggregate_by_kind, aggregate_overall, node_features

FEATURE_LAYOUT_VERSION = 1

COUNT_FEATURES = (
    "n_nodes",
    "n_edges",
    "n_process",
    "n_file",
    "n_socket",
    "n_read",
    "n_write",
    "n_exec",
    "n_fork",
    "n_send",
    "n_recv",
    "n_connect",
)
BLIND_FEATURES = tuple(f"all_{f}" for f in NODE_FEATURES)
TYPED_FEATURES = tuple(f"{kind.value}_{f}" for kind in KIND_ORDER for f in NODE_FEATURES)
MOTIF_FEATURES = tuple(f.name for f in fields(MotifCounts))
LOCALITY_FEATURES = MOTIF_FEATURES[3:]
CANONICAL_FEATURES = COUNT_FEATURES + BLIND_FEATURES + TYPED_FEATURES + MOTIF_FEATURES

_BASIC = ("n_nodes", "n_edges")


class FeatureSetId(str, Enum):
    STRUCTURAL = "Structural"
    TYPE_DIFFERENTIATED = "TypeDifferentiated"
    DROPPER_ONLY = "DropperOnly"
    CLONE_ONLY = "CloneOnly"
    PROBE_ONLY = "ProbeOnly"
    IP_LOCALITY_ONLY = "IpLocalityOnly"
    ALL_SECURITY = "AllSecurity"
    ALL = "All"


FEATURE_SETS: dict[FeatureSetId, tuple[str, ...]] = {
    FeatureSetId.STRUCTURAL: _BASIC + BLIND_FEATURES,
    FeatureSetId.TYPE_DIFFERENTIATED: COUNT_FEATURES + TYPED_FEATURES,
    FeatureSetId.DROPPER_ONLY: _BASIC + ("dropper_triangles",),
    FeatureSetId.CLONE_ONLY: _BASIC + ("clone_triangles",),
    FeatureSetId.PROBE_ONLY: _BASIC + ("probe_triangles",),
    FeatureSetId.IP_LOCALITY_ONLY: _BASIC + LOCALITY_FEATURES,
    FeatureSetId.ALL_SECURITY: _BASIC + MOTIF_FEATURES,
    FeatureSetId.ALL: CANONICAL_FEATURES,
}


@dataclass
class FeatureVector:
    """One graph's named features; `values` preserves canonical order."""

    graph_id: str
    values: dict[str, float]
    label: str | None = None

    def names(self) -> list[str]:
        return list(self.values)

    def as_list(self) -> list[float]:
        return list(self.values.values())


def extract(g: ProvGraph, agg: str = "mean") -> FeatureVector:
    """Build the canonical 45-feature vector for one graph."""
    kind_tally = {kind: 0 for kind in NodeKind}
    for node in g.nodes:
        kind_tally[node.kind] += 1
    op_tally = {op: 0 for op in EdgeOp}
    for edge in g.edges:
        op_tally[edge.op] += 1

    values: dict[str, float] = {
        "n_nodes": float(g.n_nodes),
        "n_edges": float(g.n_edges),
        "n_process": float(kind_tally[NodeKind.PROCESS]),
        "n_file": float(kind_tally[NodeKind.FILE]),
        "n_socket": float(kind_tally[NodeKind.SOCKET]),
        "n_read": float(op_tally[EdgeOp.READ]),
        "n_write": float(op_tally[EdgeOp.WRITE]),
        "n_exec": float(op_tally[EdgeOp.EXEC]),
        "n_fork": float(op_tally[EdgeOp.FORK]),
        "n_send": float(op_tally[EdgeOp.SEND]),
        "n_recv": float(op_tally[EdgeOp.RECV]),
        "n_connect": float(op_tally[EdgeOp.CONNECT]),
    }
    table = node_features(g)
    values.update(aggregate_overall(table, agg=agg))
    values.update(aggregate_by_kind(table, g, agg=agg))
    values.update({k: float(v) for k, v in motif_counts(g).as_dict().items()})
    assert tuple(values) == CANONICAL_FEATURES
    return FeatureVector(graph_id=g.graph_id, values=values, label=g.label)


def project(v: FeatureVector, set_id: FeatureSetId) -> FeatureVector:
    """Restrict to one feature subset, keeping canonical ordering."""
    try:
        names = FEATURE_SETS[FeatureSetId(set_id)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown feature set id {set_id!r}") from None
    return FeatureVector(
        graph_id=v.graph_id,
        values={name: v.values[name] for name in names},
        label=v.label,
    )


def write_features_csv(vectors: list[FeatureVector], path: str | Path) -> None:
    """Feature matrix CSV: `graph_id,label` then the feature names.

    Floats are written with repr so reading back is bit-exact.
    """
    path = Path(path)
    if not vectors:
        raise ValueError("no feature vectors to write")
    names = vectors[0].names()
    for v in vectors:
        if v.names() != names:
            raise ValueError(f"inconsistent feature names in row {v.graph_id!r}")
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["graph_id", "label", *names])
        for v in vectors:
            writer.writerow([v.graph_id, v.label or "", *(repr(float(x)) for x in v.as_list())])


def read_features_csv(path: str | Path) -> list[FeatureVector]:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty feature file") from None
        if header[:2] != ["graph_id", "label"]:
            raise ValueError(f"{path}: header must start with graph_id,label")
        names = header[2:]
        if not names:
            raise ValueError(f"{path}: no feature columns")
        out = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{path}: line {i}: expected {len(header)} cells, got {len(row)}")
            try:
                values = {name: float(cell) for name, cell in zip(names, row[2:])}
            except ValueError:
                raise ValueError(f"{path}: line {i}: non-numeric feature value") from None
            out.append(FeatureVector(graph_id=row[0], values=values, label=row[1] or None))
    return out
