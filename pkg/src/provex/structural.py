"""Classical node-level graph features and their entity-type-aware aggregation.

All features run on the information-flow orientation from `graphs.orient_edges`.
Path-based features (closeness, betweenness) treat parallel edges as one arc;
degree and eigenvector keep multiplicities because event volume is signal.
Degree centrality is degree/(n-1) and can exceed 1 on multigraphs; every other
centrality lies in [0, 1].

Closeness is the incoming, reachability-scaled form: with r nodes able to
reach v at total distance S, closeness(v) = (r/(n-1)) * (r/S), and 0 when
nothing reaches v. A file that is only read from is source-only after
orientation, so its closeness is exactly 0.

Eigenvector centrality is power iteration on the in-edge adjacency (max 200
rounds, tolerance 1e-8, L2-normalized, then rescaled to max 1). Acyclic graphs
short-circuit to exact zeros; non-convergence also yields zeros and clears the
table's `eigenvector_converged` flag.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .graphs import (
    DirectedView,
    NodeKind,
    ProvGraph,
    orient_edges,
    simple_predecessors,
    simple_successors,
    undirected_projection,
    UndirectedView,
)

EIGENVECTOR_MAX_ITERS = 200
EIGENVECTOR_TOL = 1e-8

# Aggregation emits these six per-node features, in this order.
NODE_FEATURES = (
    "degree_centrality",
    "closeness_centrality",
    "betweenness_centrality",
    "eigenvector_centrality",
    "triangles",
    "clustering_coefficient",
)

KIND_ORDER = (NodeKind.PROCESS, NodeKind.FILE, NodeKind.SOCKET)


@dataclass
class NodeFeatureTable:
    """Per-node feature maps keyed by node id."""

    degree_centrality: dict[str, float]
    closeness_centrality: dict[str, float]
    betweenness_centrality: dict[str, float]
    eigenvector_centrality: dict[str, float]
    triangles: dict[str, int]
    clustering_coefficient: dict[str, float]
    eigenvector_converged: bool = True

    def feature(self, name: str) -> dict:
        if name not in NODE_FEATURES:
            raise KeyError(name)
        return getattr(self, name)


def degree_values(view: DirectedView) -> list[float]:
    """(in + out) degree over the directed multigraph, / (n-1); 0 when n=1."""
    n = view.n
    deg = [0] * n
    for u, v in view.edges:
        deg[u] += 1
        deg[v] += 1
    if n <= 1:
        return [0.0] * n
    return [d / (n - 1) for d in deg]


def closeness_values(view: DirectedView) -> list[float]:
    n = view.n
    if n <= 1:
        return [0.0] * n
    preds = simple_predecessors(view)
    out = []
    for v in range(n):
        # BFS over in-edges gives d(u -> v) for every u that reaches v
        dist = {v: 0}
        queue = deque([v])
        total = 0
        while queue:
            w = queue.popleft()
            for u in preds[w]:
                if u not in dist:
                    dist[u] = dist[w] + 1
                    total += dist[u]
                    queue.append(u)
        r = len(dist) - 1
        out.append(0.0 if r == 0 else (r / (n - 1)) * (r / total))
    return out


def betweenness_values(view: DirectedView) -> list[float]:
    """Brandes accumulation over the simple directed graph, /((n-1)(n-2))."""
    n = view.n
    if n <= 2:
        return [0.0] * n
    succ = simple_successors(view)
    bc = [0.0] * n
    for s in range(n):
        stack: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0.0] * n
        sigma[s] = 1.0
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    norm = (n - 1) * (n - 2)
    return [x / norm for x in bc]


def is_acyclic(view: DirectedView) -> bool:
    """Kahn's algorithm; multiplicity is irrelevant to cycle detection."""
    n = view.n
    succ = simple_successors(view)
    indeg = [0] * n
    for u in range(n):
        for v in succ[u]:
            indeg[v] += 1
    queue = deque(v for v in range(n) if indeg[v] == 0)
    seen = 0
    while queue:
        u = queue.popleft()
        seen += 1
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == n


def eigenvector_values(view: DirectedView) -> tuple[list[float], bool]:
    """Returns (values, converged). Acyclic graphs are exact zeros."""
    n = view.n
    if n == 0:
        return [], True
    if is_acyclic(view):
        return [0.0] * n, True
    src = np.fromiter((u for u, _ in view.edges), dtype=np.int64, count=len(view.edges))
    dst = np.fromiter((v for _, v in view.edges), dtype=np.int64, count=len(view.edges))
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(EIGENVECTOR_MAX_ITERS):
        nxt = np.zeros(n)
        np.add.at(nxt, dst, x[src])
        norm = float(np.linalg.norm(nxt))
        if norm == 0.0:
            return [0.0] * n, False
        nxt /= norm
        if float(np.linalg.norm(nxt - x)) < EIGENVECTOR_TOL:
            top = float(nxt.max())
            return (nxt / top).tolist(), True
        x = nxt
    return [0.0] * n, False


def clustering_values(view: UndirectedView) -> tuple[list[int], list[float]]:
    """Per-node triangle counts and 2T/(k(k-1)) coefficients."""
    n = view.n
    tri = [0] * n
    coeff = [0.0] * n
    for v in range(n):
        neighbors = sorted(view.adj[v])
        count = 0
        for i, a in enumerate(neighbors):
            adj_a = view.adj[a]
            for b in neighbors[i + 1 :]:
                if b in adj_a:
                    count += 1
        tri[v] = count
        k = len(neighbors)
        if k >= 2:
            coeff[v] = 2.0 * count / (k * (k - 1))
    return tri, coeff


def node_features(g: ProvGraph) -> NodeFeatureTable:
    """Compute every per-node structural feature for one graph."""
    view = orient_edges(g)
    uview = undirected_projection(g)
    ids = view.node_ids
    eig, converged = eigenvector_values(view)
    tri, coeff = clustering_values(uview)
    return NodeFeatureTable(
        degree_centrality=dict(zip(ids, degree_values(view))),
        closeness_centrality=dict(zip(ids, closeness_values(view))),
        betweenness_centrality=dict(zip(ids, betweenness_values(view))),
        eigenvector_centrality=dict(zip(ids, eig)),
        triangles=dict(zip(ids, tri)),
        clustering_coefficient=dict(zip(ids, coeff)),
        eigenvector_converged=converged,
    )


# spec-shaped conveniences over whole graphs

def degree_centrality(g: ProvGraph) -> dict[str, float]:
    view = orient_edges(g)
    return dict(zip(view.node_ids, degree_values(view)))


def closeness_centrality(g: ProvGraph) -> dict[str, float]:
    view = orient_edges(g)
    return dict(zip(view.node_ids, closeness_values(view)))


def betweenness_centrality(g: ProvGraph) -> dict[str, float]:
    view = orient_edges(g)
    return dict(zip(view.node_ids, betweenness_values(view)))


def eigenvector_centrality(g: ProvGraph) -> tuple[dict[str, float], bool]:
    view = orient_edges(g)
    values, converged = eigenvector_values(view)
    return dict(zip(view.node_ids, values)), converged


def clustering(g: ProvGraph) -> tuple[dict[str, int], dict[str, float]]:
    uview = undirected_projection(g)
    tri, coeff = clustering_values(uview)
    return dict(zip(uview.node_ids, tri)), dict(zip(uview.node_ids, coeff))


def _reduce(values: list[float], agg: str) -> float:
    if not values:
        return 0.0
    if agg == "mean":
        return float(sum(values) / len(values))
    if agg == "max":
        return float(max(values))
    raise ValueError(f"unknown aggregation '{agg}'")


def aggregate_by_kind(table: NodeFeatureTable, g: ProvGraph, agg: str = "mean") -> dict[str, float]:
    """18 named features: each node feature averaged separately per node kind.

    Kinds with no nodes contribute 0 so downstream training always sees a
    total feature map. `agg="max"` is available but excluded from the default
    canonical vector.
    """
    by_kind: dict[NodeKind, list[str]] = {kind: [] for kind in KIND_ORDER}
    for node in g.nodes:
        by_kind[node.kind].append(node.id)
    out: dict[str, float] = {}
    for kind in KIND_ORDER:
        ids = by_kind[kind]
        for feat in NODE_FEATURES:
            column = table.feature(feat)
            out[f"{kind.value}_{feat}"] = _reduce([float(column[i]) for i in ids], agg)
    return out


def aggregate_overall(table: NodeFeatureTable, agg: str = "mean") -> dict[str, float]:
    """The 6 type-blind means over all nodes, named all_<feature>."""
    out: dict[str, float] = {}
    for feat in NODE_FEATURES:
        column = table.feature(feat)
        out[f"all_{feat}"] = _reduce([float(v) for v in column.values()], agg)
    return out
