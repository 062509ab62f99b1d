"""Typed provenance graphs: domain model, on-disk JSON format, edge orientation.

A provenance graph is a directed multigraph over three node kinds (process,
file, socket) whose edges are syscall-level events. The raw file format stores
edges as recorded; `orient_edges` rewrites them into the fixed
information-flow direction used by every downstream feature:

    read     file    -> process
    exec     file    -> process
    write    process -> file
    fork     parent  -> child        (stored src is the parent)
    send     process -> socket
    connect  process -> socket
    recv     socket  -> process

A file that is only ever read from is therefore source-only and unreachable,
which is what makes the zero-closeness signal for read-only files work.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class GraphFormatError(ValueError):
    """A graph file violated the format or a graph invariant."""


class NodeKind(str, Enum):
    PROCESS = "process"
    FILE = "file"
    SOCKET = "socket"


class EdgeOp(str, Enum):
    READ = "read"
    WRITE = "write"
    EXEC = "exec"
    FORK = "fork"
    SEND = "send"
    RECV = "recv"
    CONNECT = "connect"


# Required endpoint kinds per op. Fork is ordered (src is the parent); the
# others accept either stored order as long as the unordered kind pair fits.
FILE_OPS = frozenset({EdgeOp.READ, EdgeOp.WRITE, EdgeOp.EXEC})
SOCKET_OPS = frozenset({EdgeOp.SEND, EdgeOp.RECV, EdgeOp.CONNECT})


@dataclass
class ProvNode:
    id: str
    kind: NodeKind
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class ProvEdge:
    src: str
    dst: str
    op: EdgeOp
    ts: int | None = None


@dataclass(frozen=True)
class DirectedView:
    """Oriented adjacency of a graph: node ids in load order, edges as index
    pairs in information-flow direction, one entry per ProvEdge (multi-edges
    retained). `ops` is aligned with `edges`."""

    n: int
    edges: tuple[tuple[int, int], ...]
    ops: tuple[EdgeOp, ...] = ()
    node_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class UndirectedView:
    """Simple undirected projection: adjacency sets by node index, parallel
    edges and direction collapsed, no self-loops."""

    n: int
    adj: tuple[frozenset[int], ...]
    node_ids: tuple[str, ...] = ()


@dataclass
class ProvGraph:
    graph_id: str
    label: str | None
    nodes: list[ProvNode]
    edges: list[ProvEdge]
    _directed: DirectedView | None = field(default=None, compare=False, repr=False)
    _undirected: UndirectedView | None = field(default=None, compare=False, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node_index(self) -> dict[str, int]:
        return {node.id: i for i, node in enumerate(self.nodes)}

    def kind_of(self) -> dict[str, NodeKind]:
        return {node.id: node.kind for node in self.nodes}


def validate_graph(g: ProvGraph) -> None:
    """Check every graph invariant, raising GraphFormatError with the index of
    the offending node or edge.

    Invariants: unique node ids, edge endpoints resolve, no self-loops, and
    endpoint kinds consistent with the edge op (read/write/exec between a
    process and a file, fork process to process, send/recv/connect between a
    process and a socket).
    """
    seen: dict[str, int] = {}
    for i, node in enumerate(g.nodes):
        if node.id in seen:
            raise GraphFormatError(
                f"duplicate node id at node {i}: '{node.id}' (first at node {seen[node.id]})"
            )
        seen[node.id] = i
    kinds = g.kind_of()
    for i, edge in enumerate(g.edges):
        for endpoint in (edge.src, edge.dst):
            if endpoint not in kinds:
                raise GraphFormatError(f"dangling endpoint at edge {i}: '{endpoint}'")
        if edge.src == edge.dst:
            raise GraphFormatError(f"self-loop at edge {i}: '{edge.src}'")
        src_kind, dst_kind = kinds[edge.src], kinds[edge.dst]
        if edge.op is EdgeOp.FORK:
            ok = src_kind is NodeKind.PROCESS and dst_kind is NodeKind.PROCESS
        elif edge.op in FILE_OPS:
            ok = {src_kind, dst_kind} == {NodeKind.PROCESS, NodeKind.FILE}
        else:
            ok = {src_kind, dst_kind} == {NodeKind.PROCESS, NodeKind.SOCKET}
        if not ok:
            raise GraphFormatError(
                f"op/kind mismatch at edge {i}: op '{edge.op.value}' cannot connect "
                f"{src_kind.value} '{edge.src}' to {dst_kind.value} '{edge.dst}'"
            )


def _oriented_endpoints(edge: ProvEdge, kinds: dict[str, NodeKind]) -> tuple[str, str]:
    op = edge.op
    if op is EdgeOp.FORK:
        return edge.src, edge.dst
    if op in (EdgeOp.READ, EdgeOp.EXEC):
        source_kind = NodeKind.FILE
    elif op is EdgeOp.WRITE:
        source_kind = NodeKind.PROCESS
    elif op is EdgeOp.RECV:
        source_kind = NodeKind.SOCKET
    else:  # send, connect
        source_kind = NodeKind.PROCESS
    if kinds[edge.src] is source_kind:
        return edge.src, edge.dst
    return edge.dst, edge.src


def orient_edges(g: ProvGraph) -> DirectedView:
    """Return the information-flow directed adjacency of a valid graph.

    Pure function of (op, endpoint kinds); the result is cached on the graph
    and one directed edge is emitted per ProvEdge, multi-edges included.
    """
    if g._directed is not None:
        return g._directed
    index = g.node_index()
    kinds = g.kind_of()
    edges = []
    ops = []
    for edge in g.edges:
        u, v = _oriented_endpoints(edge, kinds)
        edges.append((index[u], index[v]))
        ops.append(edge.op)
    view = DirectedView(
        n=len(g.nodes),
        edges=tuple(edges),
        ops=tuple(ops),
        node_ids=tuple(node.id for node in g.nodes),
    )
    g._directed = view
    return view


def undirected_projection(g: ProvGraph) -> UndirectedView:
    """Simple undirected projection used by the triangle features."""
    if g._undirected is not None:
        return g._undirected
    n = len(g.nodes)
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in orient_edges(g).edges:
        adj[u].add(v)
        adj[v].add(u)
    view = UndirectedView(
        n=n,
        adj=tuple(frozenset(s) for s in adj),
        node_ids=tuple(node.id for node in g.nodes),
    )
    g._undirected = view
    return view


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise GraphFormatError(message)


def from_dict(data: object) -> ProvGraph:
    """Build and validate a ProvGraph from parsed JSON."""
    _require(isinstance(data, dict), "graph must be a JSON object")
    assert isinstance(data, dict)
    graph_id = data.get("graph_id")
    _require(isinstance(graph_id, str) and graph_id != "", "missing or empty 'graph_id'")
    label = data.get("label")
    _require(label is None or isinstance(label, str), "'label' must be a string or null")
    raw_nodes = data.get("nodes", [])
    raw_edges = data.get("edges", [])
    _require(isinstance(raw_nodes, list), "'nodes' must be a list")
    _require(isinstance(raw_edges, list), "'edges' must be a list")

    nodes = []
    for i, item in enumerate(raw_nodes):
        _require(isinstance(item, dict), f"node {i}: must be an object")
        node_id = item.get("id")
        _require(isinstance(node_id, str) and node_id != "", f"node {i}: missing 'id'")
        kind_raw = item.get("kind")
        try:
            kind = NodeKind(kind_raw)
        except ValueError:
            raise GraphFormatError(f"unknown node kind at node {i}: {kind_raw!r}") from None
        attrs = item.get("attrs", {})
        _require(isinstance(attrs, dict), f"node {i}: 'attrs' must be an object")
        for key, value in attrs.items():
            _require(isinstance(value, str), f"node {i}: attr {key!r} must be a string")
        nodes.append(ProvNode(id=node_id, kind=kind, attrs=dict(attrs)))

    edges = []
    for i, item in enumerate(raw_edges):
        _require(isinstance(item, dict), f"edge {i}: must be an object")
        src, dst = item.get("src"), item.get("dst")
        _require(isinstance(src, str), f"edge {i}: missing 'src'")
        _require(isinstance(dst, str), f"edge {i}: missing 'dst'")
        op_raw = item.get("op")
        try:
            op = EdgeOp(op_raw)
        except ValueError:
            raise GraphFormatError(f"unknown edge op at edge {i}: {op_raw!r}") from None
        ts = item.get("ts")
        _require(ts is None or isinstance(ts, int), f"edge {i}: 'ts' must be an integer or null")
        edges.append(ProvEdge(src=src, dst=dst, op=op, ts=ts))

    graph = ProvGraph(graph_id=graph_id, label=label, nodes=nodes, edges=edges)
    validate_graph(graph)
    return graph


def to_dict(g: ProvGraph) -> dict:
    return {
        "graph_id": g.graph_id,
        "label": g.label,
        "nodes": [
            {"id": node.id, "kind": node.kind.value, "attrs": dict(node.attrs)}
            for node in g.nodes
        ],
        "edges": [
            {"src": edge.src, "dst": edge.dst, "op": edge.op.value, "ts": edge.ts}
            for edge in g.edges
        ],
    }


def _check_caps(g: ProvGraph, max_nodes: int | None, max_edges: int | None) -> None:
    # The cap rejects rather than truncates; truncation semantics are undefined.
    if max_nodes is not None and g.n_nodes > max_nodes:
        raise GraphFormatError(
            f"graph '{g.graph_id}' exceeds max_nodes cap ({g.n_nodes} > {max_nodes})"
        )
    if max_edges is not None and g.n_edges > max_edges:
        raise GraphFormatError(
            f"graph '{g.graph_id}' exceeds max_edges cap ({g.n_edges} > {max_edges})"
        )


def loads_graph(text: str, max_nodes: int | None = None, max_edges: int | None = None) -> ProvGraph:
    """Parse one graph from a JSON string (the subprocess wire format)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc}") from None
    graph = from_dict(data)
    _check_caps(graph, max_nodes, max_edges)
    return graph


def dumps_graph(g: ProvGraph) -> str:
    """Compact single-line JSON rendering (subprocess wire format)."""
    return json.dumps(to_dict(g), separators=(",", ":"))


def load_graph(path: str | Path, max_nodes: int | None = None, max_edges: int | None = None) -> ProvGraph:
    """Load and validate one graph file.

    Args:
        path: UTF-8 JSON file in the graph format.
        max_nodes: optional size cap; oversized graphs are rejected, never
            truncated. Off by default.
        max_edges: same, for the edge count.

    Raises:
        GraphFormatError: parse failure or invariant violation, with the node
            or edge index in the message.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphFormatError(f"cannot read {path}: {exc}") from None
    try:
        return loads_graph(text, max_nodes=max_nodes, max_edges=max_edges)
    except GraphFormatError as exc:
        raise GraphFormatError(f"{path}: {exc}") from None


def save_graph(g: ProvGraph, path: str | Path) -> None:
    """Write the graph as stable, human-readable JSON (round-trips exactly)."""
    Path(path).write_text(json.dumps(to_dict(g), indent=2) + "\n", encoding="utf-8")


def load_corpus_graphs(
    corpus_dir: str | Path,
    max_nodes: int | None = None,
    max_edges: int | None = None,
) -> list[ProvGraph]:
    """Load every .json graph in a corpus directory, sorted by filename."""
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise GraphFormatError(f"corpus directory not found: {corpus_dir}")
    graphs = []
    for path in sorted(corpus_dir.glob("*.json")):
        graphs.append(load_graph(path, max_nodes=max_nodes, max_edges=max_edges))
    return graphs


def successors_multi(view: DirectedView) -> list[list[int]]:
    """Outgoing adjacency lists with parallel edges repeated."""
    out: list[list[int]] = [[] for _ in range(view.n)]
    for u, v in view.edges:
        out[u].append(v)
    return out


def predecessors_multi(view: DirectedView) -> list[list[int]]:
    inc: list[list[int]] = [[] for _ in range(view.n)]
    for u, v in view.edges:
        inc[v].append(u)
    return inc


def simple_successors(view: DirectedView) -> list[set[int]]:
    """Outgoing adjacency with parallel edges collapsed (path semantics)."""
    out: list[set[int]] = [set() for _ in range(view.n)]
    for u, v in view.edges:
        out[u].add(v)
    return out


def simple_predecessors(view: DirectedView) -> list[set[int]]:
    inc: list[set[int]] = [set() for _ in range(view.n)]
    for u, v in view.edges:
        inc[v].add(u)
    return inc
