"""Hand-built graph fixtures and terse constructors shared across the suite."""

from __future__ import annotations

from provex.graphs import ProvGraph, from_dict


def mk(nodes, edges, gid="g", label=None) -> ProvGraph:
    """Build a validated graph from terse tuples.

    nodes: iterable of (id, kind) or (id, kind, attrs)
    edges: iterable of (src, dst, op) or (src, dst, op, ts)
    """
    node_objs = []
    for item in nodes:
        node_id, kind = item[0], item[1]
        attrs = item[2] if len(item) > 2 else {}
        node_objs.append({"id": node_id, "kind": kind, "attrs": attrs})
    edge_objs = []
    for item in edges:
        src, dst, op = item[0], item[1], item[2]
        ts = item[3] if len(item) > 3 else None
        edge_objs.append({"src": src, "dst": dst, "op": op, "ts": ts})
    return from_dict({"graph_id": gid, "label": label, "nodes": node_objs, "edges": edge_objs})


def dropper_fixture() -> ProvGraph:
    """Five nodes, four edges: the dropper triangle plus an unrelated dll read.

    p writes f, p forks c, c execs f; q reads d off to the side. The read is
    stored process-first to exercise orientation normalization.
    """
    return mk(
        nodes=[
            ("p", "process", {"image": "stager"}),
            ("c", "process", {"image": "payload"}),
            ("f", "file", {"path": "/tmp/payload.bin"}),
            ("q", "process", {"image": "svcd"}),
            ("d", "file", {"path": "/usr/lib/libio.so"}),
        ],
        edges=[
            ("p", "f", "write", 1),
            ("p", "c", "fork", 2),
            ("f", "c", "exec", 3),
            ("q", "d", "read", 4),
        ],
        gid="dropper-fixture",
        label="malicious",
    )


def k3_fixture() -> ProvGraph:
    """Triangle on {p, c, f}: write + fork + exec. Also a dropper triple."""
    return mk(
        nodes=[("p", "process"), ("c", "process"), ("f", "file")],
        edges=[("p", "f", "write"), ("p", "c", "fork"), ("f", "c", "exec")],
        gid="k3",
    )


def clone_fixture() -> ProvGraph:
    return mk(
        nodes=[("p", "process"), ("c", "process"), ("f", "file")],
        edges=[("f", "p", "exec"), ("p", "c", "fork"), ("f", "c", "exec")],
        gid="clone",
    )


def probe_fixture() -> ProvGraph:
    return mk(
        nodes=[("p", "process"), ("c", "process"), ("f", "file")],
        edges=[("f", "p", "read"), ("p", "c", "fork"), ("f", "c", "exec")],
        gid="probe",
    )


def flower_fixture(n_reads=4) -> ProvGraph:
    nodes = [("p", "process")] + [(f"r{i}", "file") for i in range(n_reads)]
    edges = [(f"r{i}", "p", "read") for i in range(n_reads)]
    return mk(nodes, edges, gid="flower")
