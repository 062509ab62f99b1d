"""Security-domain motif counts and socket-locality features.

Motifs are distinct (parent process, file, child process) triples; no temporal
ordering is required and event multiplicities do not inflate the counts:

  dropper  Write(P->F), Fork(P->C), Exec(F,C)
  clone    Exec(F,P),   Fork(P->C), Exec(F,C)
  probe    Read(F->P),  Fork(P->C), Exec(F,C)

Exec/read/write pairs are normalized to (process, file) before matching, so
stored endpoint order never matters. The counters are independent: a triple
with both Write(P->F) and Read(F->P) scores as dropper and probe.

Socket locality buckets a socket node by its `ip` attribute into Internal
(private/loopback/link-local ranges), External (any other parsed address), or
Unknown (missing or unparseable, excluded from all locality counts).
Send/Connect edges count as socket writes, Recv edges as socket reads; these
are per-event counts, so parallel edges add up.
"""

from __future__ import annotations

import ipaddress
from collections import defaultdict
from dataclasses import dataclass, fields
from enum import Enum

from .graphs import EdgeOp, NodeKind, ProvGraph, ProvNode

_INTERNAL_NETWORKS = tuple(
    ipaddress.ip_network(spec)
    for spec in (
        "10.0.0.0/8",
        "172.16.0.0/12",
        "192.168.0.0/16",
        "127.0.0.0/8",
        "169.254.0.0/16",
        "::1/128",
        "fc00::/7",
        "fe80::/10",
    )
)

_WRITE_OPS = frozenset({EdgeOp.SEND, EdgeOp.CONNECT})


class SocketLocality(str, Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class MotifCounts:
    """The 9 security features, in canonical feature-vector order."""

    dropper_triangles: int = 0
    clone_triangles: int = 0
    probe_triangles: int = 0
    internal_socket_writes: int = 0
    external_socket_writes: int = 0
    internal_socket_reads: int = 0
    external_socket_reads: int = 0
    internal_sockets: int = 0
    external_sockets: int = 0

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def classify_socket(node: ProvNode) -> SocketLocality:
    """Pure function of the node's `ip` attribute string."""
    ip = node.attrs.get("ip")
    if not ip:
        return SocketLocality.UNKNOWN
    text = ip.strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    try:
        addr = ipaddress.ip_address(text)
    except ValueError:
        return SocketLocality.UNKNOWN
    if any(addr in net for net in _INTERNAL_NETWORKS if net.version == addr.version):
        return SocketLocality.INTERNAL
    return SocketLocality.EXTERNAL


def _process_file_pairs(g: ProvGraph):
    """Distinct (process, file) pairs per op, plus fork (parent, child) pairs."""
    kinds = g.kind_of()
    writes: set[tuple[str, str]] = set()
    reads: set[tuple[str, str]] = set()
    execs: set[tuple[str, str]] = set()
    forks: set[tuple[str, str]] = set()
    for edge in g.edges:
        if edge.op is EdgeOp.FORK:
            forks.add((edge.src, edge.dst))
            continue
        if edge.op is EdgeOp.WRITE:
            bucket = writes
        elif edge.op is EdgeOp.READ:
            bucket = reads
        elif edge.op is EdgeOp.EXEC:
            bucket = execs
        else:
            continue
        if kinds[edge.src] is NodeKind.PROCESS:
            bucket.add((edge.src, edge.dst))
        else:
            bucket.add((edge.dst, edge.src))
    return writes, reads, execs, forks


def _count_triples(forks, execs, parent_rel) -> int:
    exec_files: dict[str, set[str]] = defaultdict(set)
    for proc, file in execs:
        exec_files[proc].add(file)
    total = 0
    for parent, child in forks:
        for file in exec_files.get(child, ()):
            if (parent, file) in parent_rel:
                total += 1
    return total


def count_dropper_triangles(g: ProvGraph) -> int:
    writes, _, execs, forks = _process_file_pairs(g)
    return _count_triples(forks, execs, writes)


def count_clone_triangles(g: ProvGraph) -> int:
    _, _, execs, forks = _process_file_pairs(g)
    return _count_triples(forks, execs, execs)


def count_probe_triangles(g: ProvGraph) -> int:
    _, reads, execs, forks = _process_file_pairs(g)
    return _count_triples(forks, execs, reads)


def socket_locality_counts(g: ProvGraph) -> MotifCounts:
    """Locality fields only; motif triangle fields stay 0 here."""
    kinds = g.kind_of()
    locality = {
        node.id: classify_socket(node)
        for node in g.nodes
        if node.kind is NodeKind.SOCKET
    }
    writes = {SocketLocality.INTERNAL: 0, SocketLocality.EXTERNAL: 0, SocketLocality.UNKNOWN: 0}
    reads = dict(writes)
    for edge in g.edges:
        if edge.op in _WRITE_OPS:
            sock = edge.dst if kinds[edge.dst] is NodeKind.SOCKET else edge.src
            writes[locality[sock]] += 1
        elif edge.op is EdgeOp.RECV:
            sock = edge.dst if kinds[edge.dst] is NodeKind.SOCKET else edge.src
            reads[locality[sock]] += 1
    tally = list(locality.values())
    return MotifCounts(
        internal_socket_writes=writes[SocketLocality.INTERNAL],
        external_socket_writes=writes[SocketLocality.EXTERNAL],
        internal_socket_reads=reads[SocketLocality.INTERNAL],
        external_socket_reads=reads[SocketLocality.EXTERNAL],
        internal_sockets=tally.count(SocketLocality.INTERNAL),
        external_sockets=tally.count(SocketLocality.EXTERNAL),
    )


def motif_counts(g: ProvGraph) -> MotifCounts:
    """All 9 security features for one graph."""
    writes, reads, execs, forks = _process_file_pairs(g)
    locality = socket_locality_counts(g)
    return MotifCounts(
        dropper_triangles=_count_triples(forks, execs, writes),
        clone_triangles=_count_triples(forks, execs, execs),
        probe_triangles=_count_triples(forks, execs, reads),
        internal_socket_writes=locality.internal_socket_writes,
        external_socket_writes=locality.external_socket_writes,
        internal_socket_reads=locality.internal_socket_reads,
        external_socket_reads=locality.external_socket_reads,
        internal_sockets=locality.internal_sockets,
        external_sockets=locality.external_sockets,
    )
