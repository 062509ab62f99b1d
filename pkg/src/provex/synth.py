"""Synthetic provenance-corpus generator.

Each template realizes one behavioral archetype with an exact, per-graph
motif signature (checked at generation time, not just in expectation):

  benign-flower      1 process, 10-40 file reads, 1-2 log writes; no motifs.
  benign-chain       fork chain of 2-5 workers, 3-10 reads and <= 2 writes
                     per link, sometimes a shared lock file; no exec edges,
                     so no security motifs.
  benign-resolver    1 process querying 3-8 internal DNS-style sockets
                     (send/recv); internal locality only, no motifs.
  benign-shared-db   2-4 services all reading the same 5-15 shared .so/.DB
                     files; no sockets, no motifs.
  dropper-chain      L in 2-5 links, each Write tmp + Fork + child Exec of
                     the tmp => dropper_triangles == L exactly.
  ddos-internal      core forks 5-15 bots, each sending once to 2-6
                     internal-ip sockets; internal_socket_writes == sends.
  ddos-external      same shape with external ips and 5-10 sends per
                     socket; external_socket_writes == sends.
  clone-probe-storm  R in 20-60 probe rounds (read+fork+child exec) plus
                     1-5 clone triangles (parent and child exec the same
                     image) => probe_triangles == R, clone_triangles == C.

Generation is deterministic: graph i of generate(t, count, seed) draws from
random.Random(seed * 1_000_003 + i), so (template, seed, count) fully
determines the corpus byte-for-byte. The optional noise knob appends up to
10% extra benign-looking read/write edges against fresh files; fresh files
carry no exec edge, so noise can never mint a motif (re-checked anyway).
"""

from __future__ import annotations

import csv
import hashlib
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .graphs import (
    EdgeOp,
    GraphFormatError,
    NodeKind,
    ProvEdge,
    ProvGraph,
    ProvNode,
    load_graph,
    save_graph,
    validate_graph,
)
from .security import MotifCounts, motif_counts

TRAIN_PCT = 80
MAX_NOISE = 0.1

MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = ("graph_id", "label", "family", "split")


class _Builder:
    """Accumulates nodes and edges with sequential ids and timestamps."""

    def __init__(self):
        self.nodes: list[ProvNode] = []
        self.edges: list[ProvEdge] = []
        self._seq = {"p": 0, "f": 0, "s": 0}

    def _next(self, prefix: str) -> str:
        nid = f"{prefix}{self._seq[prefix]}"
        self._seq[prefix] += 1
        return nid

    def process(self, exe: str) -> str:
        nid = self._next("p")
        self.nodes.append(ProvNode(nid, NodeKind.PROCESS, {"exe": exe}))
        return nid

    def file(self, path: str) -> str:
        nid = self._next("f")
        self.nodes.append(ProvNode(nid, NodeKind.FILE, {"path": path}))
        return nid

    def socket(self, ip: str) -> str:
        nid = self._next("s")
        self.nodes.append(ProvNode(nid, NodeKind.SOCKET, {"ip": ip}))
        return nid

    def op(self, src: str, dst: str, op: EdgeOp) -> None:
        self.edges.append(ProvEdge(src, dst, op, ts=len(self.edges)))

    @property
    def processes(self) -> list[str]:
        return [n.id for n in self.nodes if n.kind is NodeKind.PROCESS]


@dataclass(frozen=True)
class Template:
    """A behavioral archetype: label, family tag, and parameter ranges."""

    name: str
    label: str
    family: str
    params: dict[str, tuple[int, int]]
    build: Callable[[_Builder, random.Random, dict[str, tuple[int, int]]], dict]
    check: Callable[[MotifCounts, dict], None]
    noise: float = 0.0

    def with_label(self, label: str) -> "Template":
        return replace(self, label=label)

    def with_params(self, **ranges: tuple[int, int]) -> "Template":
        return replace(self, params={**self.params, **ranges})

    def with_noise(self, noise: float) -> "Template":
        return replace(self, noise=noise)


@dataclass
class Corpus:
    """Generated graphs plus their template family tags and split labels."""

    graphs: list[ProvGraph]
    families: dict[str, str] = field(default_factory=dict)
    splits: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.graphs)

    def split_of(self, graph_id: str) -> str:
        return self.splits.get(graph_id) or hash_split(graph_id)

    def extend(self, other: "Corpus") -> None:
        self.graphs.extend(other.graphs)
        self.families.update(other.families)
        self.splits.update(other.splits)


def _draw(rng: random.Random, params: dict, key: str) -> int:
    lo, hi = params[key]
    return rng.randint(lo, hi)


def _no_motifs(counts: MotifCounts, allow_internal=False) -> None:
    assert counts.dropper_triangles == 0
    assert counts.clone_triangles == 0
    assert counts.probe_triangles == 0
    assert counts.external_sockets == 0
    assert counts.external_socket_writes == 0
    assert counts.external_socket_reads == 0
    if not allow_internal:
        assert counts.internal_sockets == 0
        assert counts.internal_socket_writes == 0
        assert counts.internal_socket_reads == 0


def _build_flower(b: _Builder, rng: random.Random, params: dict) -> dict:
    p = b.process("logviewer")
    reads = _draw(rng, params, "reads")
    for i in range(reads):
        b.op(b.file(f"/var/data/in{i}.log"), p, EdgeOp.READ)
    writes = _draw(rng, params, "log_writes")
    for j in range(writes):
        b.op(p, b.file(f"/var/log/out{j}.log"), EdgeOp.WRITE)
    return {"reads": reads, "writes": writes}


def _check_flower(counts: MotifCounts, info: dict) -> None:
    _no_motifs(counts)


def _build_chain(b: _Builder, rng: random.Random, params: dict) -> dict:
    length = _draw(rng, params, "links")
    procs = [b.process(f"worker{i}") for i in range(length)]
    for parent, child in zip(procs, procs[1:]):
        b.op(parent, child, EdgeOp.FORK)
    for i, p in enumerate(procs):
        for r in range(_draw(rng, params, "reads")):
            b.op(b.file(f"/srv/spool/job{i}_{r}.dat"), p, EdgeOp.READ)
        for w in range(_draw(rng, params, "writes")):
            b.op(p, b.file(f"/srv/out/part{i}_{w}.dat"), EdgeOp.WRITE)
    if rng.random() < 0.5:
        # adjacent workers share one lock file: a benign triangle, no exec
        lock = b.file("/run/app.lock")
        i = rng.randrange(length - 1)
        b.op(procs[i], lock, EdgeOp.WRITE)
        b.op(procs[i + 1], lock, EdgeOp.WRITE)
    return {"links": length}


def _check_chain(counts: MotifCounts, info: dict) -> None:
    _no_motifs(counts)


def _build_resolver(b: _Builder, rng: random.Random, params: dict) -> dict:
    p = b.process("resolver")
    for c in range(_draw(rng, params, "configs")):
        b.op(b.file(f"/etc/net/conf{c}"), p, EdgeOp.READ)
    queries = _draw(rng, params, "queries")
    total_sends = 0
    for _ in range(queries):
        s = b.socket(f"10.0.0.{rng.randint(2, 254)}")
        sends = _draw(rng, params, "sends")
        total_sends += sends
        for _ in range(sends):
            b.op(p, s, EdgeOp.SEND)
        b.op(s, p, EdgeOp.RECV)
    return {"queries": queries, "sends": total_sends}


def _check_resolver(counts: MotifCounts, info: dict) -> None:
    _no_motifs(counts, allow_internal=True)
    assert counts.internal_sockets == info["queries"]
    assert counts.internal_socket_writes == info["sends"]
    assert counts.internal_socket_reads == info["queries"]


def _build_shared_db(b: _Builder, rng: random.Random, params: dict) -> dict:
    nproc = _draw(rng, params, "procs")
    nfiles = _draw(rng, params, "files")
    shared = [
        b.file(f"/usr/lib/libshared{j}.so" if j % 2 else f"/srv/db/table{j}.DB")
        for j in range(nfiles)
    ]
    for i in range(nproc):
        p = b.process(f"svc{i}")
        for f in shared:
            b.op(f, p, EdgeOp.READ)
        if rng.random() < 0.5:
            b.op(p, b.file(f"/srv/db/journal{i}"), EdgeOp.WRITE)
    return {"procs": nproc, "files": nfiles}


def _check_shared_db(counts: MotifCounts, info: dict) -> None:
    _no_motifs(counts)


def _build_dropper(b: _Builder, rng: random.Random, params: dict) -> dict:
    links = _draw(rng, params, "links")
    parent = b.process("stage0")
    for i in range(links):
        tmp = b.file(f"/tmp/payload{i}.exe")
        child = b.process(f"stage{i + 1}")
        b.op(parent, tmp, EdgeOp.WRITE)
        b.op(parent, child, EdgeOp.FORK)
        b.op(tmp, child, EdgeOp.EXEC)
        parent = child
    return {"links": links}


def _check_dropper(counts: MotifCounts, info: dict) -> None:
    assert counts.dropper_triangles == info["links"]
    assert counts.clone_triangles == 0
    assert counts.probe_triangles == 0
    assert counts.internal_sockets == 0 and counts.external_sockets == 0


def _internal_ip(rng: random.Random) -> str:
    kind = rng.randrange(3)
    if kind == 0:
        return f"10.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"
    if kind == 1:
        return f"192.168.{rng.randint(0, 255)}.{rng.randint(1, 254)}"
    return f"172.{rng.randint(16, 31)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"


# first octets that fall in no internal range (and are not 127/169/172/192)
_PUBLIC_OCTETS = (8, 9, 23, 45, 77, 93, 203)


def _external_ip(rng: random.Random) -> str:
    return (
        f"{rng.choice(_PUBLIC_OCTETS)}.{rng.randint(0, 255)}"
        f".{rng.randint(0, 255)}.{rng.randint(1, 254)}"
    )


def _build_ddos(b: _Builder, rng: random.Random, params: dict,
                ip_of: Callable[[random.Random], str]) -> dict:
    core = b.process("bot")
    children = _draw(rng, params, "children")
    total_sends = 0
    n_sockets = 0
    for j in range(children):
        child = b.process(f"copy{j}")
        b.op(core, child, EdgeOp.FORK)
        for _ in range(_draw(rng, params, "sockets")):
            s = b.socket(ip_of(rng))
            n_sockets += 1
            sends = _draw(rng, params, "sends")
            total_sends += sends
            for _ in range(sends):
                b.op(child, s, EdgeOp.SEND)
    return {"children": children, "sockets": n_sockets, "sends": total_sends}


def _build_ddos_internal(b, rng, params):
    return _build_ddos(b, rng, params, _internal_ip)


def _build_ddos_external(b, rng, params):
    return _build_ddos(b, rng, params, _external_ip)


def _check_ddos_internal(counts: MotifCounts, info: dict) -> None:
    assert counts.dropper_triangles == 0
    assert counts.clone_triangles == 0
    assert counts.probe_triangles == 0
    assert counts.internal_sockets == info["sockets"]
    assert counts.internal_socket_writes == info["sends"]
    assert counts.external_sockets == 0 and counts.external_socket_writes == 0


def _check_ddos_external(counts: MotifCounts, info: dict) -> None:
    assert counts.dropper_triangles == 0
    assert counts.clone_triangles == 0
    assert counts.probe_triangles == 0
    assert counts.external_sockets == info["sockets"]
    assert counts.external_socket_writes == info["sends"]
    assert counts.internal_sockets == 0 and counts.internal_socket_writes == 0


def _build_storm(b: _Builder, rng: random.Random, params: dict) -> dict:
    parent = b.process("morpher")
    rounds = _draw(rng, params, "probe_rounds")
    for r in range(rounds):
        f = b.file(f"/tmp/gen{r}.bin")
        child = b.process(f"spawn{r}")
        b.op(f, parent, EdgeOp.READ)
        b.op(parent, child, EdgeOp.FORK)
        b.op(f, child, EdgeOp.EXEC)
    clones = _draw(rng, params, "clones")
    for j in range(clones):
        image = b.file(f"/tmp/self{j}.exe")
        child = b.process(f"clone{j}")
        b.op(image, parent, EdgeOp.EXEC)
        b.op(parent, child, EdgeOp.FORK)
        b.op(image, child, EdgeOp.EXEC)
    return {"probe_rounds": rounds, "clones": clones}


def _check_storm(counts: MotifCounts, info: dict) -> None:
    assert counts.probe_triangles == info["probe_rounds"]
    assert counts.clone_triangles == info["clones"]
    assert counts.dropper_triangles == 0
    assert counts.internal_sockets == 0 and counts.external_sockets == 0


TEMPLATES: dict[str, Template] = {
    t.name: t
    for t in (
        Template("benign-flower", "benign", "flower",
                 {"reads": (10, 40), "log_writes": (1, 2)},
                 _build_flower, _check_flower),
        Template("benign-chain", "benign", "chain",
                 {"links": (2, 5), "reads": (3, 10), "writes": (0, 2)},
                 _build_chain, _check_chain),
        Template("benign-resolver", "benign", "resolver",
                 {"configs": (2, 4), "queries": (3, 8), "sends": (1, 3)},
                 _build_resolver, _check_resolver),
        Template("benign-shared-db", "benign", "shared-db",
                 {"procs": (2, 4), "files": (5, 15)},
                 _build_shared_db, _check_shared_db),
        Template("dropper-chain", "malicious", "dropper",
                 {"links": (2, 5)},
                 _build_dropper, _check_dropper),
        Template("ddos-internal", "malicious", "ddos",
                 {"children": (5, 15), "sockets": (2, 6), "sends": (1, 1)},
                 _build_ddos_internal, _check_ddos_internal),
        Template("ddos-external", "malicious", "ddos",
                 {"children": (5, 15), "sockets": (2, 6), "sends": (5, 10)},
                 _build_ddos_external, _check_ddos_external),
        Template("clone-probe-storm", "malicious", "clone-storm",
                 {"probe_rounds": (20, 60), "clones": (1, 5)},
                 _build_storm, _check_storm),
    )
}


def _noise_edges(b: _Builder, rng: random.Random, noise: float) -> None:
    extra = int(round(noise * len(b.edges)))
    procs = b.processes
    for i in range(extra):
        p = rng.choice(procs)
        f = b.file(f"/tmp/noise{i}.dat")
        if rng.random() < 0.5:
            b.op(f, p, EdgeOp.READ)
        else:
            b.op(p, f, EdgeOp.WRITE)


def build_one(template: Template, rng: random.Random, graph_id: str) -> ProvGraph:
    """Build, validate, and guarantee-check a single graph."""
    b = _Builder()
    info = template.build(b, rng, template.params)
    g = ProvGraph(graph_id, template.label, b.nodes, b.edges)
    validate_graph(g)
    counts = motif_counts(g)
    template.check(counts, info)
    if template.noise > 0.0:
        _noise_edges(b, rng, template.noise)
        g = ProvGraph(graph_id, template.label, b.nodes, b.edges)
        validate_graph(g)
        # noise must be motif-neutral: fresh files carry no exec edges
        if motif_counts(g) != counts:
            raise AssertionError(f"noise changed motif counts in {graph_id}")
    return g


def generate(template: Template, count: int, seed: int = 0) -> Corpus:
    """Deterministic corpus of `count` graphs from one template."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not (0.0 <= template.noise <= MAX_NOISE):
        raise ValueError(f"noise must be in [0, {MAX_NOISE}]")
    graphs = []
    for i in range(count):
        rng = random.Random(seed * 1_000_003 + i)
        graphs.append(build_one(template, rng, f"{template.name}-s{seed}-g{i:04d}"))
    return Corpus(
        graphs=graphs,
        families={g.graph_id: template.family for g in graphs},
    )


def hash_split(graph_id: str) -> str:
    """Deterministic 80/20 train/test assignment from the graph id alone."""
    digest = hashlib.sha256(graph_id.encode("utf-8")).digest()
    return "train" if int.from_bytes(digest[:8], "big") % 100 < TRAIN_PCT else "test"


def export_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    """Write one graph file per graph plus manifest.csv; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for g in corpus.graphs:
        save_graph(g, out_dir / f"{g.graph_id}.json")
    manifest = out_dir / MANIFEST_NAME
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for g in corpus.graphs:
            writer.writerow([
                g.graph_id,
                g.label or "",
                corpus.families.get(g.graph_id, ""),
                corpus.split_of(g.graph_id),
            ])
    return manifest


def load_corpus(corpus_dir: str | Path) -> Corpus:
    """Load an exported corpus back, in manifest order."""
    corpus_dir = Path(corpus_dir)
    manifest = corpus_dir / MANIFEST_NAME
    if not manifest.is_file():
        raise GraphFormatError(f"no {MANIFEST_NAME} in {corpus_dir}")
    graphs: list[ProvGraph] = []
    families: dict[str, str] = {}
    splits: dict[str, str] = {}
    with open(manifest, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("graph_id", "label", "split"):
            if col not in header:
                raise GraphFormatError(f"manifest missing column {col!r}")
        for row in reader:
            gid = row["graph_id"]
            g = load_graph(corpus_dir / f"{gid}.json")
            if (g.label or "") != row["label"]:
                raise GraphFormatError(
                    f"label mismatch for {gid}: manifest {row['label']!r}"
                    f" vs graph {g.label!r}"
                )
            if row["split"] not in ("train", "test"):
                raise GraphFormatError(f"bad split {row['split']!r} for {gid}")
            graphs.append(g)
            families[gid] = row.get("family") or ""
            splits[gid] = row["split"]
    return Corpus(graphs=graphs, families=families, splits=splits)


def _assemble(parts: list[tuple[Template, int]], seed: int) -> Corpus:
    corpus = Corpus(graphs=[])
    for idx, (template, count) in enumerate(parts):
        corpus.extend(generate(template, count, seed=seed + idx))
    return corpus


def preset_malware(seed: int = 0) -> Corpus:
    """Binary malware-detection corpus: 300 benign + 300 malicious."""
    t = TEMPLATES
    return _assemble([
        (t["benign-flower"], 150),
        (t["benign-chain"], 150),
        (t["dropper-chain"], 100),
        (t["ddos-internal"], 50),
        (t["ddos-external"], 50),
        (t["clone-probe-storm"], 100),
    ], seed)


def preset_program(seed: int = 0) -> Corpus:
    """4-class program-classification corpus: 75 graphs per benign program.

    Labels are the family tags; every class is benign software, so security
    motifs carry almost no signal here by design.
    """
    t = TEMPLATES
    return _assemble([
        (t["benign-flower"].with_label("flower"), 75),
        (t["benign-chain"].with_label("chain"), 75),
        (t["benign-resolver"].with_label("resolver"), 75),
        (t["benign-shared-db"].with_label("shared-db"), 75),
    ], seed)


def preset_malware_mini(seed: int = 0) -> Corpus:
    """Small malware corpus for quick end-to-end runs."""
    t = TEMPLATES
    return _assemble([
        (t["benign-flower"], 12),
        (t["benign-chain"], 12),
        (t["dropper-chain"], 8),
        (t["ddos-internal"], 4),
        (t["ddos-external"], 4),
        (t["clone-probe-storm"], 8),
    ], seed)


PRESETS: dict[str, Callable[[int], Corpus]] = {
    "malware": preset_malware,
    "program": preset_program,
    "malware-mini": preset_malware_mini,
}
