"""Corpus-directory parsing: manifest rows and graph JSON files.

The on-disk format is the exported provenance corpus: one JSON file per
graph named `{graph_id}.json` plus `manifest.csv` with columns
`graph_id,label,split` (a `family` column may appear and is ignored).
Parsing is self-contained so the classifier can run against any corpus
producer that follows the format.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

KINDS = ("process", "file", "socket")
OPS = ("read", "write", "exec", "fork", "send", "recv", "connect")
MANIFEST_NAME = "manifest.csv"
SPLITS = ("train", "test")


class CorpusError(RuntimeError):
    """Unreadable or malformed corpus input."""


@dataclass
class ManifestRow:
    graph_id: str
    label: str
    split: str


@dataclass
class GraphRecord:
    """One graph reduced to the tensors the model needs.

    Nodes are re-indexed densely; `edges` holds (src, dst, op) index
    triples in file order, multi-edges included.
    """

    graph_id: str
    node_kinds: list[int]
    degrees: list[int]
    edges: list[tuple[int, int, int]]

    @property
    def n_nodes(self) -> int:
        return len(self.node_kinds)


def read_manifest(corpus_dir: str | Path) -> list[ManifestRow]:
    path = Path(corpus_dir) / MANIFEST_NAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"missing manifest: cannot read {path}: {exc}") from None
    reader = csv.DictReader(text.splitlines())
    fields = reader.fieldnames or []
    for required in ("graph_id", "label", "split"):
        if required not in fields:
            raise CorpusError(f"{path}: manifest lacks column {required!r}")
    rows = []
    for i, row in enumerate(reader, start=2):
        split = row["split"]
        if split not in SPLITS:
            raise CorpusError(f"{path}: line {i}: bad split {split!r}")
        rows.append(ManifestRow(row["graph_id"], row["label"], split))
    if not rows:
        raise CorpusError(f"{path}: manifest has no rows")
    return rows


def parse_graph_text(text: str, where: str) -> GraphRecord:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{where}: bad JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: graph must be a JSON object")
    try:
        nodes = obj["nodes"]
        raw_edges = obj["edges"]
        graph_id = obj["graph_id"]
    except KeyError as exc:
        raise CorpusError(f"{where}: missing key {exc}") from None
    index: dict[str, int] = {}
    kinds: list[int] = []
    for node in nodes:
        nid = node["id"]
        if nid in index:
            raise CorpusError(f"{where}: duplicate node id {nid!r}")
        try:
            kinds.append(KINDS.index(node["kind"]))
        except ValueError:
            raise CorpusError(f"{where}: unknown node kind "
                              f"{node['kind']!r}") from None
        index[nid] = len(index)
    degrees = [0] * len(kinds)
    edges: list[tuple[int, int, int]] = []
    for i, edge in enumerate(raw_edges):
        try:
            src = index[edge["src"]]
            dst = index[edge["dst"]]
        except KeyError as exc:
            raise CorpusError(f"{where}: edge {i} references unknown node "
                              f"{exc}") from None
        try:
            op = OPS.index(edge["op"])
        except ValueError:
            raise CorpusError(f"{where}: edge {i} has unknown op "
                              f"{edge['op']!r}") from None
        edges.append((src, dst, op))
        degrees[src] += 1
        degrees[dst] += 1
    return GraphRecord(graph_id=graph_id, node_kinds=kinds, degrees=degrees,
                       edges=edges)


def load_graph_file(path: str | Path) -> GraphRecord:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from None
    return parse_graph_text(text, str(path))


def load_corpus(corpus_dir: str | Path) -> list[tuple[ManifestRow, GraphRecord]]:
    """Manifest rows paired with parsed graphs, in manifest order."""
    corpus_dir = Path(corpus_dir)
    out = []
    for row in read_manifest(corpus_dir):
        record = load_graph_file(corpus_dir / f"{row.graph_id}.json")
        if record.graph_id != row.graph_id:
            raise CorpusError(f"{row.graph_id}.json: graph_id field says "
                              f"{record.graph_id!r}")
        out.append((row, record))
    return out
