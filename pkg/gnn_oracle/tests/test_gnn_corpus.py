"""Corpus reading: manifest rows, graph JSON, diagnostics."""

import json

import pytest

from gnn_oracle.corpus import (
    KINDS,
    OPS,
    CorpusError,
    load_corpus,
    load_graph_file,
    parse_graph_text,
    read_manifest,
)

GRAPH = {
    "graph_id": "g0",
    "label": "benign",
    "nodes": [
        {"id": "p1", "kind": "process", "attrs": {"exe": "/bin/sh"}},
        {"id": "f1", "kind": "file", "attrs": {"path": "/tmp/x"}},
        {"id": "s1", "kind": "socket", "attrs": {"ip": "10.0.0.1"}},
    ],
    "edges": [
        {"src": "f1", "dst": "p1", "op": "read", "ts": 0},
        {"src": "p1", "dst": "f1", "op": "write", "ts": 1},
        {"src": "p1", "dst": "s1", "op": "send", "ts": 2},
        {"src": "p1", "dst": "f1", "op": "write", "ts": 3},
    ],
}


def write_manifest(path, rows, header="graph_id,label,family,split"):
    lines = [header] + [",".join(r) for r in rows]
    (path / "manifest.csv").write_text("\n".join(lines) + "\n")


class TestManifest:
    def test_rows_in_order(self, tmp_path):
        write_manifest(tmp_path, [
            ("g1", "benign", "flower", "train"),
            ("g0", "malicious", "dropper", "test"),
        ])
        rows = read_manifest(tmp_path)
        assert [(r.graph_id, r.label, r.split) for r in rows] == [
            ("g1", "benign", "train"),
            ("g0", "malicious", "test"),
        ]

    def test_family_column_optional(self, tmp_path):
        write_manifest(tmp_path, [("g1", "benign", "train")],
                       header="graph_id,label,split")
        assert read_manifest(tmp_path)[0].split == "train"

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(CorpusError, match="missing manifest"):
            read_manifest(tmp_path)

    def test_missing_column(self, tmp_path):
        write_manifest(tmp_path, [("g1", "benign")], header="graph_id,label")
        with pytest.raises(CorpusError, match="lacks column 'split'"):
            read_manifest(tmp_path)

    def test_bad_split_names_line(self, tmp_path):
        write_manifest(tmp_path, [
            ("g1", "benign", "flower", "train"),
            ("g2", "benign", "flower", "validate"),
        ])
        with pytest.raises(CorpusError, match="line 3.*'validate'"):
            read_manifest(tmp_path)

    def test_empty_manifest(self, tmp_path):
        write_manifest(tmp_path, [])
        with pytest.raises(CorpusError, match="no rows"):
            read_manifest(tmp_path)


class TestGraphParsing:
    def test_record_shape(self):
        rec = parse_graph_text(json.dumps(GRAPH), "g0.json")
        assert rec.graph_id == "g0"
        assert rec.n_nodes == 3
        assert rec.node_kinds == [KINDS.index("process"),
                                  KINDS.index("file"),
                                  KINDS.index("socket")]
        read, write, send = OPS.index("read"), OPS.index("write"), OPS.index("send")
        assert rec.edges == [(1, 0, read), (0, 1, write), (0, 2, send),
                             (0, 1, write)]

    def test_degrees_count_multi_edges(self):
        rec = parse_graph_text(json.dumps(GRAPH), "g0.json")
        # p1 touches all four edges, f1 three, s1 one
        assert rec.degrees == [4, 3, 1]

    def test_bad_json(self):
        with pytest.raises(CorpusError, match="bad JSON"):
            parse_graph_text("{nope", "x.json")

    def test_non_object(self):
        with pytest.raises(CorpusError, match="must be a JSON object"):
            parse_graph_text("[1, 2]", "x.json")

    def test_missing_key(self):
        with pytest.raises(CorpusError, match="missing key"):
            parse_graph_text('{"graph_id": "g", "nodes": []}', "x.json")

    def test_duplicate_node_id(self):
        bad = dict(GRAPH, nodes=GRAPH["nodes"] + [GRAPH["nodes"][0]])
        with pytest.raises(CorpusError, match="duplicate node id 'p1'"):
            parse_graph_text(json.dumps(bad), "x.json")

    def test_unknown_kind(self):
        bad = dict(GRAPH, nodes=[{"id": "n", "kind": "pipe", "attrs": {}}],
                   edges=[])
        with pytest.raises(CorpusError, match="unknown node kind 'pipe'"):
            parse_graph_text(json.dumps(bad), "x.json")

    def test_unknown_op(self):
        bad = dict(GRAPH, edges=[{"src": "p1", "dst": "f1", "op": "mmap",
                                  "ts": 0}])
        with pytest.raises(CorpusError, match="edge 0 has unknown op 'mmap'"):
            parse_graph_text(json.dumps(bad), "x.json")

    def test_edge_to_unknown_node(self):
        bad = dict(GRAPH, edges=[{"src": "p1", "dst": "ghost", "op": "write",
                                  "ts": 0}])
        with pytest.raises(CorpusError, match="edge 0 references unknown"):
            parse_graph_text(json.dumps(bad), "x.json")

    def test_load_graph_file_missing(self, tmp_path):
        with pytest.raises(CorpusError, match="cannot read"):
            load_graph_file(tmp_path / "nope.json")


class TestLoadCorpus:
    def store(self, tmp_path, graphs, rows):
        write_manifest(tmp_path, rows)
        for g in graphs:
            (tmp_path / f"{g['graph_id']}.json").write_text(json.dumps(g))

    def test_pairs_in_manifest_order(self, tmp_path):
        g1 = dict(GRAPH, graph_id="g1")
        self.store(tmp_path, [GRAPH, g1], [
            ("g1", "benign", "flower", "train"),
            ("g0", "malicious", "dropper", "test"),
        ])
        pairs = load_corpus(tmp_path)
        assert [row.graph_id for row, _ in pairs] == ["g1", "g0"]
        assert [rec.graph_id for _, rec in pairs] == ["g1", "g0"]

    def test_missing_graph_file(self, tmp_path):
        self.store(tmp_path, [GRAPH], [
            ("g0", "malicious", "dropper", "test"),
            ("gone", "benign", "flower", "train"),
        ])
        with pytest.raises(CorpusError, match="gone.json"):
            load_corpus(tmp_path)

    def test_graph_id_mismatch(self, tmp_path):
        self.store(tmp_path, [GRAPH], [("g0", "benign", "flower", "train")])
        impostor = dict(GRAPH, graph_id="other")
        (tmp_path / "g0.json").write_text(json.dumps(impostor))
        with pytest.raises(CorpusError, match="graph_id field says 'other'"):
            load_corpus(tmp_path)
