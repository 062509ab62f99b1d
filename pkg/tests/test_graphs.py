"""Graph model: format parsing, invariants, orientation, projections."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provex.graphs import (
    EdgeOp,
    GraphFormatError,
    NodeKind,
    ProvEdge,
    dumps_graph,
    from_dict,
    load_graph,
    loads_graph,
    orient_edges,
    save_graph,
    to_dict,
    undirected_projection,
)

from helpers import dropper_fixture, k3_fixture, mk


def oriented_pairs(g):
    view = orient_edges(g)
    return [(view.node_ids[u], view.node_ids[v]) for u, v in view.edges]


class TestParsing:
    def test_minimal_one_process(self):
        g = from_dict({"graph_id": "m", "label": None, "nodes": [{"id": "p", "kind": "process", "attrs": {}}], "edges": []})
        assert g.n_nodes == 1 and g.n_edges == 0

    def test_write_between_processes_rejected(self):
        with pytest.raises(GraphFormatError) as exc:
            mk([("P", "process"), ("Q", "process")], [("P", "Q", "write")])
        assert "op/kind mismatch at edge 0" in str(exc.value)

    def test_mismatch_reports_correct_index(self):
        with pytest.raises(GraphFormatError) as exc:
            mk(
                [("P", "process"), ("F", "file"), ("S", "socket")],
                [("P", "F", "read"), ("F", "S", "send")],
            )
        assert "op/kind mismatch at edge 1" in str(exc.value)

    def test_dropper_fixture_counts(self):
        g = dropper_fixture()
        assert g.n_nodes == 5 and g.n_edges == 4

    def test_duplicate_node_id(self):
        with pytest.raises(GraphFormatError) as exc:
            mk([("x", "process"), ("x", "file")], [])
        assert "duplicate node id at node 1" in str(exc.value)

    def test_dangling_endpoint(self):
        with pytest.raises(GraphFormatError) as exc:
            mk([("p", "process")], [("p", "ghost", "fork")])
        assert "dangling endpoint at edge 0" in str(exc.value)

    def test_self_loop(self):
        with pytest.raises(GraphFormatError) as exc:
            mk([("p", "process")], [("p", "p", "fork")])
        assert "self-loop at edge 0" in str(exc.value)

    def test_unknown_kind_and_op(self):
        with pytest.raises(GraphFormatError, match="unknown node kind at node 0"):
            mk([("p", "demon")], [])
        with pytest.raises(GraphFormatError, match="unknown edge op at edge 0"):
            mk([("p", "process"), ("f", "file")], [("p", "f", "touch")])

    def test_fork_direction_is_typed(self):
        # fork endpoints must both be processes regardless of order
        with pytest.raises(GraphFormatError, match="op/kind mismatch"):
            mk([("p", "process"), ("f", "file")], [("p", "f", "fork")])

    def test_attr_values_must_be_strings(self):
        with pytest.raises(GraphFormatError, match="attr 'port' must be a string"):
            from_dict(
                {
                    "graph_id": "g",
                    "label": None,
                    "nodes": [{"id": "s", "kind": "socket", "attrs": {"port": 53}}],
                    "edges": [],
                }
            )

    def test_ts_must_be_int_or_null(self):
        with pytest.raises(GraphFormatError, match="'ts' must be an integer"):
            mk([("p", "process"), ("f", "file")], [("p", "f", "write", "early")])

    def test_size_cap_rejects(self, tmp_path):
        g = k3_fixture()
        path = tmp_path / "g.json"
        save_graph(g, path)
        with pytest.raises(GraphFormatError, match="max_nodes cap"):
            load_graph(path, max_nodes=2)
        with pytest.raises(GraphFormatError, match="max_edges cap"):
            load_graph(path, max_edges=1)
        assert load_graph(path).n_nodes == 3  # cap off by default

    def test_load_error_includes_path(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(GraphFormatError) as exc:
            load_graph(path)
        assert "bad.json" in str(exc.value)


class TestRoundTrip:
    def test_load_save_load_identity(self, tmp_path):
        g = dropper_fixture()
        path = tmp_path / "g.json"
        save_graph(g, path)
        g2 = load_graph(path)
        assert g2 == g
        assert [n.id for n in g2.nodes] == [n.id for n in g.nodes]
        assert g2.edges == g.edges

    def test_resave_is_byte_identical(self, tmp_path):
        g = dropper_fixture()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_graph(g, a)
        save_graph(load_graph(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_wire_format_round_trip(self):
        g = dropper_fixture()
        assert loads_graph(dumps_graph(g)) == g

    def test_ts_and_attrs_preserved(self):
        g = dropper_fixture()
        g2 = from_dict(to_dict(g))
        assert g2.edges[0].ts == 1
        assert g2.nodes[2].attrs == {"path": "/tmp/payload.bin"}


class TestOrientation:
    def test_read_points_file_to_process(self):
        g = mk([("P", "process"), ("F", "file")], [("P", "F", "read")])
        assert oriented_pairs(g) == [("F", "P")]

    def test_read_stored_either_order(self):
        a = mk([("P", "process"), ("F", "file")], [("P", "F", "read")])
        b = mk([("P", "process"), ("F", "file")], [("F", "P", "read")])
        assert oriented_pairs(a) == oriented_pairs(b) == [("F", "P")]

    def test_write_points_process_to_file(self):
        g = mk([("P", "process"), ("F", "file")], [("F", "P", "write")])
        assert oriented_pairs(g) == [("P", "F")]

    def test_exec_points_file_to_process(self):
        g = mk([("P", "process"), ("F", "file")], [("P", "F", "exec")])
        assert oriented_pairs(g) == [("F", "P")]

    def test_fork_keeps_stored_parent_child(self):
        g = mk([("a", "process"), ("b", "process")], [("a", "b", "fork")])
        assert oriented_pairs(g) == [("a", "b")]

    def test_socket_ops(self):
        g = mk(
            [("P", "process"), ("S", "socket")],
            [("P", "S", "send"), ("S", "P", "connect"), ("P", "S", "recv")],
        )
        assert oriented_pairs(g) == [("P", "S"), ("P", "S"), ("S", "P")]

    def test_orient_is_cached_and_stable(self):
        g = dropper_fixture()
        assert orient_edges(g) is orient_edges(g)

    def test_one_directed_edge_per_prov_edge(self):
        g = dropper_fixture()
        g.edges.append(ProvEdge(src="p", dst="f", op=EdgeOp.WRITE))
        g._directed = None
        assert len(orient_edges(g).edges) == len(g.edges) == 5


class TestUndirectedProjection:
    def test_parallel_read_write_collapse(self):
        g = mk([("P", "process"), ("F", "file")], [("P", "F", "read"), ("P", "F", "write")])
        view = undirected_projection(g)
        assert view.adj[0] == {1} and view.adj[1] == {0}

    def test_k3_has_three_edges(self):
        view = undirected_projection(k3_fixture())
        assert sum(len(a) for a in view.adj) // 2 == 3

    def test_empty_graph(self):
        g = mk([("p", "process")], [])
        assert undirected_projection(g).adj == (frozenset(),)

    def test_projection_never_larger_than_edge_list(self):
        g = dropper_fixture()
        view = undirected_projection(g)
        assert sum(len(a) for a in view.adj) // 2 <= g.n_edges


@st.composite
def typed_graphs(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    kinds = [draw(st.sampled_from(["process", "file", "socket"])) for _ in range(n)]
    ids = [f"n{i}" for i in range(n)]
    legal = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pair = {kinds[i], kinds[j]}
            if pair == {"process"}:
                legal.append((ids[i], ids[j], "fork"))
            elif pair == {"process", "file"}:
                for op in ("read", "write", "exec"):
                    legal.append((ids[i], ids[j], op))
            elif pair == {"process", "socket"}:
                for op in ("send", "recv", "connect"):
                    legal.append((ids[i], ids[j], op))
    edges = draw(st.lists(st.sampled_from(legal), max_size=16)) if legal else []
    return mk(list(zip(ids, kinds)), edges)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(typed_graphs())
    def test_dict_round_trip(self, g):
        assert from_dict(to_dict(g)) == g

    @settings(max_examples=60, deadline=None)
    @given(typed_graphs())
    def test_json_round_trip_stable(self, g):
        text = json.dumps(to_dict(g), indent=2)
        assert json.dumps(to_dict(loads_graph(text)), indent=2) == text

    @settings(max_examples=60, deadline=None)
    @given(typed_graphs())
    def test_directed_count_matches_edge_list(self, g):
        assert len(orient_edges(g).edges) == g.n_edges
