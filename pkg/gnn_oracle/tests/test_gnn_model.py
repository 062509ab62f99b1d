"""Tensor encoding and classifier behavior."""

import math

import pytest
import torch

from gnn_oracle.corpus import GraphRecord
from gnn_oracle.model import (
    EDGE_CHANNELS,
    N_OPS,
    NODE_FEATURES,
    SELF_CHANNEL,
    GatClassifier,
    graph_tensors,
)
from gnn_oracle.train import GnnConfig


def record():
    # process 0 forks process 1; process 1 writes file 2 twice
    return GraphRecord(
        graph_id="r",
        node_kinds=[0, 0, 1],
        degrees=[1, 3, 2],
        edges=[(0, 1, 3), (1, 2, 1), (1, 2, 1)],
    )


def permuted(rec: GraphRecord, perm: list[int]) -> GraphRecord:
    """Relabel nodes so that old index i becomes perm[i]."""
    kinds = [0] * rec.n_nodes
    degrees = [0] * rec.n_nodes
    for i, (kind, deg) in enumerate(zip(rec.node_kinds, rec.degrees)):
        kinds[perm[i]] = kind
        degrees[perm[i]] = deg
    edges = [(perm[s], perm[d], op) for s, d, op in rec.edges]
    return GraphRecord(rec.graph_id, kinds, degrees, edges)


class TestGraphTensors:
    def test_node_features(self):
        x, _, _ = graph_tensors(record())
        assert x.shape == (3, NODE_FEATURES)
        assert x[0].tolist() == pytest.approx([1, 0, 0, math.log1p(1)])
        assert x[2].tolist() == pytest.approx([0, 1, 0, math.log1p(2)])

    def test_edge_channels(self):
        _, edge_feat, _ = graph_tensors(record())
        assert edge_feat.shape == (3, 3, EDGE_CHANNELS)
        # fork 0->1: incoming at [dst=1, src=0], outgoing at [src=0, dst=1]
        assert edge_feat[1, 0, 3] == 1.0
        assert edge_feat[0, 1, N_OPS + 3] == 1.0
        # the doubled write keeps multiplicity
        assert edge_feat[2, 1, 1] == 2.0
        assert edge_feat[1, 2, N_OPS + 1] == 2.0

    def test_self_loops_and_mask(self):
        _, edge_feat, mask = graph_tensors(record())
        for i in range(3):
            assert edge_feat[i, i, SELF_CHANNEL] == 1.0
            assert mask[i, i]
        # no edge in either direction between nodes 0 and 2
        assert not mask[0, 2] and not mask[2, 0]

    def test_isolated_node_attends_to_itself(self):
        rec = GraphRecord("lone", node_kinds=[2], degrees=[0], edges=[])
        x, edge_feat, mask = graph_tensors(rec)
        assert x[0, 3] == 0.0
        assert mask[0, 0]
        model = make_model()
        logits = model(x, edge_feat, mask)
        assert torch.isfinite(logits).all()


def make_model(seed=0, n_classes=2):
    torch.manual_seed(seed)
    return GatClassifier(layers=2, hidden=8, heads=2, n_classes=n_classes)


class TestClassifier:
    def test_logit_shape(self):
        model = make_model(n_classes=3)
        logits = model(*graph_tensors(record()))
        assert logits.shape == (3,)

    def test_seeded_init_is_deterministic(self):
        a, b = make_model(seed=5), make_model(seed=5)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_node_order_does_not_change_logits(self):
        model = make_model()
        rec = record()
        base = model(*graph_tensors(rec))
        shuffled = model(*graph_tensors(permuted(rec, [2, 0, 1])))
        assert torch.allclose(base, shuffled, atol=1e-5)

    def test_hidden_must_divide_by_heads(self):
        with pytest.raises(ValueError, match="not divisible"):
            GatClassifier(layers=1, hidden=10, heads=4, n_classes=2)


class TestConfig:
    def test_defaults_pass(self):
        GnnConfig().validate()

    @pytest.mark.parametrize("field,value,match", [
        ("layers", 0, "layers must be >= 1"),
        ("epochs", 0, "epochs must be >= 1"),
        ("lr", 0.0, "lr must be positive"),
        ("hidden", 63, "divisible"),
    ])
    def test_rejects_bad_values(self, field, value, match):
        config = GnnConfig(**{field: value})
        with pytest.raises(ValueError, match=match):
            config.validate()
