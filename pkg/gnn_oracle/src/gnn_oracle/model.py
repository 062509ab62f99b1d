"""Dense per-graph attention layers over typed provenance edges.

Node inputs are one-hot entity kind plus log-scaled degree; attention
scores carry a learned bias per edge channel, where channels encode the
operation and its direction (incoming, outgoing) plus a self-loop.
Graphs at this scale (tens to a few hundred nodes) make dense n-by-n
attention cheaper than any sparse bookkeeping.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from gnn_oracle.corpus import KINDS, OPS, GraphRecord

N_KINDS = len(KINDS)
N_OPS = len(OPS)
# per-op incoming + per-op outgoing + self-loop
EDGE_CHANNELS = 2 * N_OPS + 1
SELF_CHANNEL = EDGE_CHANNELS - 1
NODE_FEATURES = N_KINDS + 1


def graph_tensors(record: GraphRecord):
    """(x, edge_feat, mask) for one graph.

    x: (n, 4) one-hot kind + log1p(degree).
    edge_feat[i, j, c]: multiplicity of channel c on the j->i attention
    slot; mask[i, j] marks slots with any channel set.
    """
    n = record.n_nodes
    x = torch.zeros((n, NODE_FEATURES))
    for i, kind in enumerate(record.node_kinds):
        x[i, kind] = 1.0
        x[i, N_KINDS] = math.log1p(record.degrees[i])
    edge_feat = torch.zeros((n, n, EDGE_CHANNELS))
    for src, dst, op in record.edges:
        edge_feat[dst, src, op] += 1.0          # incoming to dst
        edge_feat[src, dst, N_OPS + op] += 1.0  # outgoing from src
    idx = torch.arange(n)
    edge_feat[idx, idx, SELF_CHANNEL] = 1.0
    mask = edge_feat.any(dim=-1)
    return x, edge_feat, mask


class GatLayer(nn.Module):
    def __init__(self, in_dim: int, heads: int, head_dim: int):
        super().__init__()
        self.heads = heads
        self.head_dim = head_dim
        self.w = nn.Linear(in_dim, heads * head_dim, bias=False)
        self.a_src = nn.Parameter(torch.empty(heads, head_dim))
        self.a_dst = nn.Parameter(torch.empty(heads, head_dim))
        self.w_edge = nn.Parameter(torch.empty(EDGE_CHANNELS, heads))
        nn.init.xavier_uniform_(self.w.weight)
        nn.init.xavier_uniform_(self.a_src)
        nn.init.xavier_uniform_(self.a_dst)
        nn.init.xavier_uniform_(self.w_edge)

    def forward(self, h, edge_feat, mask):
        n = h.shape[0]
        hp = self.w(h).view(n, self.heads, self.head_dim)
        s_src = (hp * self.a_src).sum(-1)  # (n, heads)
        s_dst = (hp * self.a_dst).sum(-1)
        scores = s_dst.unsqueeze(1) + s_src.unsqueeze(0)  # (target, source, h)
        scores = scores + edge_feat @ self.w_edge
        scores = nn.functional.leaky_relu(scores, 0.2)
        scores = scores.masked_fill(~mask.unsqueeze(-1), float("-inf"))
        alpha = torch.softmax(scores, dim=1)  # over sources; self-loop
        # guarantees every row has at least one finite score
        out = torch.einsum("tsh,shd->thd", alpha, hp)
        return out.reshape(n, self.heads * self.head_dim)


class GatClassifier(nn.Module):
    """Stacked attention layers, mean pooling, linear class head."""

    def __init__(self, layers: int, hidden: int, heads: int, n_classes: int):
        super().__init__()
        if hidden % heads:
            raise ValueError(f"hidden {hidden} not divisible by heads {heads}")
        head_dim = hidden // heads
        dims = [NODE_FEATURES] + [hidden] * layers
        self.layers = nn.ModuleList(
            GatLayer(dims[i], heads, head_dim) for i in range(layers))
        self.out = nn.Linear(hidden, n_classes)

    def forward(self, x, edge_feat, mask):
        h = x
        for layer in self.layers:
            h = nn.functional.elu(layer(h, edge_feat, mask))
        return self.out(h.mean(dim=0))
