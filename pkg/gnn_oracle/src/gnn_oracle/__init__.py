"""Reference black-box classifier for provenance-graph corpora.

Reads an exported corpus directory (graph JSON files plus a manifest),
trains a small graph attention network on the manifest's train split,
and writes JSON-lines predictions for every graph. The output file is
designed to be consumed by surrogate-training tooling as an opaque
prediction oracle; nothing here depends on that tooling.
"""

from gnn_oracle.corpus import CorpusError, GraphRecord, load_corpus
from gnn_oracle.model import GatClassifier, graph_tensors
from gnn_oracle.train import GnnConfig, train_and_predict

__all__ = [
    "CorpusError",
    "GraphRecord",
    "load_corpus",
    "GatClassifier",
    "graph_tensors",
    "GnnConfig",
    "train_and_predict",
]
