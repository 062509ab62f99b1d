"""Training loop and prediction-file emission."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from gnn_oracle.corpus import CorpusError, load_corpus
from gnn_oracle.model import GatClassifier, graph_tensors

BATCH_GRAPHS = 16


@dataclass
class GnnConfig:
    layers: int = 4
    hidden: int = 64
    heads: int = 4
    epochs: int = 15
    lr: float = 0.01
    seed: int = 0

    def validate(self) -> None:
        for field in ("layers", "hidden", "heads", "epochs"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.hidden % self.heads:
            raise ValueError("hidden must be divisible by heads")


def train_and_predict(corpus_dir: str | Path, out_path: str | Path,
                      config: GnnConfig | None = None) -> Path:
    """Train on the manifest's train split; predict every graph.

    Writes JSON-lines predictions ({"graph_id", "label", "scores"}) in
    manifest order plus a `<out>.meta.json` sidecar recording the
    configuration. Deterministic for a fixed seed: single-threaded, all
    randomness from one torch seed. A run that never converges still
    emits predictions; quality is the consumer's concern.
    """
    config = config or GnnConfig()
    config.validate()
    pairs = load_corpus(corpus_dir)
    train_idx = [i for i, (row, _) in enumerate(pairs) if row.split == "train"]
    if not train_idx:
        raise CorpusError(f"{corpus_dir}: manifest has no train rows")
    vocab = sorted({pairs[i][0].label for i in train_idx})
    class_of = {label: c for c, label in enumerate(vocab)}

    torch.set_num_threads(1)
    torch.manual_seed(config.seed)
    tensors = [graph_tensors(record) for _, record in pairs]
    targets = [class_of.get(row.label, -1) for row, _ in pairs]
    model = GatClassifier(config.layers, config.hidden, config.heads,
                          n_classes=len(vocab))
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    loss_fn = torch.nn.CrossEntropyLoss()

    model.train()
    for _ in range(config.epochs):
        order = torch.randperm(len(train_idx))
        for start in range(0, len(train_idx), BATCH_GRAPHS):
            batch = [train_idx[j] for j in order[start:start + BATCH_GRAPHS]]
            optimizer.zero_grad()
            loss = torch.zeros(())
            for i in batch:
                x, edge_feat, mask = tensors[i]
                logits = model(x, edge_feat, mask)
                loss = loss + loss_fn(logits.unsqueeze(0),
                                      torch.tensor([targets[i]]))
            (loss / len(batch)).backward()
            optimizer.step()

    model.eval()
    out_path = Path(out_path)
    lines = []
    with torch.no_grad():
        for (row, _), (x, edge_feat, mask) in zip(pairs, tensors):
            probs = torch.softmax(model(x, edge_feat, mask), dim=0)
            scores = {label: float(probs[c]) for c, label in enumerate(vocab)}
            label = vocab[int(probs.argmax())]
            lines.append(json.dumps(
                {"graph_id": row.graph_id, "label": label, "scores": scores},
                separators=(",", ":")))
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = {"config": asdict(config), "labels": vocab,
            "n_train": len(train_idx), "n_total": len(pairs)}
    Path(f"{out_path}.meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out_path
