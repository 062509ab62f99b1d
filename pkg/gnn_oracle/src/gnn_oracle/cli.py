"""Standalone command: train on a corpus, emit the prediction file."""

from __future__ import annotations

import argparse
import sys

from gnn_oracle.corpus import CorpusError
from gnn_oracle.train import GnnConfig, train_and_predict


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnn-oracle",
        description="train a graph attention classifier on an exported "
                    "provenance corpus and write JSON-lines predictions "
                    "for every graph")
    parser.add_argument("--corpus", required=True, metavar="DIR",
                        help="corpus directory with manifest.csv")
    parser.add_argument("--out", required=True, metavar="FILE",
                        help="prediction file to write (plus FILE.meta.json)")
    parser.add_argument("--seed", type=int, default=0, metavar="S")
    parser.add_argument("--layers", type=int, default=4, metavar="N")
    parser.add_argument("--hidden", type=int, default=64, metavar="N")
    parser.add_argument("--heads", type=int, default=4, metavar="N")
    parser.add_argument("--epochs", type=int, default=15, metavar="N")
    parser.add_argument("--lr", type=float, default=0.01, metavar="F")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = GnnConfig(layers=args.layers, hidden=args.hidden,
                       heads=args.heads, epochs=args.epochs, lr=args.lr,
                       seed=args.seed)
    try:
        config.validate()
        out = train_and_predict(args.corpus, args.out, config)
    except (CorpusError, ValueError, OSError) as exc:
        print(f"gnn-oracle: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote predictions to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
