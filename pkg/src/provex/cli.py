"""Command-line pipeline: synth, features, train, eval, ablate, explain.

Exit codes: 0 success, 1 usage error, 2 data error, 3 oracle error.
Every subcommand is byte-for-byte reproducible given the same inputs
and seed; `--seed` falls back to the PROVEX_SEED environment variable.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

from provex.evaluation import (
    STRATEGY_NAMES,
    ablation_grid,
    emit_report,
    kfold_eval,
)
from provex.features import (
    FeatureSetId,
    extract,
    project,
    write_features_csv,
)
from provex.glossary import gloss
from provex.graphs import GraphFormatError, load_graph
from provex.oracle import (
    OracleError,
    SubprocessOracle,
    load_prediction_file,
    query,
    train_builtin,
)
from provex.surrogate import (
    ORACLE,
    LabeledFeatureSet,
    TrusteeParams,
    train_accuracy_dt,
    train_fidelity_dt,
    train_trustee_dt,
)
from provex.synth import PRESETS, TEMPLATES, export_corpus, generate, load_corpus
from provex.tree import (
    DTParams,
    decision_path,
    export_dot,
    load_tree,
    predict_row,
    save_tree,
)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ORACLE = 3

ORACLE_KINDS = ("builtin", "prediction-file", "subprocess")
FEATURE_SET_NAMES = tuple(fs.value for fs in FeatureSetId)


class UsageError(Exception):
    """Invalid flag combination detected after parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get("PROVEX_SEED", "")
    if not raw:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"invalid PROVEX_SEED value {raw!r}") from None


def _depth(text: str):
    if text.lower() == "none":
        return None
    return int(text)


def _add_dt_flags(p) -> None:
    p.add_argument("--max-depth", type=_depth, default=8, metavar="N|none",
                   help="tree depth cap, or 'none' for unbounded (default 8)")
    p.add_argument("--min-samples-leaf", type=int, default=5, metavar="N",
                   help="smallest admissible leaf (default 5)")
    p.add_argument("--min-impurity-decrease", type=float, default=1e-7,
                   metavar="F", help="split gain threshold (default 1e-7)")
    p.add_argument("--weighting", choices=("balanced", "none"),
                   default="balanced", help="class weighting (default balanced)")
    p.add_argument("--outer-iters", type=int, default=10, metavar="N",
                   help="TrusteeDT outer restarts (default 10)")
    p.add_argument("--inner-iters", type=int, default=20, metavar="N",
                   help="TrusteeDT augmentation steps (default 20)")


def _add_oracle_flags(p) -> None:
    p.add_argument("--oracle-kind", choices=ORACLE_KINDS, default="builtin",
                   help="black box to explain (default: builtin ensemble "
                        "trained on the input corpus)")
    p.add_argument("--oracle", metavar="PATH|CMD",
                   help="prediction file path, or subprocess command line")


def _dt_params(args, seed: int) -> DTParams:
    return DTParams(max_depth=args.max_depth,
                    min_samples_leaf=args.min_samples_leaf,
                    min_impurity_decrease=args.min_impurity_decrease,
                    class_weighting=args.weighting,
                    rng_seed=seed)


def _trustee_params(args, dt_params: DTParams, seed: int) -> TrusteeParams:
    return TrusteeParams(outer_iters=args.outer_iters,
                         inner_iters=args.inner_iters,
                         dt_params=dt_params, rng_seed=seed)


def _build_oracle(args, graphs, labels, seed: int):
    if args.oracle_kind == "prediction-file":
        if not args.oracle:
            raise UsageError("--oracle PATH is required with "
                             "--oracle-kind prediction-file")
        return load_prediction_file(args.oracle)
    if args.oracle_kind == "subprocess":
        if not args.oracle:
            raise UsageError("--oracle CMD is required with "
                             "--oracle-kind subprocess")
        return SubprocessOracle(shlex.split(args.oracle))
    if args.oracle:
        raise UsageError("--oracle is meaningless with --oracle-kind builtin")
    return train_builtin(graphs, labels, seed=seed)


def _split_csv(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _check_names(values, allowed, what: str) -> None:
    for value in values:
        if value not in allowed:
            raise UsageError(f"unknown {what} {value!r} "
                             f"(choose from {', '.join(allowed)})")


def cmd_synth(args) -> int:
    seed = _resolve_seed(args)
    if args.preset:
        if args.count is not None:
            raise UsageError("--count only applies to --template")
        if args.noise:
            raise UsageError("--noise only applies to --template")
        corpus = PRESETS[args.preset](seed)
    else:
        template = TEMPLATES[args.template]
        if args.noise:
            template = template.with_noise(args.noise)
        corpus = generate(template, args.count if args.count is not None else 10,
                          seed=seed)
    out = export_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} graphs + manifest to {out}")
    return 0


def _extract_rows(graphs, agg: str, jobs: int):
    worker = partial(extract, agg=agg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, graphs, chunksize=32))
    return [worker(g) for g in graphs]


def cmd_features(args) -> int:
    corpus = load_corpus(args.in_dir)
    vectors = _extract_rows(corpus.graphs, args.agg, args.jobs)
    if args.set != FeatureSetId.ALL.value:
        vectors = [project(v, FeatureSetId(args.set)) for v in vectors]
    write_features_csv(vectors, args.out)
    print(f"wrote {len(vectors)} feature rows to {args.out}")
    return 0


def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    corpus = load_corpus(args.in_dir)
    graphs = corpus.graphs
    labels = [g.label for g in graphs]
    set_id = FeatureSetId(args.set)
    vectors = [project(extract(g), set_id) for g in graphs]
    params = _dt_params(args, seed)
    if args.strategy == "AccuracyDT":
        if args.oracle or args.oracle_kind != "builtin":
            raise UsageError("AccuracyDT trains on corpus labels; "
                             "drop the oracle flags")
        tree = train_accuracy_dt(LabeledFeatureSet.from_vectors(vectors), params)
    else:
        oracle = _build_oracle(args, graphs, labels, seed)
        preds = query(oracle, graphs)
        df = LabeledFeatureSet.from_vectors(
            vectors, labels=[p.label for p in preds], label_source=ORACLE)
        if args.strategy == "FidelityDT":
            tree = train_fidelity_dt(df, params)
        else:
            tree = train_trustee_dt(df, _trustee_params(args, params, seed))
    save_tree(tree, args.out)
    if args.dot:
        Path(args.dot).write_text(export_dot(tree), encoding="utf-8")
    print(f"trained {args.strategy} ({tree.n_nodes} nodes) -> {args.out}")
    return 0


def _run_report(args, grid: bool) -> int:
    seed = _resolve_seed(args)
    strategies = _split_csv(args.strategies)
    _check_names(strategies, STRATEGY_NAMES, "strategy")
    corpus = load_corpus(args.in_dir)
    labels = [g.label for g in corpus.graphs]
    oracle = _build_oracle(args, corpus.graphs, labels, seed)
    params = _dt_params(args, seed)
    trustee = _trustee_params(args, params, seed)
    if grid:
        report = ablation_grid(corpus, oracle, k=args.k, seed=seed,
                               strategies=strategies, dt_params=params,
                               trustee_params=trustee)
    else:
        sets = _split_csv(args.sets)
        _check_names(sets, FEATURE_SET_NAMES, "feature set")
        report = kfold_eval(corpus, oracle, strategies=strategies,
                            feature_sets=sets, k=args.k, seed=seed,
                            dt_params=params, trustee_params=trustee)
    emit_report(report, args.out, args.fmt)
    print(f"wrote report ({len(report.cells)} cells) to {args.out}")
    return 0


def cmd_eval(args) -> int:
    return _run_report(args, grid=False)


def cmd_ablate(args) -> int:
    return _run_report(args, grid=True)


def cmd_explain(args) -> int:
    g = load_graph(args.graph)
    tree = load_tree(args.tree)
    vector = extract(g)
    row = vector.values
    missing = [name for name in tree.feature_names if name not in row]
    if missing:
        raise ValueError(f"tree expects unknown features: {missing}")
    label = predict_row(tree, row)
    print(f"graph: {g.graph_id}")
    print(f"prediction: {label}")
    print("path:")
    steps = decision_path(tree, row)
    if not steps:
        print("  (leaf)")
    for feature, threshold, op in steps:
        print(f"  {feature} {op} {threshold:g}  [value = {row[feature]:g}]")
        print(f"      {gloss(feature)}")
    print(f"  => {label}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="provex",
                     description="structural + security-motif features and "
                                 "decision-tree surrogates for provenance "
                                 "graph classifiers")
    sub = parser.add_subparsers(dest="subcommand", metavar="COMMAND")

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--template", choices=sorted(TEMPLATES),
                     help="generate one template family")
    src.add_argument("--preset", choices=sorted(PRESETS),
                     help="generate a benchmark mixture")
    p.add_argument("--count", type=int, metavar="N",
                   help="graphs to generate (template mode, default 10)")
    p.add_argument("--noise", type=float, default=0.0, metavar="F",
                   help="benign extra-edge fraction, 0..0.1 (template mode)")
    p.add_argument("--seed", type=int, metavar="S")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract the feature matrix CSV")
    p.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--set", choices=FEATURE_SET_NAMES,
                   default=FeatureSetId.ALL.value,
                   help="feature subset to emit (default All)")
    p.add_argument("--agg", choices=("mean", "max"), default="mean",
                   help="node-feature aggregation (default mean)")
    p.add_argument("--jobs", type=int, default=1, metavar="N",
                   help="worker processes for extraction (default 1)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit one surrogate tree")
    p.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    p.add_argument("--strategy", choices=STRATEGY_NAMES, default="FidelityDT")
    p.add_argument("--set", choices=FEATURE_SET_NAMES,
                   default=FeatureSetId.ALL.value)
    p.add_argument("--out", required=True, metavar="FILE",
                   help="serialized tree destination (JSON)")
    p.add_argument("--dot", metavar="FILE", help="also export Graphviz DOT")
    p.add_argument("--seed", type=int, metavar="S")
    _add_oracle_flags(p)
    _add_dt_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="k-fold surrogate evaluation report")
    p.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--fmt", choices=("csv", "markdown"), default="csv")
    p.add_argument("--strategies", default=",".join(STRATEGY_NAMES),
                   metavar="A,B", help="comma-separated strategy names")
    p.add_argument("--sets", default=FeatureSetId.ALL.value, metavar="A,B",
                   help="comma-separated feature sets (default All)")
    p.add_argument("--k", type=int, default=10, metavar="K")
    p.add_argument("--seed", type=int, metavar="S")
    _add_oracle_flags(p)
    _add_dt_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="feature-set ablation report")
    p.add_argument("--in", dest="in_dir", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--fmt", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--strategies", default="FidelityDT", metavar="A,B")
    p.add_argument("--k", type=int, default=10, metavar="K")
    p.add_argument("--seed", type=int, metavar="S")
    _add_oracle_flags(p)
    _add_dt_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("explain",
                       help="print a tree's decision path for one graph, "
                            "with problem-space glosses")
    p.add_argument("--graph", required=True, metavar="FILE")
    p.add_argument("--tree", required=True, metavar="FILE")
    p.set_defaults(func=cmd_explain)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"provex: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleError as exc:
        print(f"provex: oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (GraphFormatError, OSError, ValueError) as exc:
        print(f"provex: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
