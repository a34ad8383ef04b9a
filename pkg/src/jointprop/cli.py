"""Command-line front end: propagate, evaluate, split.

Exit codes: 0 success, 1 validation failure (bad arguments, malformed
inputs, inconsistent corpora), 2 I/O failure.  Reports are JSON with
sorted keys; two runs with identical inputs produce identical bytes
apart from the timing block.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import ExitStack
from dataclasses import replace

from .corpus import Corpus, load_corpus, save_corpus, split_corpus
from .embed import read_embeddings
from .errors import ValidationError
from .pipeline import RunConfig, evaluate_against_gold, run_joint
from .report import empty_report, render_report, write_trace_csv


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message):
        raise ValidationError(message)


def build_parser() -> _Parser:
    parser = _Parser(
        prog="jointprop",
        description="Propagate entity and relation labels over kNN affinity graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    prop = sub.add_parser("propagate", help="run joint propagation and emit an augmented corpus")
    prop.add_argument("--corpus", required=True, help="input corpus JSONL")
    prop.add_argument("--embeddings", required=True, help="token embedding file")
    prop.add_argument("--out", required=True, help="augmented corpus JSONL to write")
    prop.add_argument("--report", required=True, help="run report JSON to write")
    prop.add_argument("--k", type=int, default=50, help="neighbors per node")
    prop.add_argument("--sigma", type=float, default=2.0, help="Gaussian kernel bandwidth")
    prop.add_argument("--c", type=float, default=0.99, help="propagation mixing coefficient")
    prop.add_argument("--threshold", type=float, default=0.7, help="confidence threshold")
    prop.add_argument(
        "--threshold-quantile",
        type=float,
        default=None,
        metavar="Q",
        help="use the Q-quantile of observed confidences as the threshold instead",
    )
    prop.add_argument("--max-width", type=int, default=8, help="maximum span width in tokens")
    prop.add_argument("--rounds", type=int, default=1, help="entity/relation alternation count")
    prop.add_argument(
        "--restrict-pairs",
        action="store_true",
        help="pair only gold and pseudo-labeled spans instead of all spans",
    )
    prop.add_argument("--seed", type=int, default=0, help="random seed (used by --split)")
    prop.add_argument(
        "--split",
        type=float,
        default=None,
        metavar="FRACTION",
        help="re-split the corpus: this fraction labeled, the rest unlabeled",
    )
    prop.add_argument(
        "--split-unit",
        choices=("sentence", "document"),
        default="sentence",
        help="unit of the --split shuffle",
    )
    prop.add_argument("--tol", type=float, default=1e-9, help="convergence tolerance")
    prop.add_argument("--max-iters", type=int, default=10000, help="iteration cap")
    prop.add_argument("--dump-graph", default=None, metavar="F", help="write graph edges as JSONL")
    prop.add_argument("--trace", default=None, metavar="F", help="write convergence trace CSV")

    ev = sub.add_parser("evaluate", help="score propagated annotations against held-out gold")
    ev.add_argument("--augmented", required=True, help="augmented corpus JSONL")
    ev.add_argument("--gold", required=True, help="gold corpus JSONL")
    ev.add_argument("--report", required=True, help="evaluation report JSON to write")

    sp = sub.add_parser("split", help="split a corpus into labeled and unlabeled parts")
    sp.add_argument("--corpus", required=True, help="input corpus JSONL")
    sp.add_argument("--fraction", type=float, required=True, help="labeled fraction")
    sp.add_argument("--seed", type=int, default=0, help="shuffle seed")
    sp.add_argument("--unit", choices=("sentence", "document"), default="sentence")
    sp.add_argument("--out-labeled", required=True, help="labeled part JSONL to write")
    sp.add_argument("--out-unlabeled", required=True, help="unlabeled part JSONL to write")

    return parser


def _apply_split(corpus: Corpus, fraction: float, seed: int, unit: str) -> Corpus:
    """Re-flag sentences per a fresh split, preserving corpus order."""
    labeled_part, _ = split_corpus(corpus, fraction, seed, unit)
    labeled_ids = {s.id for s in labeled_part.sentences}
    sentences = tuple(
        replace(s, labeled=s.id in labeled_ids) for s in corpus.sentences
    )
    return Corpus(sentences, corpus.catalog)


def _task_summary(block: dict) -> str:
    if block["skipped"]:
        return f"skipped ({block['skip_reason']})"
    return f"{block['emitted']}/{block['unlabeled']} emitted"


def _cmd_propagate(args) -> int:
    corpus = load_corpus(args.corpus)
    if args.split is not None:
        corpus = _apply_split(corpus, args.split, args.seed, args.split_unit)
    store = read_embeddings(args.embeddings, corpus=corpus)
    config = RunConfig(
        k=args.k,
        sigma=args.sigma,
        c=args.c,
        threshold=args.threshold,
        threshold_quantile=args.threshold_quantile,
        max_width=args.max_width,
        rounds=args.rounds,
        restrict_pairs=args.restrict_pairs,
        tol=args.tol,
        max_iters=args.max_iters,
        seed=args.seed,
    )
    with ExitStack() as stack:
        graph_sink = None
        if args.dump_graph is not None:
            graph_sink = stack.enter_context(open(args.dump_graph, "w", encoding="utf-8"))
        trace = [] if args.trace is not None else None
        augmented, rep = run_joint(config, corpus, store, graph_sink=graph_sink, trace=trace)
        if args.trace is not None:
            with open(args.trace, "w", encoding="utf-8", newline="") as fh:
                write_trace_csv(fh, trace)
    save_corpus(augmented, args.out)
    with open(args.report, "wb") as fh:
        fh.write(render_report(rep))
    tasks = rep["tasks"]
    print(f"entity: {_task_summary(tasks['entity'])}; relation: {_task_summary(tasks['relation'])}")
    return 0


def _cmd_evaluate(args) -> int:
    augmented = load_corpus(args.augmented)
    gold = load_corpus(args.gold)
    results = evaluate_against_gold(augmented, gold)
    rep = empty_report()
    rep["evaluation"] = results
    with open(args.report, "wb") as fh:
        fh.write(render_report(rep))
    for task in ("entity", "relation"):
        r = results[task]
        print(
            f"{task}: precision={r['precision']:.4f} recall={r['recall']:.4f} f1={r['f1']:.4f}"
            f" ({r['correct']}/{r['emitted']} correct, {r['gold']} gold)"
        )
    return 0


def _cmd_split(args) -> int:
    corpus = load_corpus(args.corpus)
    labeled, unlabeled = split_corpus(corpus, args.fraction, args.seed, args.unit)
    save_corpus(labeled, args.out_labeled)
    save_corpus(unlabeled, args.out_unlabeled)
    print(f"labeled: {len(labeled.sentences)} sentences; unlabeled: {len(unlabeled.sentences)}")
    return 0


_COMMANDS = {
    "propagate": _cmd_propagate,
    "evaluate": _cmd_evaluate,
    "split": _cmd_split,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
