"""Command-line front end: train, eval and predict subcommands.

All reports are line-oriented ``key=value`` text so runs can be scripted and
grepped; optional figures are written next to them. Runs with a fixed seed
and fixed inputs are bit-reproducible in both the model artifact and the
printed metrics.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import __version__
from .evaluation import collect_ranks, format_report, metrics_from_ranks, predict_top_k
from .kb_data import ClosureError, ParseError, load_dataset, parse_triples, read_triple_file
from .model import Dissimilarity, ModelFormatError, load_model, save_model
from .training import Hyperparams, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kge-translate",
        description="Translation-based knowledge-base embeddings: train, evaluate, predict.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    train_p = sub.add_parser("train", help="train embeddings on a train/valid/test dataset")
    train_p.add_argument("--train", required=True, metavar="FILE", help="training triples (TSV)")
    train_p.add_argument("--valid", required=True, metavar="FILE", help="validation triples (TSV)")
    train_p.add_argument("--test", required=True, metavar="FILE", help="test triples (TSV)")
    train_p.add_argument("--out", required=True, metavar="FILE", help="where to write the best model")
    train_p.add_argument("--k", type=int, default=50, help="embedding dimension (default 50)")
    train_p.add_argument("--margin", type=float, default=1.0, help="ranking margin (default 1)")
    train_p.add_argument("--lr", type=float, default=0.01, help="learning rate (default 0.01)")
    train_p.add_argument("--epochs", type=int, default=1000, help="epoch budget (default 1000)")
    train_p.add_argument(
        "--dissim",
        choices=[kind.token for kind in Dissimilarity],
        default="l1",
        help="dissimilarity function (default l1)",
    )
    train_p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    train_p.add_argument(
        "--eval-every",
        type=int,
        default=None,
        metavar="N",
        help="epochs between validation evaluations (default min(25, epochs))",
    )
    train_p.add_argument(
        "--valid-sample",
        type=int,
        default=1000,
        metavar="N",
        help="validation subsample size for model selection, 0 = use all (default 1000)",
    )
    train_p.add_argument("--plot", metavar="FILE", help="write training-curve figure (png/pdf)")
    train_p.set_defaults(run=cmd_train)

    eval_p = sub.add_parser("eval", help="rank-evaluate a saved model on a triple file")
    eval_p.add_argument("--model", required=True, metavar="FILE", help="saved model file")
    eval_p.add_argument("--triples", required=True, metavar="FILE", help="triples to rank (TSV)")
    eval_p.add_argument(
        "--scorer",
        choices=["translate", "unstructured"],
        default="translate",
        help="scoring function (default translate)",
    )
    eval_p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    eval_p.add_argument("--plot", metavar="FILE", help="write rank-histogram figure (png/pdf)")
    eval_p.set_defaults(run=cmd_eval)

    predict_p = sub.add_parser("predict", help="list the best tails for a (head, label) query")
    predict_p.add_argument("--model", required=True, metavar="FILE", help="saved model file")
    predict_p.add_argument("--head", required=True, help="head entity name")
    predict_p.add_argument("--label", required=True, help="relation name")
    predict_p.add_argument("--n", type=int, default=10, help="number of predictions (default 10)")
    predict_p.set_defaults(run=cmd_predict)
    return parser


def cmd_train(args: argparse.Namespace) -> int:
    kb = load_dataset(args.train, args.valid, args.test)
    counts = kb.counts
    print(
        f"entities={kb.num_entities} relations={kb.num_relations} "
        f"train={counts['train']} valid={counts['valid']} test={counts['test']}"
    )
    eval_every = args.eval_every if args.eval_every is not None else min(25, args.epochs)
    hp = Hyperparams(
        k=args.k,
        margin=args.margin,
        learning_rate=args.lr,
        max_epochs=args.epochs,
        eval_every=eval_every,
        seed=args.seed,
        dissim=Dissimilarity.from_token(args.dissim),
        valid_sample=args.valid_sample if args.valid_sample > 0 else None,
    )
    model, report = train(kb, hp, progress=print)
    save_model(model, kb.entities, kb.relations, args.out)
    print(f"best_epoch={report.best_epoch} best_valid_mean_rank={report.best_valid_mean_rank:.3f}")
    print(f"model={args.out}")
    if args.plot:
        from .figures import save_training_curves

        save_training_curves(report, args.plot)
        print(f"plot={args.plot}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    model, entities, relations = load_model(args.model)
    records = read_triple_file(args.triples)
    triples = parse_triples(records, entities, relations, split="eval")
    if not triples:
        raise ValueError(f"{args.triples}: no triples to evaluate")
    head_ranks, tail_ranks = collect_ranks(model, triples, args.scorer, threads=args.threads)
    for line in format_report(*metrics_from_ranks(head_ranks, tail_ranks)):
        print(line)
    if args.plot:
        from .figures import save_rank_histogram

        save_rank_histogram(head_ranks, tail_ranks, args.plot)
        print(f"plot={args.plot}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model, entities, relations = load_model(args.model)
    if args.head not in entities:
        raise ValueError(f"unknown entity name {args.head!r}")
    if args.label not in relations:
        raise ValueError(f"unknown relation name {args.label!r}")
    predictions = predict_top_k(model, entities.id_of(args.head), relations.id_of(args.label), args.n)
    for position, (entity, score) in enumerate(predictions, start=1):
        print(f"{position}\t{entities.name_of(entity)}\t{score:.6f}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except (ParseError, ClosureError, ModelFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
