"""Command-line entry point.

Subcommands: eval-task1, eval-task2, validate, stats, leaderboard,
gen-fixtures. Results go to --out or stdout only; inputs are never
touched. Exit codes: 0 success, 1 evaluation/contract error, 2 usage
error (bad flags or unreadable paths), 3 validation failure. The
HIEREVAL_LOG environment variable (error|warn|info|debug) controls
diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .annotations import (
    parse_ground_truth,
    parse_task1_submission,
    parse_task2_submission,
    validate_dataset,
)
from .errors import HierEvalError, ValidationError
from .evaluators import EvalOptions, evaluate_task1, evaluate_task2, report_to_doc
from .fixtures import config_from_doc, generate_scene, write_bundle
from .leaderboard import load_manifest, rank_entries, render_report, split_archived
from .metrics import char_histogram, word_density

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _configure_logging():
    name = os.environ.get("HIEREVAL_LOG", "warn").lower()
    level = _LOG_LEVELS.get(name, logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("hiereval")
    root.handlers[:] = [handler]
    root.setLevel(level)


def _emit(data: bytes, out: str | None):
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def _dump_doc(doc) -> bytes:
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def _eval_options(args) -> EvalOptions:
    return EvalOptions(
        iou_threshold=args.iou_threshold,
        parallelism=args.workers,
        per_image_breakdown=args.per_image,
        strict=not args.lenient,
    )


def _cmd_eval_task1(args) -> int:
    gt = parse_ground_truth(Path(args.gt).read_bytes())
    sub = parse_task1_submission(Path(args.sub).read_bytes())
    report = evaluate_task1(gt, sub, _eval_options(args))
    _emit(_dump_doc(report_to_doc(report)), args.out)
    return EXIT_OK


def _cmd_eval_task2(args) -> int:
    gt = parse_ground_truth(Path(args.gt).read_bytes())
    sub = parse_task2_submission(Path(args.sub).read_bytes())
    report = evaluate_task2(gt, sub, _eval_options(args))
    _emit(_dump_doc(report_to_doc(report)), args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = validate_dataset(parse_ground_truth(Path(args.gt).read_bytes()))
    _emit(_dump_doc(report.to_doc()), args.out)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_stats(args) -> int:
    ds = parse_ground_truth(Path(args.gt).read_bytes())
    doc = {"word_density": word_density(ds), "char_histogram": char_histogram(ds)}
    _emit(_dump_doc(doc), args.out)
    return EXIT_OK


def _cmd_leaderboard(args) -> int:
    task = f"task{args.task}"
    records = load_manifest(args.manifest)
    if records and records[0].task != task:
        raise ValidationError(f"manifest holds {records[0].task} entries but --task {args.task} was given")
    kept, archived = split_archived(records)
    for rec in archived:
        logger.info("archiving older duplicate submission %r from %r", rec.method_name, rec.user_id)
    rows = rank_entries(kept)
    _emit(render_report(rows, args.format, task), args.out)
    return EXIT_OK


def _cmd_gen_fixtures(args) -> int:
    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        doc["seed"] = args.seed
    bundle = generate_scene(config_from_doc(doc))
    write_bundle(bundle, args.out)
    logger.info("wrote fixture bundle to %s", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiereval",
        description="Score hierarchical text detection (word/line/paragraph PQ) and "
        "word-level end-to-end recognition submissions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_eval(name: str, help_text: str, func) -> None:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--gt", required=True, help="ground-truth JSON file")
        p.add_argument("--sub", required=True, help="submission JSON file")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--per-image", action="store_true", help="include a per-image breakdown")
        p.add_argument("--iou-threshold", type=float, default=0.5)
        p.add_argument("--workers", type=int, default=None, help="worker count (default: cores)")
        p.add_argument("--lenient", action="store_true", help="drop unknown image ids instead of failing")
        p.set_defaults(func=func)

    add_eval("eval-task1", "score a hierarchical detection submission", _cmd_eval_task1)
    add_eval("eval-task2", "score a word-level end-to-end submission", _cmd_eval_task2)

    p = sub.add_parser("validate", help="check a ground-truth file; exit 3 on violations")
    p.add_argument("--gt", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("stats", help="character histogram and word density of a ground-truth file")
    p.add_argument("--gt", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("leaderboard", help="deduplicate, rank and render submissions")
    p.add_argument("--manifest", required=True, help="manifest JSON listing submissions")
    p.add_argument("--task", required=True, choices=["1", "2"])
    p.add_argument("--format", default="table", choices=["table", "csv", "structured"])
    p.add_argument("--out")
    p.set_defaults(func=_cmd_leaderboard)

    p = sub.add_parser("gen-fixtures", help="generate a synthetic fixture bundle")
    p.add_argument("--seed", type=int, default=None, help="override the config's seed")
    p.add_argument("--config", required=True, help="scene config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen_fixtures)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging()
    if getattr(args, "format", None) == "table":
        args.format = "plain-table"
    try:
        return args.func(args)
    except OSError as exc:
        print(f"hiereval: cannot read/write {getattr(exc, 'filename', None) or ''}: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except HierEvalError as exc:
        print(f"hiereval: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except json.JSONDecodeError as exc:
        print(f"hiereval: error: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
