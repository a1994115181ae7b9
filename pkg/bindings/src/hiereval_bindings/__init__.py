"""File-path evaluation API for research scripting pipelines.

Thin wrapper around the ``hiereval`` command line: each call runs one
evaluation in a subprocess and returns the report document as plain nested
dicts/lists, so the numbers are exactly what the CLI writes. Because the
work happens out of process, the interpreter lock is released for the
duration and concurrent calls from multiple threads are safe.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from importlib import metadata
from pathlib import Path

__version__ = metadata.version("hiereval")

__all__ = ["EvaluationError", "evaluate_task1_file", "evaluate_task2_file", "__version__"]


class EvaluationError(RuntimeError):
    """The core evaluator rejected the inputs; carries its message."""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _run(subcommand: str, gt_path, sub_path, options: dict | None) -> dict:
    opts = dict(options or {})
    cmd = [sys.executable, "-m", "hiereval", subcommand, "--gt", str(gt_path), "--sub", str(sub_path)]
    if opts.pop("per_image", False):
        cmd.append("--per-image")
    if "iou_threshold" in opts:
        cmd += ["--iou-threshold", str(opts.pop("iou_threshold"))]
    if "workers" in opts:
        cmd += ["--workers", str(opts.pop("workers"))]
    if opts.pop("lenient", False):
        cmd.append("--lenient")
    if opts:
        raise ValueError(f"unknown options: {sorted(opts)}")
    with tempfile.TemporaryDirectory(prefix="hiereval-") as tmp:
        out_path = Path(tmp) / "report.json"
        proc = subprocess.run(cmd + ["--out", str(out_path)], capture_output=True, text=True)
        if proc.returncode != 0:
            message = proc.stderr.strip() or f"hiereval exited with status {proc.returncode}"
            raise EvaluationError(message, proc.returncode)
        return json.loads(out_path.read_text(encoding="utf-8"))


def evaluate_task1_file(gt_path, sub_path, options: dict | None = None) -> dict:
    """Score a hierarchical detection submission file against a ground-truth file.

    Returns the task-1 report document (word/line/paragraph metric bundles
    plus their harmonic PQ combination) with the CLI's exact numbers.
    Recognized options: ``iou_threshold`` (float), ``per_image`` (bool),
    ``workers`` (int), ``lenient`` (bool).
    """
    return _run("eval-task1", gt_path, sub_path, options)


def evaluate_task2_file(gt_path, sub_path, options: dict | None = None) -> dict:
    """Score a word-level end-to-end submission file; same options as task 1."""
    return _run("eval-task2", gt_path, sub_path, options)
