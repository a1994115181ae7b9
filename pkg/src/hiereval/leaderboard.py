"""Submission deduplication, ranking and table rendering.

Each team keeps only its latest submission: entries sharing a user account
are one team, and so are entries whose author list and method description
are identical (compared case-folded with collapsed whitespace). Task-1
entries rank by the harmonic mean of the three PQ scores, task-2 entries
by word F1; ties go to the earlier submission.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractViolation, SchemaError
from .evaluators import LEVELS, Task1Report, Task2Report, report_from_doc, report_to_doc
from .metrics import percent_str

logger = logging.getLogger(__name__)

__all__ = [
    "SubmissionRecord",
    "LeaderboardRow",
    "dedup_submissions",
    "split_archived",
    "rank_entries",
    "render_report",
    "load_manifest",
]


@dataclass(frozen=True)
class SubmissionRecord:
    user_id: str
    method_name: str
    method_description: str
    authors: str
    timestamp: float
    task: str  # "task1" | "task2"
    report: Task1Report | Task2Report

    @property
    def key_metric(self) -> float:
        if self.task == "task1":
            return self.report.hpq.value
        return self.report.word.f1


@dataclass(frozen=True)
class LeaderboardRow:
    rank: int
    record: SubmissionRecord
    key_metric: float


def _normalize(text: str) -> str:
    return " ".join(text.split()).casefold()


def split_archived(records: list[SubmissionRecord]) -> tuple[list[SubmissionRecord], list[SubmissionRecord]]:
    """(survivors, archived older duplicates), survivors in input order."""
    tasks = {r.task for r in records}
    if len(tasks) > 1:
        raise ContractViolation(f"records must all belong to one task, got {sorted(tasks)}")

    def latest_per_key(items: list[SubmissionRecord], key) -> set[int]:
        best: dict[object, int] = {}
        for i, rec in enumerate(items):
            k = key(rec)
            if k not in best or rec.timestamp >= items[best[k]].timestamp:
                best[k] = i
        return set(best.values())

    survivors = list(records)
    keep = latest_per_key(survivors, lambda r: r.user_id)
    survivors = [r for i, r in enumerate(survivors) if i in keep]
    keep = latest_per_key(survivors, lambda r: (_normalize(r.authors), _normalize(r.method_description)))
    survivors = [r for i, r in enumerate(survivors) if i in keep]
    kept_ids = {id(r) for r in survivors}
    archived = [r for r in records if id(r) not in kept_ids]
    return survivors, archived


def dedup_submissions(records: list[SubmissionRecord]) -> list[SubmissionRecord]:
    """Keep only each team's latest submission (see module docstring)."""
    return split_archived(records)[0]


def rank_entries(records: list[SubmissionRecord]) -> list[LeaderboardRow]:
    """Rank deduplicated records by their task's key metric, descending."""
    ordered = sorted(records, key=lambda r: (-r.key_metric, r.timestamp))
    return [LeaderboardRow(i + 1, rec, rec.key_metric) for i, rec in enumerate(ordered)]


def _task1_header() -> list[str]:
    cols = ["rank", "user_id", "method_name", "h_pq"]
    for level in LEVELS:
        cols += [f"{level}_{m}" for m in ("pq", "f", "p", "r", "t")]
    return cols


def _task1_values(row: LeaderboardRow) -> list[str]:
    rep = row.record.report
    vals = [str(row.rank), row.record.user_id, row.record.method_name, percent_str(rep.hpq.value)]
    for level in LEVELS:
        b = rep.bundle(level)
        vals += [percent_str(b.pq), percent_str(b.f1), percent_str(b.precision), percent_str(b.recall), percent_str(b.tightness)]
    return vals


def _task2_header() -> list[str]:
    return ["rank", "user_id", "method_name", "word_pq", "word_f", "word_p", "word_r", "word_t"]


def _task2_values(row: LeaderboardRow) -> list[str]:
    b = row.record.report.word
    return [
        str(row.rank),
        row.record.user_id,
        row.record.method_name,
        percent_str(b.pq),
        percent_str(b.f1),
        percent_str(b.precision),
        percent_str(b.recall),
        percent_str(b.tightness),
    ]


def render_report(rows: list[LeaderboardRow], format: str = "plain-table", task: str | None = None) -> bytes:
    """Render ranked rows as 'plain-table', 'csv' or 'structured' (JSON).

    ``task`` picks the column set when ``rows`` is empty; with rows present
    it must match their task.
    """
    if rows:
        row_task = rows[0].record.task
        if task is not None and task != row_task:
            raise ContractViolation(f"rows belong to {row_task}, not {task}")
        task = row_task
    elif task is None:
        task = "task1"
    header = _task1_header() if task == "task1" else _task2_header()
    values = _task1_values if task == "task1" else _task2_values

    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(values(row))
        return buf.getvalue().encode("utf-8")

    if format == "plain-table":
        table = [header] + [values(row) for row in rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in table]
        return ("\n".join(lines) + "\n").encode("utf-8")

    if format == "structured":
        doc = {
            "task": task,
            "rows": [
                {
                    "rank": row.rank,
                    "user_id": row.record.user_id,
                    "method_name": row.record.method_name,
                    "method_description": row.record.method_description,
                    "authors": row.record.authors,
                    "timestamp": row.record.timestamp,
                    "key_metric": row.key_metric,
                    "report": report_to_doc(row.record.report),
                }
                for row in rows
            ],
        }
        return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")

    raise ContractViolation(f"unknown leaderboard format {format!r}")


def load_manifest(path: str | Path) -> list[SubmissionRecord]:
    """Read a manifest document listing submissions and their report files.

    Schema: {"task": "task1"|"task2", "entries": [{"user_id", "method_name",
    "method_description", "authors", "timestamp", "report_path"}]}. Report
    paths are resolved relative to the manifest's directory.
    """
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise SchemaError("$", "manifest must be an object")
    task = doc.get("task")
    if task not in ("task1", "task2"):
        raise SchemaError("$.task", f"task must be 'task1' or 'task2', got {task!r}")
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise SchemaError("$.entries", "missing entries array")
    records = []
    for i, entry in enumerate(entries):
        epath = f"$.entries[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(epath, "entry must be an object")
        try:
            report_path = (path.parent / str(entry["report_path"])).resolve()
            report = report_from_doc(json.loads(report_path.read_text(encoding="utf-8")))
            record = SubmissionRecord(
                user_id=str(entry["user_id"]),
                method_name=str(entry["method_name"]),
                method_description=str(entry.get("method_description", "")),
                authors=str(entry.get("authors", "")),
                timestamp=float(entry["timestamp"]),
                task=task,
                report=report,
            )
        except KeyError as exc:
            raise SchemaError(epath, f"missing required field {exc.args[0]!r}") from exc
        expected = Task1Report if task == "task1" else Task2Report
        if not isinstance(record.report, expected):
            raise SchemaError(epath, f"report at {entry['report_path']} does not match task {task}")
        records.append(record)
    return records
