"""Deduplication, ranking and rendering tests, including reference rows."""

from __future__ import annotations

import json

import pytest

from reference_rows import (
    TASK1_ROWS,
    TASK2_ROWS,
    bundle_from_percents,
    task1_records,
    task2_records,
)
from hiereval.errors import ContractViolation, SchemaError
from hiereval.evaluators import Task2Report, report_to_doc
from hiereval.leaderboard import (
    LeaderboardRow,
    SubmissionRecord,
    dedup_submissions,
    load_manifest,
    rank_entries,
    render_report,
    split_archived,
)


def record(user="u", method="m", desc="d", authors="a", t=0.0, f1=0.5) -> SubmissionRecord:
    report = Task2Report(word=bundle_from_percents((f1 * 100, f1 * 100, 50, 50, 50)))
    return SubmissionRecord(user, method, desc, authors, t, "task2", report)


class TestDedup:
    def test_same_user_keeps_latest(self):
        early, late = record(t=1.0, f1=0.9), record(t=2.0, f1=0.1)
        assert dedup_submissions([early, late]) == [late]

    def test_same_authors_and_description_keeps_latest(self):
        a = record(user="u1", desc="Two-stage detector", authors="A. One, B. Two", t=1.0)
        b = record(user="u2", desc="two-stage  detector", authors="a. one,  b. two", t=2.0)
        assert dedup_submissions([a, b]) == [b]

    def test_distinct_teams_kept(self):
        a = record(user="u1", desc="method one", authors="x", t=1.0)
        b = record(user="u2", desc="method two", authors="y", t=2.0)
        assert dedup_submissions([a, b]) == [a, b]

    def test_empty(self):
        assert dedup_submissions([]) == []

    def test_idempotent(self):
        records = [
            record(user="u1", t=1.0),
            record(user="u1", t=3.0),
            record(user="u2", desc="same", authors="same", t=2.0),
            record(user="u3", desc="Same", authors="SAME", t=4.0),
        ]
        once = dedup_submissions(records)
        assert dedup_submissions(once) == once
        assert len(once) == 2

    def test_survivors_keep_input_order(self):
        records = [
            record(user="u2", desc="b", authors="b", t=5.0),
            record(user="u1", desc="a", authors="a", t=1.0),
            record(user="u1", desc="a2", authors="a", t=2.0),
        ]
        kept = dedup_submissions(records)
        assert [r.user_id for r in kept] == ["u2", "u1"]

    def test_archived_side_list(self):
        early, late = record(t=1.0), record(t=2.0)
        kept, archived = split_archived([early, late])
        assert kept == [late] and archived == [early]

    def test_mixed_tasks_rejected(self):
        t1 = task1_records()[0]
        with pytest.raises(ContractViolation):
            dedup_submissions([t1, record()])


class TestRank:
    def test_reference_task1_order(self):
        rows = rank_entries(task1_records())
        assert [r.rank for r in rows] == list(range(1, 12))
        assert [r.record.user_id for r in rows] == [row[0] for row in TASK1_ROWS]

    def test_reference_task2_order_ranked_by_f1_not_pq(self):
        rows = rank_entries(task2_records())
        assert [r.record.user_id for r in rows] == [row[0] for row in TASK2_ROWS]
        # the F1 ranking places a lower-PQ entry above a higher-PQ one
        by_user = {r.record.user_id: r for r in rows}
        assert by_user["ssm"].rank < by_user["Mike Ranzinger"].rank
        assert by_user["ssm"].record.report.word.pq < by_user["Mike Ranzinger"].record.report.word.pq

    def test_single_record(self):
        rows = rank_entries([record()])
        assert rows[0].rank == 1

    def test_tie_goes_to_earlier_timestamp(self):
        a = record(user="u1", t=5.0, f1=0.5)
        b = record(user="u2", t=2.0, f1=0.5)
        rows = rank_entries([a, b])
        assert [r.record.user_id for r in rows] == ["u2", "u1"]

    def test_ranking_is_permutation(self):
        records = task2_records()
        rows = rank_entries(records)
        assert sorted(id(r.record) for r in rows) == sorted(id(r) for r in records)


class TestRender:
    def test_empty_csv_is_header_only(self):
        out = render_report([], "csv").decode()
        assert out.count("\n") == 1 and out.startswith("rank,")
        task2_header = render_report([], "csv", "task2").decode()
        assert "word_pq" in task2_header and "line_pq" not in task2_header

    def test_task_argument_must_match_rows(self):
        rows = rank_entries(task2_records())
        with pytest.raises(ContractViolation):
            render_report(rows, "csv", "task1")

    def test_single_row_two_decimal_percents(self):
        rows = rank_entries([record(f1=0.5)])
        out = render_report(rows, "csv").decode()
        assert "50.00" in out.splitlines()[1]

    def test_task2_csv_f_column_verbatim(self):
        rows = rank_entries(task2_records())
        lines = render_report(rows, "csv").decode().splitlines()
        f_idx = lines[0].split(",").index("word_f")
        f_column = [line.split(",")[f_idx] for line in lines[1:]]
        assert f_column == ["79.58", "77.93", "76.15", "74.10", "73.41", "71.64", "54.30"]

    def test_task1_csv_has_all_level_columns(self):
        rows = rank_entries(task1_records())
        header = render_report(rows, "csv").decode().splitlines()[0].split(",")
        for level in ("word", "line", "paragraph"):
            for metric in ("pq", "f", "p", "r", "t"):
                assert f"{level}_{metric}" in header
        assert "h_pq" in header

    def test_plain_table_deterministic(self):
        rows = rank_entries(task2_records())
        assert render_report(rows, "plain-table") == render_report(rows, "plain-table")

    def test_structured_round_trip(self):
        rows = rank_entries(task2_records())
        doc = json.loads(render_report(rows, "structured"))
        assert doc["task"] == "task2"
        assert [r["rank"] for r in doc["rows"]] == list(range(1, 8))
        assert [r["user_id"] for r in doc["rows"]] == [row[0] for row in TASK2_ROWS]
        # raw fractions survive the round trip bit-exactly
        for row, rendered in zip(rows, doc["rows"]):
            assert rendered["key_metric"] == row.key_metric
            assert rendered["report"]["levels"]["word"]["f1"] == row.record.report.word.f1

    def test_unknown_format_rejected(self):
        with pytest.raises(ContractViolation):
            render_report([], "xml")


class TestManifest:
    def test_load_and_rank(self, tmp_path):
        records = task2_records()
        entries = []
        for i, rec in enumerate(records):
            report_path = tmp_path / f"report_{i}.json"
            report_path.write_text(json.dumps(report_to_doc(rec.report)), encoding="utf-8")
            entries.append(
                {
                    "user_id": rec.user_id,
                    "method_name": rec.method_name,
                    "method_description": rec.method_description,
                    "authors": rec.authors,
                    "timestamp": rec.timestamp,
                    "report_path": report_path.name,
                }
            )
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"task": "task2", "entries": entries}), encoding="utf-8")
        loaded = load_manifest(manifest)
        rows = rank_entries(dedup_submissions(loaded))
        assert [r.record.user_id for r in rows] == [row[0] for row in TASK2_ROWS]

    def test_missing_field_is_schema_error(self, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"task": "task2", "entries": [{"user_id": "u"}]}), encoding="utf-8")
        with pytest.raises(SchemaError):
            load_manifest(manifest)

    def test_bad_task_is_schema_error(self, tmp_path):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"task": "task3", "entries": []}), encoding="utf-8")
        with pytest.raises(SchemaError):
            load_manifest(manifest)
