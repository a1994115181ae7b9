"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest tests/test_acceptance.py -s` to see them).

Absolute scores on withheld benchmark data cannot be re-derived here; the
identity, oracle-equivalence and protocol-rule checks below stand in for
them.
"""

from __future__ import annotations

import functools
import json
import resource
import time

import pytest

from conftest import make_dataset, make_image, make_word, rect
from reference_rows import (
    BASELINE_HPQ,
    BASELINE_PQ_TRIPLE,
    TASK1_ROWS,
    TASK2_ROWS,
    task1_records,
    task2_records,
)
from scene_helpers import random_scene_config
from hiereval.annotations import Task2Submission, Task2Word
from hiereval.cli import run
from hiereval.evaluators import EvalOptions, evaluate_task1, evaluate_task2
from hiereval.fixtures import NoiseConfig, SceneConfig, generate_scene, write_bundle
from hiereval.geometry import Grid, mask_iou, rasterize_polygon
from hiereval.leaderboard import rank_entries
from hiereval.metrics import h_pq, pearson
from hiereval.oracle import oracle_evaluate_task1, oracle_evaluate_task2


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE FAIL: {name}")
                raise
            print(f"ACCEPTANCE PASS: {name}")

        return wrapper

    return decorate


def f_from_pr(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r else 0.0


@criterion("metric identities on published rows within +/-0.005")
def test_metric_identities_published_rows():
    failures = []
    rows = [(user, level_name, values) for user, _m, _h, w, l, p in TASK1_ROWS
            for level_name, values in (("word", w), ("line", l), ("paragraph", p))]
    rows += [(user, "word", values) for user, _m, values in TASK2_ROWS]
    for user, level_name, (pq, f, p, r, t) in rows:
        df = abs(f_from_pr(p, r) - f)
        dpq = abs(t * f / 100.0 - pq)
        if df > 0.005:
            failures.append(f"{user}/{level_name}: |F(P,R)-F| = {df:.4f}")
        if dpq > 0.005:
            failures.append(f"{user}/{level_name}: |T*F-PQ| = {dpq:.4f}")
    assert not failures, (
        "published columns deviate beyond +/-0.005 when recomputed from their "
        "rounded inputs:\n  " + "\n  ".join(failures)
    )


def test_metric_identities_hold_at_propagated_rounding_slack():
    # The inputs of each identity are themselves rounded to 2 decimals, so
    # the attainable bound is ~0.01 (output half-ulp + propagated input
    # half-ulps); every row satisfies that.
    for user, _m, _h, w, l, p in TASK1_ROWS:
        for pq, f, pp, r, t in (w, l, p):
            assert abs(f_from_pr(pp, r) - f) <= 0.01, user
            assert abs(t * f / 100.0 - pq) <= 0.01, user
    for user, _m, (pq, f, pp, r, t) in TASK2_ROWS:
        assert abs(f_from_pr(pp, r) - f) <= 0.01, user
        assert abs(t * f / 100.0 - pq) <= 0.01, user


@criterion("H-PQ reproduction on published triples")
def test_hpq_reproduction():
    word, line, para = TASK1_ROWS[0][3][0], TASK1_ROWS[0][4][0], TASK1_ROWS[0][5][0]
    assert h_pq(word, line, para).value == pytest.approx(76.85, abs=0.01)
    assert h_pq(*BASELINE_PQ_TRIPLE).value == pytest.approx(BASELINE_HPQ, abs=0.01)
    last = TASK1_ROWS[-1]
    assert h_pq(last[3][0], last[4][0], last[5][0]).value == 0.0  # word PQ 0.00 -> 0 exactly


@criterion("leaderboard rank-order reproduction")
def test_leaderboard_reproduction():
    rows1 = rank_entries(task1_records())
    assert [r.record.user_id for r in rows1] == [row[0] for row in TASK1_ROWS]
    assert [r.rank for r in rows1] == list(range(1, 12))
    rows2 = rank_entries(task2_records())
    assert [r.record.user_id for r in rows2] == [row[0] for row in TASK2_ROWS]
    assert [r.rank for r in rows2] == list(range(1, 8))
    # ranking is by F1: a lower-PQ entry outranks a higher-PQ one
    by_user = {r.record.user_id: r for r in rows2}
    low_pq, high_pq = by_user["ssm"], by_user["Mike Ranzinger"]
    assert low_pq.record.report.word.pq < high_pq.record.report.word.pq
    assert low_pq.rank < high_pq.rank


@criterion("oracle equivalence over 200+ seeded scenes")
def test_oracle_equivalence_200_scenes():
    start = time.perf_counter()
    n_small, n_big = 192, 12
    opts = EvalOptions()
    for index in range(n_small + n_big):
        cfg = random_scene_config(index, big=index >= n_small)
        bundle = generate_scene(cfg)
        ours1 = evaluate_task1(bundle.gt, bundle.task1, opts)
        ref1 = oracle_evaluate_task1(bundle.gt, bundle.task1, opts)
        for level in ("word", "line", "paragraph"):
            a, b = ours1.bundle(level), ref1.bundle(level)
            assert (a.tp, a.fp, a.fn) == (b.tp, b.fp, b.fn), f"scene {index} {level}"
            assert abs(a.iou_sum - b.iou_sum) <= 1e-9, f"scene {index} {level}"
        ours2 = evaluate_task2(bundle.gt, bundle.task2, opts)
        ref2 = oracle_evaluate_task2(bundle.gt, bundle.task2, opts)
        assert (ours2.word.tp, ours2.word.fp, ours2.word.fn) == (ref2.word.tp, ref2.word.fp, ref2.word.fn)
        assert abs(ours2.word.iou_sum - ref2.word.iou_sum) <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0, f"equivalence sweep took {elapsed:.1f}s"


@criterion("protocol rules: case sensitivity and don't-care handling")
def test_protocol_rules():
    # Case-flipped transcriptions never match.
    flip = generate_scene(
        SceneConfig(seed=71, image_count=2, grid=Grid(200, 200), word_size=(6, 10), words_per_line=(1, 4),
                    noise=NoiseConfig(case_flip_prob=1.0))
    )
    assert evaluate_task2(flip.gt, flip.task2).word.tp == 0

    # Predictions overlapping an illegible region beyond 0.5 are removed,
    # not false positives, and the region itself is never a false negative.
    gt = make_dataset(make_image("i", 32, 32, [[[make_word(4, 4, 10, 6, "", legible=False)]]]))
    overlapping = Task2Submission({"i": (Task2Word(rect(5, 4, 10, 6), "guess"),)})
    bundle = evaluate_task2(gt, overlapping).word
    assert (bundle.tp, bundle.fp, bundle.fn) == (0, 0, 0)

    # IoU of exactly 0.5 against a don't-care region keeps the prediction.
    gt2 = make_dataset(make_image("j", 32, 32, [[[make_word(0, 0, 4, 4, "", legible=False)]]]))
    half = Task2Submission({"j": (Task2Word(rect(0, 0, 2, 4), "x"),)})
    grid = Grid(32, 32)
    assert mask_iou(rasterize_polygon(rect(0, 0, 2, 4), grid), rasterize_polygon(rect(0, 0, 4, 4), grid)) == 0.5
    bundle = evaluate_task2(gt2, half).word
    assert (bundle.tp, bundle.fp, bundle.fn) == (0, 1, 0)


@criterion("self-evaluation scores 1.0 everywhere")
def test_self_evaluation():
    for seed in (5, 29, 73):
        bundle = generate_scene(
            SceneConfig(seed=seed, image_count=2, grid=Grid(200, 200), word_size=(6, 10),
                        words_per_line=(1, 4), illegible_fraction=0.2)
        )
        report = evaluate_task1(bundle.gt, bundle.task1)
        for level in ("word", "line", "paragraph"):
            b = report.bundle(level)
            assert (b.precision, b.recall, b.f1, b.tightness, b.pq) == (1.0,) * 5
        assert report.hpq.value == 1.0
        assert evaluate_task2(bundle.gt, bundle.task2).word.f1 == 1.0


@criterion("byte-identical output across worker counts")
def test_determinism_across_workers(tmp_path):
    cfg = SceneConfig(seed=83, image_count=50, grid=Grid(256, 256), word_size=(6, 9),
                      words_per_line=(1, 4), paragraphs_per_image=(1, 4), illegible_fraction=0.1,
                      noise=NoiseConfig(jitter_px=0.9, drop_prob=0.15, spurious_prob=0.1,
                                        merge_line_prob=0.2, case_flip_prob=0.1))
    write_bundle(generate_scene(cfg), tmp_path)
    outputs = {}
    for workers in ("1", "8"):
        out = tmp_path / f"report_w{workers}.json"
        code = run(
            ["eval-task1", "--gt", str(tmp_path / "gt.json"), "--sub", str(tmp_path / "task1.json"),
             "--per-image", "--workers", workers, "--out", str(out)]
        )
        assert code == 0
        outputs[workers] = out.read_bytes()
    assert outputs["1"] == outputs["8"]


@criterion("task-1 evaluation of 200 dense 1024x1024 images within budget")
def test_performance_budget():
    cfg = SceneConfig(seed=97, image_count=200, grid=Grid(1024, 1024),
                      paragraphs_per_image=(8, 10), lines_per_paragraph=(3, 4),
                      words_per_line=(4, 6), word_size=(7, 10), illegible_fraction=0.05,
                      noise=NoiseConfig(jitter_px=0.9, drop_prob=0.1, spurious_prob=0.05))
    bundle = generate_scene(cfg)
    words_per_image = sum(len(img.words()) for img in bundle.gt.images) / len(bundle.gt.images)
    assert 100 <= words_per_image <= 220, f"scene density off target: {words_per_image:.0f}"

    start = time.perf_counter()
    report = evaluate_task1(bundle.gt, bundle.task1, EvalOptions(parallelism=1))
    elapsed = time.perf_counter() - start
    peak_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    assert report.word.tp > 0
    assert elapsed <= 30.0, f"evaluation took {elapsed:.1f}s"
    assert peak_kb <= 1024 * 1024, f"peak RSS {peak_kb / 1024:.0f} MiB exceeds 1 GiB"
    print(f"  [perf] {elapsed:.1f}s, peak RSS {peak_kb / 1024:.0f} MiB, {words_per_image:.0f} words/image", end=" ")


@criterion("desk-scale substitutes: Pearson unit properties")
def test_desk_scale_substitutes():
    # Scores on withheld benchmark data (and correlations over them, whose
    # underlying population is ambiguous) cannot be re-derived at desk
    # scale; exact unit properties of the correlation stand in.
    xs = [float(i) for i in range(1, 25)]
    assert abs(pearson(xs, [3.0 * x + 0.5 for x in xs]) - 1.0) < 1e-12
    assert abs(pearson(xs, [-0.25 * x + 9.0 for x in xs]) + 1.0) < 1e-12
