"""Dense brute-force oracle: limits and agreement with the RLE pipeline."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import make_dataset, make_image, make_word
from scene_helpers import random_scene_config
from hiereval.annotations import Task1Submission, Task2Submission
from hiereval.errors import OracleLimitError
from hiereval.evaluators import EvalOptions, evaluate_task1, evaluate_task2
from hiereval.fixtures import SceneConfig, generate_scene
from hiereval.geometry import Grid
from hiereval.oracle import MAX_INSTANCES, oracle_evaluate_task1, oracle_evaluate_task2


def assert_reports_agree(ours, oracle, levels=("word", "line", "paragraph")):
    for level in levels:
        a = ours.bundle(level) if hasattr(ours, "bundle") else ours.word
        b = oracle.bundle(level) if hasattr(oracle, "bundle") else oracle.word
        assert (a.tp, a.fp, a.fn) == (b.tp, b.fp, b.fn), f"counts differ at {level}"
        assert abs(a.iou_sum - b.iou_sum) <= 1e-9, f"iou_sum differs at {level}"


class TestLimits:
    def test_oversized_grid_refused(self):
        img = make_image("i", 600, 64, [[[make_word(0, 0, 6, 4, "x")]]])
        gt = make_dataset(img)
        with pytest.raises(OracleLimitError):
            oracle_evaluate_task1(gt, Task1Submission({}))

    def test_too_many_instances_refused(self):
        words = [make_word(3 * i % 500, 8 * (i // 160), 2, 4, f"w{i}") for i in range(MAX_INSTANCES + 1)]
        img = make_image("i", 512, 512, [[words]])
        gt = make_dataset(img)
        with pytest.raises(OracleLimitError):
            oracle_evaluate_task2(gt, Task2Submission({}))


class TestKnownResults:
    def test_zero_noise_scene_is_perfect(self):
        bundle = generate_scene(
            SceneConfig(seed=3, image_count=2, grid=Grid(160, 160), word_size=(6, 10), words_per_line=(1, 3))
        )
        report = oracle_evaluate_task1(bundle.gt, bundle.task1)
        assert report.hpq.value == 1.0
        assert oracle_evaluate_task2(bundle.gt, bundle.task2).word.f1 == 1.0

    def test_empty_submission_zero_pq(self):
        bundle = generate_scene(
            SceneConfig(seed=4, image_count=1, grid=Grid(160, 160), word_size=(6, 10), words_per_line=(1, 3))
        )
        report = oracle_evaluate_task1(bundle.gt, Task1Submission({}))
        assert report.word.pq == 0.0 and report.hpq.value == 0.0


class TestAgreement:
    @pytest.mark.parametrize("index", range(12))
    def test_random_scenes_agree(self, index):
        cfg = random_scene_config(index)
        bundle = generate_scene(cfg)
        opts = EvalOptions()
        assert_reports_agree(
            evaluate_task1(bundle.gt, bundle.task1, opts), oracle_evaluate_task1(bundle.gt, bundle.task1, opts)
        )
        ours = evaluate_task2(bundle.gt, bundle.task2, opts)
        ref = oracle_evaluate_task2(bundle.gt, bundle.task2, opts)
        assert (ours.word.tp, ours.word.fp, ours.word.fn) == (ref.word.tp, ref.word.fp, ref.word.fn)
        assert abs(ours.word.iou_sum - ref.word.iou_sum) <= 1e-9

    def test_big_scene_agrees(self):
        cfg = random_scene_config(0, big=True)
        bundle = generate_scene(cfg)
        assert_reports_agree(
            evaluate_task1(bundle.gt, bundle.task1), oracle_evaluate_task1(bundle.gt, bundle.task1)
        )
