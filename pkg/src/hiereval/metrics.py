"""Detection-quality metric bundles and dataset statistics.

The panoptic-quality score of a pool of matches is

    pq = iou_sum / (tp + fp/2 + fn/2)

which factors exactly into tightness (mean matched IoU) times F1. Every
ratio with a zero denominator is defined as 0 so that ranking keys are
total; the harmonic combination of per-level PQ scores is likewise 0 as
soon as any level is 0.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation

__all__ = [
    "MetricBundle",
    "HpqScore",
    "bundle_from_counts",
    "sum_bundles",
    "h_pq",
    "pearson",
    "char_histogram",
    "word_density",
    "percent",
    "percent_str",
]


@dataclass(frozen=True)
class MetricBundle:
    tp: int
    fp: int
    fn: int
    iou_sum: float
    precision: float
    recall: float
    f1: float
    tightness: float
    pq: float


@dataclass(frozen=True)
class HpqScore:
    value: float


def bundle_from_counts(tp: int, fp: int, fn: int, iou_sum: float) -> MetricBundle:
    """Derive precision/recall/F1/tightness/PQ from pooled match counts."""
    if tp < 0 or fp < 0 or fn < 0:
        raise ContractViolation(f"counts must be non-negative, got tp={tp} fp={fp} fn={fn}")
    if iou_sum < 0 or iou_sum > tp + 1e-9:
        raise ContractViolation(f"iou_sum {iou_sum} inconsistent with tp={tp}")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    tightness = iou_sum / tp if tp else 0.0
    denom = tp + fp / 2.0 + fn / 2.0
    pq = iou_sum / denom if denom else 0.0
    return MetricBundle(tp, fp, fn, iou_sum, precision, recall, f1, tightness, pq)


def sum_bundles(bundles: Iterable[MetricBundle]) -> MetricBundle:
    """Component-wise sum of counts/iou_sum, derived fields recomputed."""
    tp = fp = fn = 0
    iou_sum = 0.0
    for b in bundles:
        tp += b.tp
        fp += b.fp
        fn += b.fn
        iou_sum += b.iou_sum
    return bundle_from_counts(tp, fp, fn, iou_sum)


def h_pq(pq_word: float, pq_line: float, pq_paragraph: float) -> HpqScore:
    """Harmonic mean of the three per-level PQ scores; 0 if any input is 0.

    Scale-equivariant, so fractions in and percents in both work.
    """
    values = (pq_word, pq_line, pq_paragraph)
    if any(v < 0 for v in values):
        raise ContractViolation(f"PQ scores must be non-negative, got {values}")
    if any(v == 0 for v in values):
        return HpqScore(0.0)
    return HpqScore(3.0 / (1.0 / pq_word + 1.0 / pq_line + 1.0 / pq_paragraph))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ContractViolation("pearson needs two equal-length sequences of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ContractViolation("pearson is undefined for zero-variance input")
    return float(np.dot(dx, dy)) / float(np.sqrt(sxx * syy))


def char_histogram(ds) -> dict[str, int]:
    """Character counts over all legible word texts.

    Keys are ordered by descending count, then by codepoint.
    """
    counts: dict[str, int] = {}
    for img in ds.images:
        for word in img.words():
            if not word.legible:
                continue
            for ch in word.text:
                counts[ch] = counts.get(ch, 0) + 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def word_density(ds) -> float:
    """Mean number of words per image."""
    if not ds.images:
        raise ContractViolation("word_density of an empty dataset is undefined")
    total = sum(len(img.words()) for img in ds.images)
    return total / len(ds.images)


def percent(value: float) -> float:
    """Fraction -> percent rounded half-away-from-zero to 2 decimals."""
    quantized = decimal.Decimal(str(value * 100.0)).quantize(
        decimal.Decimal("0.01"), rounding=decimal.ROUND_HALF_UP
    )
    return float(quantized)


def percent_str(value: float) -> str:
    return f"{percent(value):.2f}"
