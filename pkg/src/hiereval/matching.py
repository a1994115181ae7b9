"""Greedy one-to-one IoU matching and don't-care filtering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import ContractViolation
from .geometry import RleMask, bbox_array, bbox_overlap_candidates, mask_iou

__all__ = ["MatchPair", "MatchResult", "greedy_match", "filter_dontcare"]


@dataclass(frozen=True)
class MatchPair:
    pred_index: int
    gt_index: int
    iou: float


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[MatchPair, ...]
    unmatched_preds: tuple[int, ...]
    unmatched_gts: tuple[int, ...]
    iou_sum: float


def _candidate_ious(
    preds: Sequence[RleMask],
    gts: Sequence[RleMask],
    text_gate: Callable[[int, int], bool] | None,
) -> list[tuple[float, int, int]]:
    """(iou, gt_index, pred_index) for all pairs with positive overlap.

    Bounding-box pruning only skips pairs whose IoU is exactly zero, so the
    candidate set is identical to the exhaustive one.
    """
    gt_boxes = bbox_array(gts)
    out = []
    for p_idx, pred in enumerate(preds):
        for g_idx in bbox_overlap_candidates(pred, gt_boxes):
            g_idx = int(g_idx)
            if text_gate is not None and not text_gate(p_idx, g_idx):
                continue
            iou = mask_iou(pred, gts[g_idx])
            if iou > 0.0:
                out.append((iou, g_idx, p_idx))
    return out


def greedy_match(
    preds: Sequence[RleMask],
    gts: Sequence[RleMask],
    threshold: float,
    text_gate: Callable[[int, int], bool] | None = None,
    *,
    inclusive: bool = True,
) -> MatchResult:
    """Match predictions to ground truths one-to-one by decreasing IoU.

    A pair is a candidate iff its IoU clears ``threshold`` (>= when
    ``inclusive``, > otherwise) and ``text_gate(pred_idx, gt_idx)`` holds
    when supplied. Candidates are accepted in decreasing-IoU order with
    ties broken by (gt_index, pred_index); an index is never reused.
    """
    if not 0.0 < threshold <= 1.0:
        raise ContractViolation(f"threshold must be in (0, 1], got {threshold}")
    masks = list(preds) + list(gts)
    for m in masks[1:]:
        if m.grid != masks[0].grid:
            raise ContractViolation("greedy_match requires all masks on one grid")

    candidates = _candidate_ious(preds, gts, text_gate)
    if inclusive:
        candidates = [c for c in candidates if c[0] >= threshold]
    else:
        candidates = [c for c in candidates if c[0] > threshold]
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    used_preds: set[int] = set()
    used_gts: set[int] = set()
    pairs = []
    iou_sum = 0.0
    for iou, g_idx, p_idx in candidates:
        if p_idx in used_preds or g_idx in used_gts:
            continue
        used_preds.add(p_idx)
        used_gts.add(g_idx)
        pairs.append(MatchPair(p_idx, g_idx, iou))
        iou_sum += iou

    return MatchResult(
        pairs=tuple(pairs),
        unmatched_preds=tuple(i for i in range(len(preds)) if i not in used_preds),
        unmatched_gts=tuple(i for i in range(len(gts)) if i not in used_gts),
        iou_sum=iou_sum,
    )


def filter_dontcare(
    unmatched_preds: Sequence[RleMask],
    dontcare: Sequence[RleMask],
    threshold: float,
) -> tuple[list[int], list[int]]:
    """Split prediction indices into (kept, removed) against don't-care masks.

    A prediction is removed iff its IoU with some don't-care mask strictly
    exceeds ``threshold``; an IoU of exactly ``threshold`` keeps it. Removed
    predictions count as neither false positives nor true positives.
    """
    if not dontcare:
        return list(range(len(unmatched_preds))), []
    dc_boxes = bbox_array(dontcare)
    kept, removed = [], []
    for idx, pred in enumerate(unmatched_preds):
        hit = any(
            mask_iou(pred, dontcare[int(d)]) > threshold
            for d in bbox_overlap_candidates(pred, dc_boxes)
        )
        (removed if hit else kept).append(idx)
    return kept, removed
