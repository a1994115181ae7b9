"""End-to-end evaluation of the two tasks.

Task 1 scores a hierarchical detection as three instance-segmentation
problems: every word is an instance, every line is the union of its words'
masks, every paragraph the union of its lines'. Task 2 scores flat word
detections whose transcription must equal the ground truth exactly
(case-sensitive).

Ground-truth entities whose words are all illegible are don't-care:
predictions overlapping them enough are silently discarded and the entity
never counts as a false negative. Mixed entities are evaluated as the
union of their legible words only.

Matching pools true/false positives and negatives globally over the whole
dataset; per-image numbers are a diagnostic breakdown. Per-image work may
run on several workers, and results are merged in sorted image-id order so
the output is identical for any worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .annotations import GroundTruthDataset, ImageAnnotation, Paragraph, Task1Submission, Task2Submission
from .errors import ContractViolation, SchemaError, ValidationError
from .geometry import Grid, RleMask, mask_union, rasterize_polygon
from .matching import filter_dontcare, greedy_match
from .metrics import HpqScore, MetricBundle, bundle_from_counts, h_pq, percent_str

logger = logging.getLogger(__name__)

LEVELS = ("word", "line", "paragraph")

__all__ = [
    "LEVELS",
    "EvalOptions",
    "LevelInstances",
    "Task1Report",
    "Task2Report",
    "build_level_instances",
    "evaluate_task1",
    "evaluate_task2",
    "report_to_doc",
    "report_from_doc",
]


@dataclass(frozen=True)
class EvalOptions:
    iou_threshold: float = 0.5
    inclusive_threshold: bool = True
    dontcare_threshold: float = 0.5  # always compared strictly (>)
    parallelism: int | None = None  # None -> available cores
    per_image_breakdown: bool = False
    strict: bool = True  # unknown image ids: error (strict) or drop with warning
    task1_dontcare_propagation: bool = True

    def __post_init__(self):
        for name in ("iou_threshold", "dontcare_threshold"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ContractViolation(f"{name} must be in (0, 1], got {v}")


@dataclass(frozen=True)
class LevelInstances:
    level: str
    masks: list[RleMask]
    dontcare_masks: list[RleMask]


@dataclass(frozen=True)
class Task1Report:
    word: MetricBundle
    line: MetricBundle
    paragraph: MetricBundle
    hpq: HpqScore
    per_image: dict[str, dict[str, MetricBundle]] | None = None

    def bundle(self, level: str) -> MetricBundle:
        return {"word": self.word, "line": self.line, "paragraph": self.paragraph}[level]


@dataclass(frozen=True)
class Task2Report:
    word: MetricBundle
    per_image: dict[str, MetricBundle] | None = None


def _word_mask_tree(paragraphs: Sequence[Paragraph], grid: Grid) -> list[list[list[RleMask]]]:
    """Rasterize every word once; levels share the cached masks."""
    return [
        [[rasterize_polygon(w.polygon, grid) for w in ln.words] for ln in p.lines]
        for p in paragraphs
    ]


def _instances_from_tree(
    paragraphs: Sequence[Paragraph],
    tree: list[list[list[RleMask]]],
    level: str,
    grid: Grid,
    ground_truth: bool,
    dontcare_propagation: bool,
) -> LevelInstances:
    masks: list[RleMask] = []
    dontcare: list[RleMask] = []

    def add_evaluated(mask: RleMask):
        if mask.is_empty:
            logger.warning(
                "dropping %s %s instance with empty rasterization",
                level,
                "ground-truth" if ground_truth else "predicted",
            )
        else:
            masks.append(mask)

    if level == "word":
        for p_idx, p in enumerate(paragraphs):
            for l_idx, ln in enumerate(p.lines):
                for w_idx, w in enumerate(ln.words):
                    mask = tree[p_idx][l_idx][w_idx]
                    if ground_truth and not w.legible:
                        if not mask.is_empty:
                            dontcare.append(mask)
                    else:
                        add_evaluated(mask)
        return LevelInstances(level, masks, dontcare)

    if level == "paragraph":
        entities = [
            ([(w, tree[p_idx][l_idx][w_idx]) for l_idx, ln in enumerate(p.lines) for w_idx, w in enumerate(ln.words)])
            for p_idx, p in enumerate(paragraphs)
        ]
    else:
        entities = [
            [(w, tree[p_idx][l_idx][w_idx]) for w_idx, w in enumerate(ln.words)]
            for p_idx, p in enumerate(paragraphs)
            for l_idx, ln in enumerate(p.lines)
        ]
    for pairs in entities:
        if not ground_truth:
            add_evaluated(mask_union([m for _, m in pairs], grid))
            continue
        legible = [m for w, m in pairs if w.legible]
        if not dontcare_propagation:
            add_evaluated(mask_union([m for _, m in pairs], grid))
        elif legible:
            add_evaluated(mask_union(legible, grid))
        else:
            mask = mask_union([m for _, m in pairs], grid)
            if not mask.is_empty:
                dontcare.append(mask)
    return LevelInstances(level, masks, dontcare)


def build_level_instances(
    source: ImageAnnotation | Sequence[Paragraph],
    level: str,
    grid: Grid | None = None,
    *,
    dontcare_propagation: bool = True,
) -> LevelInstances:
    """Rasterize one hierarchy level of a ground-truth image or predicted forest.

    Ground truth (an ImageAnnotation) gets don't-care handling: illegible
    words feed the word-level don't-care list, and a line/paragraph whose
    words are all illegible becomes a line/paragraph-level don't-care when
    ``dontcare_propagation`` is on. Predicted forests (a sequence of
    paragraphs) have no legibility and produce no don't-care masks.

    Entities whose union rasterizes to nothing are dropped with a warning.
    """
    if level not in LEVELS:
        raise ContractViolation(f"unknown level {level!r}")
    if isinstance(source, ImageAnnotation):
        grid = Grid(source.width, source.height)
        paragraphs = source.paragraphs
        ground_truth = True
    else:
        if grid is None:
            raise ContractViolation("a predicted forest needs an explicit grid")
        paragraphs = tuple(source)
        ground_truth = False
    tree = _word_mask_tree(paragraphs, grid)
    return _instances_from_tree(paragraphs, tree, level, grid, ground_truth, dontcare_propagation)


def _match_counts(
    pred_masks: Sequence[RleMask],
    gt_masks: Sequence[RleMask],
    dontcare_masks: Sequence[RleMask],
    opts: EvalOptions,
    text_gate: Callable[[int, int], bool] | None = None,
) -> tuple[int, int, int, float]:
    result = greedy_match(
        pred_masks, gt_masks, opts.iou_threshold, text_gate, inclusive=opts.inclusive_threshold
    )
    kept, _removed = filter_dontcare(
        [pred_masks[i] for i in result.unmatched_preds], dontcare_masks, opts.dontcare_threshold
    )
    return len(result.pairs), len(kept), len(result.unmatched_gts), result.iou_sum


def _eval_task1_image(
    img: ImageAnnotation, pred_forest: Sequence[Paragraph], opts: EvalOptions
) -> dict[str, tuple[int, int, int, float]]:
    grid = Grid(img.width, img.height)
    gt_tree = _word_mask_tree(img.paragraphs, grid)
    pred_tree = _word_mask_tree(pred_forest, grid)
    counts = {}
    for level in LEVELS:
        gt_inst = _instances_from_tree(
            img.paragraphs, gt_tree, level, grid, True, opts.task1_dontcare_propagation
        )
        pred_inst = _instances_from_tree(pred_forest, pred_tree, level, grid, False, True)
        counts[level] = _match_counts(pred_inst.masks, gt_inst.masks, gt_inst.dontcare_masks, opts)
    return counts


def _eval_task2_image(img: ImageAnnotation, pred_words, opts: EvalOptions) -> tuple[int, int, int, float]:
    grid = Grid(img.width, img.height)
    pred_masks, pred_texts = [], []
    for w in pred_words:
        mask = rasterize_polygon(w.polygon, grid)
        if mask.is_empty:
            logger.warning("dropping prediction with empty rasterization in image %s", img.image_id)
            continue
        pred_masks.append(mask)
        pred_texts.append(w.text)
    gt_masks, gt_texts, dontcare = [], [], []
    for w in img.words():
        mask = rasterize_polygon(w.polygon, grid)
        if mask.is_empty:
            if w.legible:
                logger.warning("dropping ground-truth word with empty rasterization in image %s", img.image_id)
            continue
        if w.legible:
            gt_masks.append(mask)
            gt_texts.append(w.text)
        else:
            dontcare.append(mask)

    def texts_equal(p_idx: int, g_idx: int) -> bool:
        return pred_texts[p_idx] == gt_texts[g_idx]

    return _match_counts(pred_masks, gt_masks, dontcare, opts, texts_equal)


def _resolve_submission(mapping: Mapping[str, object], known: Mapping[str, ImageAnnotation], opts: EvalOptions):
    unknown = sorted(k for k in mapping if k not in known)
    if unknown:
        if opts.strict:
            raise ValidationError(
                "submission references unknown image_id(s): " + ", ".join(repr(k) for k in unknown)
            )
        logger.warning("dropping %d submission entries with unknown image_id(s): %s", len(unknown), unknown)
    return {k: v for k, v in mapping.items() if k in known}


def _map_images(fn, image_ids: list[str], workers: int | None) -> dict:
    n = workers if workers is not None else (os.cpu_count() or 1)
    if n <= 1 or len(image_ids) <= 1:
        return {iid: fn(iid) for iid in image_ids}
    with ThreadPoolExecutor(max_workers=n) as pool:
        return dict(zip(image_ids, pool.map(fn, image_ids)))


def evaluate_task1(
    gt: GroundTruthDataset, sub: Task1Submission, opts: EvalOptions = EvalOptions()
) -> Task1Report:
    """Score a hierarchical detection submission against ground truth.

    Images missing from the submission are evaluated with zero predictions,
    so all their ground-truth instances become false negatives.
    """
    by_id = gt.by_id()
    preds = _resolve_submission(sub.paragraphs_by_image, by_id, opts)
    image_ids = sorted(by_id)
    per_image = _map_images(
        lambda iid: _eval_task1_image(by_id[iid], preds.get(iid, ()), opts), image_ids, opts.parallelism
    )

    totals = {level: [0, 0, 0, 0.0] for level in LEVELS}
    for iid in image_ids:
        for level in LEVELS:
            tp, fp, fn, iou_sum = per_image[iid][level]
            acc = totals[level]
            acc[0] += tp
            acc[1] += fp
            acc[2] += fn
            acc[3] += iou_sum
    bundles = {level: bundle_from_counts(*totals[level]) for level in LEVELS}
    breakdown = None
    if opts.per_image_breakdown:
        breakdown = {
            iid: {level: bundle_from_counts(*per_image[iid][level]) for level in LEVELS}
            for iid in image_ids
        }
    return Task1Report(
        word=bundles["word"],
        line=bundles["line"],
        paragraph=bundles["paragraph"],
        hpq=h_pq(bundles["word"].pq, bundles["line"].pq, bundles["paragraph"].pq),
        per_image=breakdown,
    )


def evaluate_task2(
    gt: GroundTruthDataset, sub: Task2Submission, opts: EvalOptions = EvalOptions()
) -> Task2Report:
    """Score a word-level end-to-end submission; the ranking key is F1."""
    by_id = gt.by_id()
    preds = _resolve_submission(sub.words_by_image, by_id, opts)
    image_ids = sorted(by_id)
    per_image = _map_images(
        lambda iid: _eval_task2_image(by_id[iid], preds.get(iid, ()), opts), image_ids, opts.parallelism
    )

    tp = fp = fn = 0
    iou_sum = 0.0
    for iid in image_ids:
        t, f, n, s = per_image[iid]
        tp += t
        fp += f
        fn += n
        iou_sum += s
    breakdown = None
    if opts.per_image_breakdown:
        breakdown = {iid: bundle_from_counts(*per_image[iid]) for iid in image_ids}
    return Task2Report(word=bundle_from_counts(tp, fp, fn, iou_sum), per_image=breakdown)


# ---------------------------------------------------------------------------
# Report documents (stable key order for diffing)
# ---------------------------------------------------------------------------


def _bundle_to_doc(b: MetricBundle) -> dict:
    return {
        "tp": b.tp,
        "fp": b.fp,
        "fn": b.fn,
        "iou_sum": b.iou_sum,
        "precision": b.precision,
        "recall": b.recall,
        "f1": b.f1,
        "tightness": b.tightness,
        "pq": b.pq,
        "percent": {
            "precision": percent_str(b.precision),
            "recall": percent_str(b.recall),
            "f1": percent_str(b.f1),
            "tightness": percent_str(b.tightness),
            "pq": percent_str(b.pq),
        },
    }


def _bundle_from_doc(doc: dict, path: str) -> MetricBundle:
    try:
        return MetricBundle(
            tp=int(doc["tp"]),
            fp=int(doc["fp"]),
            fn=int(doc["fn"]),
            iou_sum=float(doc["iou_sum"]),
            precision=float(doc["precision"]),
            recall=float(doc["recall"]),
            f1=float(doc["f1"]),
            tightness=float(doc["tightness"]),
            pq=float(doc["pq"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(path, f"bad metric bundle: {exc}") from exc


def report_to_doc(report: Task1Report | Task2Report) -> dict:
    if isinstance(report, Task1Report):
        doc = {
            "task": "task1",
            "levels": {level: _bundle_to_doc(report.bundle(level)) for level in LEVELS},
            "hpq": report.hpq.value,
            "hpq_percent": percent_str(report.hpq.value),
        }
        if report.per_image is not None:
            doc["per_image"] = {
                iid: {level: _bundle_to_doc(b) for level, b in levels.items()}
                for iid, levels in sorted(report.per_image.items())
            }
        return doc
    doc = {
        "task": "task2",
        "levels": {"word": _bundle_to_doc(report.word)},
    }
    if report.per_image is not None:
        doc["per_image"] = {iid: _bundle_to_doc(b) for iid, b in sorted(report.per_image.items())}
    return doc


def report_from_doc(doc: dict) -> Task1Report | Task2Report:
    if not isinstance(doc, dict):
        raise SchemaError("$", "report document must be an object")
    task = doc.get("task")
    levels = doc.get("levels")
    if not isinstance(levels, dict):
        raise SchemaError("$.levels", "missing levels object")
    if task == "task1":
        bundles = {level: _bundle_from_doc(levels.get(level, {}), f"$.levels.{level}") for level in LEVELS}
        per_image = None
        if "per_image" in doc:
            per_image = {
                iid: {level: _bundle_from_doc(ld, f"$.per_image.{iid}.{level}") for level, ld in entry.items()}
                for iid, entry in doc["per_image"].items()
            }
        return Task1Report(
            word=bundles["word"],
            line=bundles["line"],
            paragraph=bundles["paragraph"],
            hpq=HpqScore(float(doc.get("hpq", 0.0))),
            per_image=per_image,
        )
    if task == "task2":
        per_image = None
        if "per_image" in doc:
            per_image = {iid: _bundle_from_doc(bd, f"$.per_image.{iid}") for iid, bd in doc["per_image"].items()}
        return Task2Report(word=_bundle_from_doc(levels.get("word", {}), "$.levels.word"), per_image=per_image)
    raise SchemaError("$.task", f"unknown task {task!r}")
