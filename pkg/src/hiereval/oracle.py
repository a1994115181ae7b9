"""Dense brute-force reference evaluator.

Re-implements both task evaluations from scratch over dense boolean pixel
arrays: per-pixel even-odd ray casting instead of scanline runs, full
pairwise IoU tables instead of pruned candidate lists, and its own greedy
loop. It exists solely to cross-check the run-length pipeline, so it
refuses scenes beyond a size where dense arrays stay cheap.
"""

from __future__ import annotations

import numpy as np

from .annotations import GroundTruthDataset, ImageAnnotation, Task1Submission, Task2Submission
from .errors import OracleLimitError, ValidationError
from .evaluators import LEVELS, EvalOptions, Task1Report, Task2Report
from .metrics import bundle_from_counts, h_pq

MAX_SIDE = 512
MAX_INSTANCES = 300

__all__ = ["MAX_SIDE", "MAX_INSTANCES", "oracle_evaluate_task1", "oracle_evaluate_task2"]


def _dense_polygon(polygon, width: int, height: int) -> np.ndarray:
    """Point-in-polygon test for every pixel center (even-odd, half-open)."""
    full = np.zeros((height, width), dtype=bool)
    xs = [v.x for v in polygon.vertices]
    ys = [v.y for v in polygon.vertices]
    i0 = max(0, int(np.ceil(min(xs) - 0.5)))
    i1 = min(width - 1, int(np.ceil(max(xs) - 0.5)) - 1)
    j0 = max(0, int(np.ceil(min(ys) - 0.5)))
    j1 = min(height - 1, int(np.ceil(max(ys) - 0.5)) - 1)
    if i1 < i0 or j1 < j0:
        return full
    px = (np.arange(i0, i1 + 1, dtype=np.float64) + 0.5)[None, :]
    py = (np.arange(j0, j1 + 1, dtype=np.float64) + 0.5)[:, None]
    crossings = np.zeros((j1 - j0 + 1, i1 - i0 + 1), dtype=np.int32)
    n = len(xs)
    for k in range(n):
        x1, y1 = xs[k], ys[k]
        x2, y2 = xs[(k + 1) % n], ys[(k + 1) % n]
        if y1 == y2:
            continue
        spans = (min(y1, y2) <= py) & (py < max(y1, y2))
        xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        crossings += spans & (xc <= px)
    full[j0 : j1 + 1, i0 : i1 + 1] = (crossings % 2) == 1
    return full


class _Instance:
    __slots__ = ("dense", "area", "bbox")

    def __init__(self, dense: np.ndarray):
        self.dense = dense
        self.area = int(dense.sum())
        if self.area:
            rows = np.flatnonzero(dense.any(axis=1))
            cols = np.flatnonzero(dense.any(axis=0))
            self.bbox = (int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1]))
        else:
            self.bbox = None


def _iou(a: _Instance, b: _Instance) -> float:
    if a.bbox is None or b.bbox is None:
        return 0.0
    ax0, ay0, ax1, ay1 = a.bbox
    bx0, by0, bx1, by1 = b.bbox
    x0, y0 = max(ax0, bx0), max(ay0, by0)
    x1, y1 = min(ax1, bx1), min(ay1, by1)
    if x0 > x1 or y0 > y1:
        return 0.0
    inter = int((a.dense[y0 : y1 + 1, x0 : x1 + 1] & b.dense[y0 : y1 + 1, x0 : x1 + 1]).sum())
    union = a.area + b.area - inter
    if union == 0:
        return 0.0
    return inter / union


def _iou_table(preds: list[_Instance], gts: list[_Instance]) -> np.ndarray:
    table = np.zeros((len(preds), len(gts)), dtype=np.float64)
    for pi, p in enumerate(preds):
        for gi, g in enumerate(gts):
            table[pi, gi] = _iou(p, g)
    return table


def _greedy(table: np.ndarray, threshold: float, inclusive: bool, gate: np.ndarray | None):
    """Independent rewrite of the one-to-one greedy matcher."""
    n_pred, n_gt = table.shape
    candidates = []
    for pi in range(n_pred):
        for gi in range(n_gt):
            if gate is not None and not gate[pi, gi]:
                continue
            iou = float(table[pi, gi])
            ok = iou >= threshold if inclusive else iou > threshold
            if ok:
                candidates.append((iou, gi, pi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    taken_p: set[int] = set()
    taken_g: set[int] = set()
    iou_sum = 0.0
    for iou, gi, pi in candidates:
        if pi in taken_p or gi in taken_g:
            continue
        taken_p.add(pi)
        taken_g.add(gi)
        iou_sum += iou
    return taken_p, taken_g, iou_sum


def _count_removed(preds: list[_Instance], unmatched: list[int], dontcare: list[_Instance], threshold: float) -> int:
    removed = 0
    for pi in unmatched:
        if any(_iou(preds[pi], dc) > threshold for dc in dontcare):
            removed += 1
    return removed


def _score(preds: list[_Instance], gts: list[_Instance], dontcare: list[_Instance], opts: EvalOptions, gate=None):
    table = _iou_table(preds, gts)
    taken_p, taken_g, iou_sum = _greedy(table, opts.iou_threshold, opts.inclusive_threshold, gate)
    unmatched_p = [i for i in range(len(preds)) if i not in taken_p]
    removed = _count_removed(preds, unmatched_p, dontcare, opts.dontcare_threshold)
    tp = len(taken_p)
    fp = len(unmatched_p) - removed
    fn = len(gts) - len(taken_g)
    return tp, fp, fn, iou_sum


def _check_limits(img: ImageAnnotation, n_preds: int):
    if img.width > MAX_SIDE or img.height > MAX_SIDE:
        raise OracleLimitError(
            f"image {img.image_id} is {img.width}x{img.height}, oracle handles at most {MAX_SIDE}x{MAX_SIDE}"
        )
    total = len(img.words()) + n_preds
    if total > MAX_INSTANCES:
        raise OracleLimitError(
            f"image {img.image_id} has {total} instances, oracle handles at most {MAX_INSTANCES}"
        )


def _check_ids(sub_keys, known, opts: EvalOptions):
    unknown = sorted(k for k in sub_keys if k not in known)
    if unknown and opts.strict:
        raise ValidationError(
            "submission references unknown image_id(s): " + ", ".join(repr(k) for k in unknown)
        )


def _gt_level_instances(img: ImageAnnotation, level: str, opts: EvalOptions):
    evaluated: list[_Instance] = []
    dontcare: list[_Instance] = []
    if level == "word":
        for w in img.words():
            inst = _Instance(_dense_polygon(w.polygon, img.width, img.height))
            if inst.area == 0:
                continue
            (evaluated if w.legible else dontcare).append(inst)
        return evaluated, dontcare
    groups = (
        [[w for ln in p.lines for w in ln.words] for p in img.paragraphs]
        if level == "paragraph"
        else [list(ln.words) for p in img.paragraphs for ln in p.lines]
    )
    for words in groups:
        legible = [w for w in words if w.legible]
        if not opts.task1_dontcare_propagation:
            chosen, target = words, evaluated
        elif legible:
            chosen, target = legible, evaluated
        else:
            chosen, target = words, dontcare
        dense = np.zeros((img.height, img.width), dtype=bool)
        for w in chosen:
            dense |= _dense_polygon(w.polygon, img.width, img.height)
        inst = _Instance(dense)
        if inst.area:
            target.append(inst)
    return evaluated, dontcare


def _pred_level_instances(forest, level: str, width: int, height: int) -> list[_Instance]:
    out: list[_Instance] = []
    if level == "word":
        for p in forest:
            for ln in p.lines:
                for w in ln.words:
                    inst = _Instance(_dense_polygon(w.polygon, width, height))
                    if inst.area:
                        out.append(inst)
        return out
    groups = (
        [[w for ln in p.lines for w in ln.words] for p in forest]
        if level == "paragraph"
        else [list(ln.words) for p in forest for ln in p.lines]
    )
    for words in groups:
        dense = np.zeros((height, width), dtype=bool)
        for w in words:
            dense |= _dense_polygon(w.polygon, width, height)
        inst = _Instance(dense)
        if inst.area:
            out.append(inst)
    return out


def oracle_evaluate_task1(
    gt: GroundTruthDataset, sub: Task1Submission, opts: EvalOptions = EvalOptions()
) -> Task1Report:
    by_id = gt.by_id()
    _check_ids(sub.paragraphs_by_image, by_id, opts)
    totals = {level: [0, 0, 0, 0.0] for level in LEVELS}
    per_image = {} if opts.per_image_breakdown else None
    for iid in sorted(by_id):
        img = by_id[iid]
        forest = sub.paragraphs_by_image.get(iid, ())
        _check_limits(img, sum(len(ln.words) for p in forest for ln in p.lines))
        image_counts = {}
        for level in LEVELS:
            evaluated, dontcare = _gt_level_instances(img, level, opts)
            preds = _pred_level_instances(forest, level, img.width, img.height)
            counts = _score(preds, evaluated, dontcare, opts)
            image_counts[level] = counts
            acc = totals[level]
            acc[0] += counts[0]
            acc[1] += counts[1]
            acc[2] += counts[2]
            acc[3] += counts[3]
        if per_image is not None:
            per_image[iid] = {level: bundle_from_counts(*image_counts[level]) for level in LEVELS}
    bundles = {level: bundle_from_counts(*totals[level]) for level in LEVELS}
    return Task1Report(
        word=bundles["word"],
        line=bundles["line"],
        paragraph=bundles["paragraph"],
        hpq=h_pq(bundles["word"].pq, bundles["line"].pq, bundles["paragraph"].pq),
        per_image=per_image,
    )


def oracle_evaluate_task2(
    gt: GroundTruthDataset, sub: Task2Submission, opts: EvalOptions = EvalOptions()
) -> Task2Report:
    by_id = gt.by_id()
    _check_ids(sub.words_by_image, by_id, opts)
    tp = fp = fn = 0
    iou_sum = 0.0
    per_image = {} if opts.per_image_breakdown else None
    for iid in sorted(by_id):
        img = by_id[iid]
        pred_words = sub.words_by_image.get(iid, ())
        _check_limits(img, len(pred_words))
        preds, pred_texts = [], []
        for w in pred_words:
            inst = _Instance(_dense_polygon(w.polygon, img.width, img.height))
            if inst.area:
                preds.append(inst)
                pred_texts.append(w.text)
        gts, gt_texts, dontcare = [], [], []
        for w in img.words():
            inst = _Instance(_dense_polygon(w.polygon, img.width, img.height))
            if inst.area == 0:
                continue
            if w.legible:
                gts.append(inst)
                gt_texts.append(w.text)
            else:
                dontcare.append(inst)
        gate = np.zeros((len(preds), len(gts)), dtype=bool)
        for pi, pt in enumerate(pred_texts):
            for gi, gtx in enumerate(gt_texts):
                gate[pi, gi] = pt == gtx
        t, f, n, s = _score(preds, gts, dontcare, opts, gate)
        tp += t
        fp += f
        fn += n
        iou_sum += s
        if per_image is not None:
            per_image[iid] = bundle_from_counts(t, f, n, s)
    return Task2Report(word=bundle_from_counts(tp, fp, fn, iou_sum), per_image=per_image)
