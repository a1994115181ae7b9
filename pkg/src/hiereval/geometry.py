"""Polygon rasterization and run-length-encoded binary masks.

Rasterization convention: a pixel (i, j) is covered iff its center
(i + 0.5, j + 0.5) lies inside the closed polygon under the even-odd rule,
with a half-open "top or left" tie-break so that two polygons sharing an
edge never both claim the same pixel. Pixels outside the grid are dropped.

Masks are stored as maximal row-major runs over the flat pixel index
j * width + i, so equal pixel sets always have equal encodings and set
operations are linear merges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation

__all__ = ["Grid", "RleMask", "rasterize_polygon", "mask_union", "mask_iou", "mask_area"]

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class Grid:
    """Pixel grid a mask lives on."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ContractViolation(f"grid must be at least 1x1, got {self.width}x{self.height}")

    @property
    def size(self) -> int:
        return self.width * self.height


class RleMask:
    """Immutable run-length-encoded binary mask.

    Runs are kept canonical: sorted by start, non-overlapping and
    non-adjacent in the flat index space (a run ending where the next row's
    run begins is merged). Two masks are equal iff their pixel sets are.
    """

    __slots__ = ("grid", "_starts", "_ends", "_area", "_bbox")

    def __init__(self, grid: Grid, starts: np.ndarray, ends: np.ndarray):
        # Trusted constructor: callers must pass canonical int64 arrays.
        self.grid = grid
        self._starts = starts
        self._ends = ends
        self._area = int((ends - starts).sum()) if len(starts) else 0
        self._bbox: tuple[int, int, int, int] | None = None

    @classmethod
    def empty(cls, grid: Grid) -> "RleMask":
        return cls(grid, _EMPTY, _EMPTY)

    @classmethod
    def from_runs(cls, grid: Grid, runs: Sequence[tuple[int, int]]) -> "RleMask":
        """Build a mask from (start, length) runs, checking canonical form."""
        if not runs:
            return cls.empty(grid)
        starts = np.asarray([r[0] for r in runs], dtype=np.int64)
        lengths = np.asarray([r[1] for r in runs], dtype=np.int64)
        if (lengths <= 0).any():
            raise ContractViolation("run lengths must be positive")
        ends = starts + lengths
        if starts[0] < 0 or ends[-1] > grid.size:
            raise ContractViolation("runs fall outside the grid")
        if len(starts) > 1 and not (starts[1:] > ends[:-1]).all():
            raise ContractViolation("runs must be sorted, disjoint and non-adjacent")
        return cls(grid, starts, ends)

    @classmethod
    def from_pixels(cls, grid: Grid, indices: Iterable[int]) -> "RleMask":
        """Encode an arbitrary set of flat pixel indices."""
        idx = np.unique(np.fromiter(indices, dtype=np.int64))
        if len(idx) == 0:
            return cls.empty(grid)
        if idx[0] < 0 or idx[-1] >= grid.size:
            raise ContractViolation("pixel index outside the grid")
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = idx[np.r_[0, breaks + 1]]
        ends = idx[np.r_[breaks, len(idx) - 1]] + 1
        return cls(grid, starts, ends)

    @classmethod
    def from_dense(cls, grid: Grid, dense: np.ndarray) -> "RleMask":
        """Encode a (height, width) boolean array."""
        flat = np.asarray(dense, dtype=bool).reshape(-1)
        if flat.shape[0] != grid.size:
            raise ContractViolation("dense array does not match the grid")
        padded = np.r_[False, flat, False]
        edges = np.flatnonzero(padded[1:] != padded[:-1])
        starts = edges[0::2].astype(np.int64)
        ends = edges[1::2].astype(np.int64)
        return cls(grid, starts, ends)

    @property
    def runs(self) -> list[tuple[int, int]]:
        return [(int(s), int(e - s)) for s, e in zip(self._starts, self._ends)]

    @property
    def area(self) -> int:
        return self._area

    @property
    def is_empty(self) -> bool:
        return self._area == 0

    def pixel_indices(self) -> np.ndarray:
        """Flat indices of all covered pixels, ascending."""
        if self.is_empty:
            return _EMPTY
        pieces = [np.arange(s, e, dtype=np.int64) for s, e in zip(self._starts, self._ends)]
        return np.concatenate(pieces)

    def to_dense(self) -> np.ndarray:
        """Decode to a (height, width) boolean array."""
        delta = np.zeros(self.grid.size + 1, dtype=np.int8)
        delta[self._starts] = 1
        np.add.at(delta, self._ends, -1)
        flat = np.cumsum(delta[:-1]) > 0
        return flat.reshape(self.grid.height, self.grid.width)

    def bbox(self) -> tuple[int, int, int, int] | None:
        """Inclusive (x0, y0, x1, y1) pixel bounds, or None when empty."""
        if self.is_empty:
            return None
        if self._bbox is None:
            w = self.grid.width
            row0 = self._starts // w
            row1 = (self._ends - 1) // w
            y0 = int(row0[0])
            y1 = int(row1[-1])
            spans = row0 != row1  # runs crossing a row boundary cover full rows
            if spans.any():
                x0, x1 = 0, w - 1
            else:
                cols0 = self._starts - row0 * w
                cols1 = self._ends - 1 - row0 * w
                x0 = int(cols0.min())
                x1 = int(cols1.max())
            self._bbox = (x0, y0, x1, y1)
        return self._bbox

    def to_pbm(self) -> str:
        """Debug dump as a PBM-style text grid (one row per line)."""
        dense = self.to_dense().astype(np.uint8)
        body = "\n".join(" ".join(str(v) for v in row) for row in dense)
        return f"P1\n{self.grid.width} {self.grid.height}\n{body}\n"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RleMask):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self._starts, other._starts)
            and np.array_equal(self._ends, other._ends)
        )

    def __hash__(self) -> int:
        return hash((self.grid, self._starts.tobytes(), self._ends.tobytes()))

    def __repr__(self) -> str:
        return f"RleMask({self.grid.width}x{self.grid.height}, runs={len(self._starts)}, area={self._area})"


def _canonical(starts: np.ndarray, ends: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge possibly overlapping/adjacent [start, end) intervals."""
    if len(starts) == 0:
        return _EMPTY, _EMPTY
    order = np.argsort(starts, kind="stable")
    s = starts[order]
    e = ends[order]
    cummax = np.maximum.accumulate(e)
    first = np.empty(len(s), dtype=bool)
    first[0] = True
    first[1:] = s[1:] > cummax[:-1]
    firsts = np.flatnonzero(first)
    lasts = np.empty(len(firsts), dtype=np.int64)
    lasts[:-1] = firsts[1:] - 1
    lasts[-1] = len(s) - 1
    return s[firsts].copy(), cummax[lasts].copy()


def _check_same_grid(masks: Iterable[RleMask], grid: Grid | None = None) -> Grid | None:
    for m in masks:
        if grid is None:
            grid = m.grid
        elif m.grid != grid:
            raise ContractViolation(f"masks on mixed grids: {grid} vs {m.grid}")
    return grid


def rasterize_polygon(polygon, grid: Grid) -> RleMask:
    """Rasterize a polygon onto the grid (see module docstring for the rule).

    Accepts any object with a ``vertices`` sequence of points carrying
    ``x``/``y``. Self-intersecting polygons follow the even-odd rule. An
    empty mask is a valid result (polygon fully outside the grid).
    """
    verts = polygon.vertices
    xs = np.asarray([v.x for v in verts], dtype=np.float64)
    ys = np.asarray([v.y for v in verts], dtype=np.float64)
    x2 = np.concatenate((xs[1:], xs[:1]))
    y2 = np.concatenate((ys[1:], ys[:1]))
    keep = ys != y2  # horizontal edges never cross a scanline
    if not keep.any():
        return RleMask.empty(grid)
    ex1, ey1, ex2, ey2 = xs[keep], ys[keep], x2[keep], y2[keep]
    ymin = np.minimum(ey1, ey2)
    ymax = np.maximum(ey1, ey2)

    w, h = grid.width, grid.height
    j0 = max(0, math.ceil(float(ymin.min()) - 0.5))
    j1 = min(h - 1, math.ceil(float(ymax.max()) - 0.5) - 1)
    if j1 < j0:
        return RleMask.empty(grid)

    rows = np.arange(j0, j1 + 1, dtype=np.int64)
    y = rows[:, None] + 0.5  # scanline at each pixel-center row
    crossing = (ymin <= y) & (y < ymax)
    t = (y - ey1) / (ey2 - ey1)
    xc = np.where(crossing, ex1 + t * (ex2 - ex1), np.inf)
    xc.sort(axis=1)

    starts_parts: list[np.ndarray] = []
    ends_parts: list[np.ndarray] = []
    row_base = rows * w
    # Even-odd pairing: crossings come in pairs [enter, exit) per row.
    for k in range(0, xc.shape[1] - 1, 2):
        xb = xc[:, k + 1]
        pair = np.isfinite(xb)
        if not pair.any():
            break
        lo = np.clip(np.ceil(xc[:, k] - 0.5), 0, w)
        hi = np.clip(np.ceil(xb - 0.5), 0, w)
        pair &= lo < hi
        if pair.any():
            starts_parts.append(row_base[pair] + lo[pair].astype(np.int64))
            ends_parts.append(row_base[pair] + hi[pair].astype(np.int64))
    if not starts_parts:
        return RleMask.empty(grid)
    starts, ends = _canonical(np.concatenate(starts_parts), np.concatenate(ends_parts))
    return RleMask(grid, starts, ends)


def mask_union(masks: Sequence[RleMask], grid: Grid | None = None) -> RleMask:
    """Union of masks sharing one grid; the empty union needs ``grid``."""
    found = _check_same_grid(masks, grid)
    if found is None:
        raise ContractViolation("mask_union of an empty list requires an explicit grid")
    nonempty = [m for m in masks if not m.is_empty]
    if not nonempty:
        return RleMask.empty(found)
    if len(nonempty) == 1:
        m = nonempty[0]
        return RleMask(found, m._starts, m._ends)
    starts, ends = _canonical(
        np.concatenate([m._starts for m in nonempty]),
        np.concatenate([m._ends for m in nonempty]),
    )
    return RleMask(found, starts, ends)


def _intersection_area(a: RleMask, b: RleMask) -> int:
    """|a ∩ b| in pixels via a vectorized merge over runs."""
    if a.is_empty or b.is_empty:
        return 0
    sa, ea = a._starts, a._ends
    sb, eb = b._starts, b._ends
    lo = np.searchsorted(eb, sa, side="right")  # first b-run ending after each a-run starts
    hi = np.searchsorted(sb, ea, side="left")  # first b-run starting at/after each a-run ends
    valid = hi > lo
    if not valid.any():
        return 0
    prefix = np.r_[0, np.cumsum(eb - sb)]
    seg = prefix[hi[valid]] - prefix[lo[valid]]
    head_clip = np.maximum(sa[valid] - sb[lo[valid]], 0)
    tail_clip = np.maximum(eb[hi[valid] - 1] - ea[valid], 0)
    return int((seg - head_clip - tail_clip).sum())


def mask_intersection(a: RleMask, b: RleMask) -> RleMask:
    """Intersection mask (used by tests and debug tooling)."""
    _check_same_grid((a, b))
    if a.is_empty or b.is_empty:
        return RleMask.empty(a.grid)
    starts: list[int] = []
    ends: list[int] = []
    ia = ib = 0
    sa, ea, sb, eb = a._starts, a._ends, b._starts, b._ends
    while ia < len(sa) and ib < len(sb):
        lo = max(sa[ia], sb[ib])
        hi = min(ea[ia], eb[ib])
        if lo < hi:
            starts.append(int(lo))
            ends.append(int(hi))
        if ea[ia] < eb[ib]:
            ia += 1
        else:
            ib += 1
    if not starts:
        return RleMask.empty(a.grid)
    s, e = _canonical(np.asarray(starts, dtype=np.int64), np.asarray(ends, dtype=np.int64))
    return RleMask(a.grid, s, e)


def mask_iou(a: RleMask, b: RleMask) -> float:
    """Intersection-over-union in [0, 1]; two empty masks give 0."""
    _check_same_grid((a, b))
    inter = _intersection_area(a, b)
    union = a.area + b.area - inter
    if union == 0:
        return 0.0
    return inter / union


def mask_area(a: RleMask) -> int:
    """Number of covered pixels."""
    return a.area


def bbox_overlap_candidates(query: RleMask, boxes: np.ndarray) -> np.ndarray:
    """Indices of entries in an (n, 4) x0/y0/x1/y1 array overlapping query's bbox.

    Rows with x0 == -1 mark empty masks and never overlap anything.
    """
    qb = query.bbox()
    if qb is None or len(boxes) == 0:
        return np.empty(0, dtype=np.int64)
    x0, y0, x1, y1 = qb
    hit = (boxes[:, 0] <= x1) & (boxes[:, 2] >= x0) & (boxes[:, 1] <= y1) & (boxes[:, 3] >= y0)
    hit &= boxes[:, 0] >= 0
    return np.flatnonzero(hit)


def bbox_array(masks: Sequence[RleMask]) -> np.ndarray:
    """Stack mask bboxes into an (n, 4) array; empty masks become -1 rows."""
    out = np.full((len(masks), 4), -1, dtype=np.int64)
    for i, m in enumerate(masks):
        bb = m.bbox()
        if bb is not None:
            out[i] = bb
    return out
