"""Shared test helpers: independent geometry oracles and scene builders."""

from __future__ import annotations

import numpy as np
import pytest

from hiereval.annotations import (
    GroundTruthDataset,
    ImageAnnotation,
    Line,
    Paragraph,
    Polygon,
    Vertex,
    Word,
)
from hiereval.geometry import Grid, RleMask


def rect(x: float, y: float, w: float, h: float) -> Polygon:
    return Polygon((Vertex(x, y), Vertex(x + w, y), Vertex(x + w, y + h), Vertex(x, y + h)))


def point_in_polygon(px: float, py: float, polygon: Polygon) -> bool:
    """Independent per-point ray cast (even-odd, half-open vertex rule).

    A point is inside iff the number of edge crossings at x <= px is odd,
    which realizes the same top/left boundary convention the rasterizer
    promises.
    """
    verts = polygon.vertices
    count = 0
    for i in range(len(verts)):
        x1, y1 = verts[i].x, verts[i].y
        x2, y2 = verts[(i + 1) % len(verts)].x, verts[(i + 1) % len(verts)].y
        if y1 == y2:
            continue
        if min(y1, y2) <= py < max(y1, y2):
            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if xc <= px:
                count += 1
    return count % 2 == 1


def enumerate_polygon_pixels(polygon: Polygon, grid: Grid) -> set[tuple[int, int]]:
    """Brute-force oracle: test every pixel center on the grid."""
    return {
        (i, j)
        for j in range(grid.height)
        for i in range(grid.width)
        if point_in_polygon(i + 0.5, j + 0.5, polygon)
    }


def mask_pixels(mask: RleMask) -> set[tuple[int, int]]:
    w = mask.grid.width
    return {(int(k % w), int(k // w)) for k in mask.pixel_indices()}


def dense_from_indices(grid: Grid, indices) -> np.ndarray:
    flat = np.zeros(grid.size, dtype=bool)
    flat[list(indices)] = True
    return flat


def dense_of_mask(mask: RleMask) -> np.ndarray:
    """Independent run decoder (per-run fill, not the production cumsum)."""
    flat = np.zeros(mask.grid.size, dtype=bool)
    for start, length in mask.runs:
        flat[start : start + length] = True
    return flat


def make_word(x, y, w, h, text="word", legible=True) -> Word:
    return Word(rect(x, y, w, h), text if legible else "", legible)


def make_image(image_id: str, width: int, height: int, paragraphs) -> ImageAnnotation:
    """paragraphs: list of list of list of Word (paragraph -> line -> words)."""
    return ImageAnnotation(
        image_id,
        width,
        height,
        tuple(Paragraph(tuple(Line(tuple(words)) for words in lines)) for lines in paragraphs),
    )


def make_dataset(*images: ImageAnnotation) -> GroundTruthDataset:
    return GroundTruthDataset(tuple(images))


@pytest.fixture
def simple_image() -> ImageAnnotation:
    """One paragraph, two lines, three words on a 64x64 grid."""
    return make_image(
        "img_0",
        64,
        64,
        [
            [
                [make_word(4, 4, 10, 6, "One"), make_word(18, 4, 10, 6, "two")],
                [make_word(4, 14, 12, 6, "three")],
            ]
        ],
    )
