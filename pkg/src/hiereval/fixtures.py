"""Deterministic synthetic scenes with controlled detector noise.

Scenes are built from axis-aligned word boxes packed without overlap:
words in a line share a baseline and are separated by gaps, lines stack
vertically inside their paragraph, paragraphs stack down the image.
Detector noise then derives submissions from the ground truth: vertex
jitter, dropped words, spurious boxes, merged lines and case-flipped
transcriptions. Every prediction (and every dropped word) carries a
provenance tag so tests can reason about expected score changes.

Randomness comes from numpy's PCG64 generator seeded from the config, so
a config reproduces the same bundle on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotations import (
    GroundTruthDataset,
    ImageAnnotation,
    Line,
    Paragraph,
    Polygon,
    Task1Submission,
    Task2Submission,
    Task2Word,
    Vertex,
    Word,
    serialize_ground_truth,
    serialize_task1_submission,
    serialize_task2_submission,
)
from .errors import ContractViolation, GenerationError, SchemaError
from .geometry import Grid

__all__ = [
    "NoiseConfig",
    "SceneConfig",
    "FixtureBundle",
    "generate_scene",
    "config_from_doc",
    "config_to_doc",
    "write_bundle",
]

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"
_TAIL = _LETTERS + "0123456789"


@dataclass(frozen=True)
class NoiseConfig:
    jitter_px: float = 0.0
    drop_prob: float = 0.0
    spurious_prob: float = 0.0
    merge_line_prob: float = 0.0
    case_flip_prob: float = 0.0

    def __post_init__(self):
        if self.jitter_px < 0:
            raise ContractViolation(f"jitter_px must be non-negative, got {self.jitter_px}")
        for name in ("drop_prob", "spurious_prob", "merge_line_prob", "case_flip_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractViolation(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class SceneConfig:
    seed: int = 0
    image_count: int = 1
    grid: Grid = Grid(256, 256)
    paragraphs_per_image: tuple[int, int] = (1, 3)
    lines_per_paragraph: tuple[int, int] = (1, 3)
    words_per_line: tuple[int, int] = (2, 5)
    word_size: tuple[int, int] = (8, 20)
    illegible_fraction: float = 0.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self):
        if self.image_count < 1:
            raise ContractViolation("image_count must be at least 1")
        for name in ("paragraphs_per_image", "lines_per_paragraph", "words_per_line", "word_size"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ContractViolation(f"{name} must be a non-empty range, got ({lo}, {hi})")
        if not 0.0 <= self.illegible_fraction <= 1.0:
            raise ContractViolation(f"illegible_fraction must be in [0, 1], got {self.illegible_fraction}")


@dataclass(frozen=True)
class FixtureBundle:
    gt: GroundTruthDataset
    task1: Task1Submission
    task2: Task2Submission
    provenance: dict[str, dict]


def _rand_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(rng.integers(lo, hi + 1))


def _random_text(rng: np.random.Generator) -> str:
    n = _rand_int(rng, 1, 8)
    chars = [_LETTERS[_rand_int(rng, 0, len(_LETTERS) - 1)]]
    chars += [_TAIL[_rand_int(rng, 0, len(_TAIL) - 1)] for _ in range(n - 1)]
    return "".join(chars)


def _rect(x: float, y: float, w: float, h: float) -> Polygon:
    return Polygon((Vertex(x, y), Vertex(x + w, y), Vertex(x + w, y + h), Vertex(x, y + h)))


def _jitter(rng: np.random.Generator, polygon: Polygon, amount: float) -> tuple[Polygon, str]:
    if amount <= 0:
        return polygon, "copied"
    verts = tuple(
        Vertex(v.x + float(rng.uniform(-amount, amount)), v.y + float(rng.uniform(-amount, amount)))
        for v in polygon.vertices
    )
    return Polygon(verts), "jittered"


def _place_image(rng: np.random.Generator, cfg: SceneConfig, image_id: str) -> ImageAnnotation:
    w_grid, h_grid = cfg.grid.width, cfg.grid.height
    margin = 2
    n_paragraphs = _rand_int(rng, *cfg.paragraphs_per_image)
    y = margin
    paragraphs = []
    for _ in range(n_paragraphs):
        n_lines = _rand_int(rng, *cfg.lines_per_paragraph)
        word_h = _rand_int(rng, *cfg.word_size)
        line_gap = max(2, word_h // 4)
        para_h = n_lines * word_h + (n_lines - 1) * line_gap
        if y + para_h > h_grid - margin:
            raise GenerationError(
                f"cannot fit {n_paragraphs} paragraphs into a {w_grid}x{h_grid} grid (image {image_id})"
            )
        word_gap = max(2, word_h // 3)
        line_widths = []
        for _ in range(n_lines):
            n_words = _rand_int(rng, *cfg.words_per_line)
            widths = [max(3, int(round(word_h * float(rng.uniform(1.2, 3.0))))) for _ in range(n_words)]
            line_widths.append(widths)
        widest = max(sum(ws) + (len(ws) - 1) * word_gap for ws in line_widths)
        if widest > w_grid - 2 * margin:
            raise GenerationError(
                f"line of width {widest} does not fit a {w_grid}px-wide grid (image {image_id})"
            )
        x0 = _rand_int(rng, margin, w_grid - margin - widest)
        lines = []
        yy = y
        for widths in line_widths:
            xx = x0
            words = []
            for ww in widths:
                legible = bool(rng.random() >= cfg.illegible_fraction)
                words.append(Word(_rect(xx, yy, ww, word_h), _random_text(rng) if legible else "", legible))
                xx += ww + word_gap
            lines.append(Line(tuple(words)))
            yy += word_h + line_gap
        paragraphs.append(Paragraph(tuple(lines)))
        y += para_h + max(3, word_h)
    return ImageAnnotation(image_id, w_grid, h_grid, tuple(paragraphs))


def _derive_predictions(rng: np.random.Generator, cfg: SceneConfig, img: ImageAnnotation):
    noise = cfg.noise
    t1_paragraphs: list[Paragraph] = []
    t1_word_tags: list[str] = []
    t1_line_tags: list[str] = []
    t2_words: list[Task2Word] = []
    t2_tags: list[str] = []
    dropped: list[str] = []

    for pi, para in enumerate(img.paragraphs):
        surviving_lines: list[tuple[list[Word], list[str]]] = []
        for li, line in enumerate(para.lines):
            kept: list[Word] = []
            kept_tags: list[str] = []
            for wi, word in enumerate(line.words):
                if not word.legible:
                    continue
                if noise.drop_prob > 0 and rng.random() < noise.drop_prob:
                    dropped.append(f"p{pi}.l{li}.w{wi}")
                    continue
                polygon, tag = _jitter(rng, word.polygon, noise.jitter_px)
                kept.append(Word(polygon))
                kept_tags.append(tag)
                text = word.text
                t2_tag = tag
                if noise.case_flip_prob > 0 and rng.random() < noise.case_flip_prob:
                    text = text.swapcase()
                    t2_tag = "case-flipped"
                t2_words.append(Task2Word(polygon, text))
                t2_tags.append(t2_tag)
            if kept:
                surviving_lines.append((kept, kept_tags))
        merged: list[tuple[list[Word], list[str], str]] = []
        for words, tags in surviving_lines:
            if merged and noise.merge_line_prob > 0 and rng.random() < noise.merge_line_prob:
                prev_words, prev_tags, _ = merged[-1]
                merged[-1] = (prev_words + words, prev_tags + tags, "merged")
            else:
                merged.append((words, tags, "copied"))
        if merged:
            t1_paragraphs.append(Paragraph(tuple(Line(tuple(ws)) for ws, _, _ in merged)))
            for ws, tags, line_tag in merged:
                t1_word_tags.extend(tags)
                t1_line_tags.append(line_tag)

    if noise.spurious_prob > 0:
        gt_words = img.words()
        for anchor in gt_words:
            if rng.random() >= noise.spurious_prob:
                continue
            word_h = _rand_int(rng, *cfg.word_size)
            word_w = max(3, int(round(word_h * float(rng.uniform(1.2, 3.0)))))
            if rng.random() < 0.5 and gt_words:
                target = gt_words[_rand_int(rng, 0, len(gt_words) - 1)]
                cx = sum(v.x for v in target.polygon.vertices) / len(target.polygon.vertices)
                cy = sum(v.y for v in target.polygon.vertices) / len(target.polygon.vertices)
                x = cx - word_w / 2 + float(rng.uniform(-word_h, word_h))
                y = cy - word_h / 2 + float(rng.uniform(-word_h, word_h))
            else:
                x = float(rng.uniform(-8, img.width - word_w + 8))
                y = float(rng.uniform(-8, img.height - word_h + 8))
            polygon = _rect(x, y, word_w, word_h)
            t1_paragraphs.append(Paragraph((Line((Word(polygon),)),)))
            t1_word_tags.append("spurious")
            t1_line_tags.append("spurious")
            t2_words.append(Task2Word(polygon, _random_text(rng)))
            t2_tags.append("spurious")

    provenance = {
        "task1_words": t1_word_tags,
        "task1_lines": t1_line_tags,
        "task2": t2_tags,
        "dropped_words": dropped,
    }
    return tuple(t1_paragraphs), tuple(t2_words), provenance


def generate_scene(cfg: SceneConfig) -> FixtureBundle:
    """Generate a full bundle (ground truth + both submissions + provenance).

    The same config always yields a structurally identical bundle. Raises
    GenerationError when the requested counts cannot be packed into the
    grid without overlap.
    """
    rng = np.random.default_rng(cfg.seed)
    images = []
    t1: dict[str, tuple[Paragraph, ...]] = {}
    t2: dict[str, tuple[Task2Word, ...]] = {}
    provenance: dict[str, dict] = {}
    for idx in range(cfg.image_count):
        image_id = f"img_{idx:04d}"
        img = _place_image(rng, cfg, image_id)
        images.append(img)
        t1[image_id], t2[image_id], provenance[image_id] = _derive_predictions(rng, cfg, img)
    return FixtureBundle(
        gt=GroundTruthDataset(tuple(images)),
        task1=Task1Submission(t1),
        task2=Task2Submission(t2),
        provenance=provenance,
    )


def config_to_doc(cfg: SceneConfig) -> dict:
    return {
        "seed": cfg.seed,
        "image_count": cfg.image_count,
        "grid": {"width": cfg.grid.width, "height": cfg.grid.height},
        "paragraphs_per_image": list(cfg.paragraphs_per_image),
        "lines_per_paragraph": list(cfg.lines_per_paragraph),
        "words_per_line": list(cfg.words_per_line),
        "word_size": list(cfg.word_size),
        "illegible_fraction": cfg.illegible_fraction,
        "noise": {
            "jitter_px": cfg.noise.jitter_px,
            "drop_prob": cfg.noise.drop_prob,
            "spurious_prob": cfg.noise.spurious_prob,
            "merge_line_prob": cfg.noise.merge_line_prob,
            "case_flip_prob": cfg.noise.case_flip_prob,
        },
    }


def _range_from(doc, name, default) -> tuple[int, int]:
    value = doc.get(name, default)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise SchemaError(f"$.{name}", "expected a [lo, hi] pair")
    return int(value[0]), int(value[1])


def config_from_doc(doc: dict) -> SceneConfig:
    if not isinstance(doc, dict):
        raise SchemaError("$", "scene config must be an object")
    defaults = SceneConfig()
    grid_doc = doc.get("grid", {})
    if not isinstance(grid_doc, dict):
        raise SchemaError("$.grid", "expected an object with width/height")
    noise_doc = doc.get("noise", {})
    if not isinstance(noise_doc, dict):
        raise SchemaError("$.noise", "expected an object")
    noise = NoiseConfig(
        jitter_px=float(noise_doc.get("jitter_px", 0.0)),
        drop_prob=float(noise_doc.get("drop_prob", 0.0)),
        spurious_prob=float(noise_doc.get("spurious_prob", 0.0)),
        merge_line_prob=float(noise_doc.get("merge_line_prob", 0.0)),
        case_flip_prob=float(noise_doc.get("case_flip_prob", 0.0)),
    )
    return SceneConfig(
        seed=int(doc.get("seed", defaults.seed)),
        image_count=int(doc.get("image_count", defaults.image_count)),
        grid=Grid(int(grid_doc.get("width", 256)), int(grid_doc.get("height", 256))),
        paragraphs_per_image=_range_from(doc, "paragraphs_per_image", defaults.paragraphs_per_image),
        lines_per_paragraph=_range_from(doc, "lines_per_paragraph", defaults.lines_per_paragraph),
        words_per_line=_range_from(doc, "words_per_line", defaults.words_per_line),
        word_size=_range_from(doc, "word_size", defaults.word_size),
        illegible_fraction=float(doc.get("illegible_fraction", 0.0)),
        noise=noise,
    )


def write_bundle(bundle: FixtureBundle, outdir: str | Path) -> None:
    """Write gt.json / task1.json / task2.json / provenance.json."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "gt.json").write_bytes(serialize_ground_truth(bundle.gt))
    (out / "task1.json").write_bytes(serialize_task1_submission(bundle.task1))
    (out / "task2.json").write_bytes(serialize_task2_submission(bundle.task2))
    (out / "provenance.json").write_bytes(
        (json.dumps(bundle.provenance, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    )
