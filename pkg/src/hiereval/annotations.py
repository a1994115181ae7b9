"""Hierarchical annotation data model plus document parsing and validation.

Ground truth is a word → line → paragraph forest per image. Documents are
UTF-8 JSON:

  ground truth   {"annotations": [{"image_id", "image_width", "image_height",
                   "paragraphs": [{"lines": [{"words": [{"vertices": [[x, y], ...],
                   "text", "legible"}]}]}]}]}
  detection run  same nesting under {"image_id", "paragraphs"}; word "text"
                 and "legible" are ignored when present
  end-to-end run {"annotations": [{"image_id", "words": [{"vertices", "text"}]}]}

Word texts are NFC-normalized at load time; comparison stays case-sensitive.
Parsed values are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import logging
import math
import unicodedata
from dataclasses import dataclass, field

from .errors import ParseError, SchemaError, ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "Vertex",
    "Polygon",
    "Word",
    "Line",
    "Paragraph",
    "ImageAnnotation",
    "GroundTruthDataset",
    "Task1Submission",
    "Task2Word",
    "Task2Submission",
    "Violation",
    "ValidationReport",
    "parse_ground_truth",
    "parse_task1_submission",
    "parse_task2_submission",
    "serialize_ground_truth",
    "serialize_task1_submission",
    "serialize_task2_submission",
    "validate_dataset",
]


@dataclass(frozen=True)
class Vertex:
    x: float
    y: float


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[Vertex, ...]

    def shoelace_area(self) -> float:
        """Absolute area of the closed vertex sequence, duplicates dropped."""
        pts = [self.vertices[0]]
        for v in self.vertices[1:]:
            if v != pts[-1]:
                pts.append(v)
        if len(pts) > 1 and pts[-1] == pts[0]:
            pts.pop()
        if len(pts) < 3:
            return 0.0
        acc = 0.0
        for a, b in zip(pts, pts[1:] + pts[:1]):
            acc += a.x * b.y - b.x * a.y
        return abs(acc) / 2.0


@dataclass(frozen=True)
class Word:
    polygon: Polygon
    text: str = ""
    legible: bool = True


@dataclass(frozen=True)
class Line:
    words: tuple[Word, ...]


@dataclass(frozen=True)
class Paragraph:
    lines: tuple[Line, ...]


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    width: int
    height: int
    paragraphs: tuple[Paragraph, ...]

    def words(self) -> list[Word]:
        return [w for p in self.paragraphs for ln in p.lines for w in ln.words]


@dataclass(frozen=True)
class GroundTruthDataset:
    images: tuple[ImageAnnotation, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for img in self.images:
            if img.image_id in seen:
                raise ValidationError(f"duplicate image_id {img.image_id!r}")
            seen.add(img.image_id)

    def by_id(self) -> dict[str, ImageAnnotation]:
        return {img.image_id: img for img in self.images}


@dataclass(frozen=True)
class Task1Submission:
    """Predicted forests keyed by image_id; word text/legibility carry no meaning."""

    paragraphs_by_image: dict[str, tuple[Paragraph, ...]]


@dataclass(frozen=True)
class Task2Word:
    polygon: Polygon
    text: str


@dataclass(frozen=True)
class Task2Submission:
    """Flat per-image word predictions with transcriptions."""

    words_by_image: dict[str, tuple[Task2Word, ...]]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _load_json(data: bytes):
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"document is not valid UTF-8: {exc.reason}", exc.start) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON: {exc.msg}", offset) from exc


def _expect_object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


def _expect_array(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected an array, got {type(value).__name__}")
    return value


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(path, f"missing required field {key!r}")
    return obj[key]


def _expect_string(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {type(value).__name__}")
    return value


def _expect_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaError(path, f"expected a boolean, got {type(value).__name__}")
    return value


def _expect_positive_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    if value < 1:
        raise SchemaError(path, f"expected a positive integer, got {value}")
    return value


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    out = float(value)
    if not math.isfinite(out):
        raise SchemaError(path, "coordinate must be finite")
    return out


def _warn_unknown(obj: dict, known: frozenset[str], path: str, seen: set[str]):
    for key in obj:
        if key not in known and key not in seen:
            seen.add(key)
            logger.warning("ignoring unknown field %r at %s", key, path)


def _parse_polygon(value, path: str) -> Polygon:
    arr = _expect_array(value, path)
    if len(arr) < 3:
        raise SchemaError(path, f"polygon needs at least 3 vertices, got {len(arr)}")
    vertices = []
    for i, pt in enumerate(arr):
        ppath = f"{path}[{i}]"
        pair = _expect_array(pt, ppath)
        if len(pair) != 2:
            raise SchemaError(ppath, f"vertex must be an [x, y] pair, got {len(pair)} values")
        vertices.append(Vertex(_expect_number(pair[0], f"{ppath}[0]"), _expect_number(pair[1], f"{ppath}[1]")))
    return Polygon(tuple(vertices))


_GT_WORD_FIELDS = frozenset({"vertices", "text", "legible"})
_PRED_WORD_FIELDS = frozenset({"vertices", "text", "legible"})
_LINE_FIELDS = frozenset({"words", "legible"})
_PARAGRAPH_FIELDS = frozenset({"lines", "legible"})
_GT_IMAGE_FIELDS = frozenset({"image_id", "image_width", "image_height", "paragraphs"})
_T1_IMAGE_FIELDS = frozenset({"image_id", "paragraphs"})
_T2_IMAGE_FIELDS = frozenset({"image_id", "words"})
_T2_WORD_FIELDS = frozenset({"vertices", "text"})


def _parse_forest(value, path: str, ground_truth: bool, unknown_seen: set[str]) -> tuple[Paragraph, ...]:
    paragraphs = []
    for pi, pobj in enumerate(_expect_array(value, path)):
        ppath = f"{path}[{pi}]"
        pdict = _expect_object(pobj, ppath)
        _warn_unknown(pdict, _PARAGRAPH_FIELDS, ppath, unknown_seen)
        lines = []
        larr = _expect_array(_require(pdict, "lines", ppath), f"{ppath}.lines")
        if not larr:
            raise SchemaError(f"{ppath}.lines", "paragraph must contain at least one line")
        for li, lobj in enumerate(larr):
            lpath = f"{ppath}.lines[{li}]"
            ldict = _expect_object(lobj, lpath)
            _warn_unknown(ldict, _LINE_FIELDS, lpath, unknown_seen)
            warr = _expect_array(_require(ldict, "words", lpath), f"{lpath}.words")
            if not warr:
                raise SchemaError(f"{lpath}.words", "line must contain at least one word")
            words = []
            for wi, wobj in enumerate(warr):
                wpath = f"{lpath}.words[{wi}]"
                wdict = _expect_object(wobj, wpath)
                known = _GT_WORD_FIELDS if ground_truth else _PRED_WORD_FIELDS
                _warn_unknown(wdict, known, wpath, unknown_seen)
                polygon = _parse_polygon(_require(wdict, "vertices", wpath), f"{wpath}.vertices")
                if ground_truth:
                    text = _expect_string(_require(wdict, "text", wpath), f"{wpath}.text")
                    legible = _expect_bool(_require(wdict, "legible", wpath), f"{wpath}.legible")
                    words.append(Word(polygon, unicodedata.normalize("NFC", text), legible))
                else:
                    words.append(Word(polygon))
            lines.append(Line(tuple(words)))
        paragraphs.append(Paragraph(tuple(lines)))
    return tuple(paragraphs)


def parse_ground_truth(data: bytes) -> GroundTruthDataset:
    """Parse and structurally check a ground-truth document.

    Raises ParseError (bad syntax, with byte offset), SchemaError (bad
    structure, naming the offending path), or ValidationError (duplicate
    image ids). Semantic issues like zero-area polygons are left to
    validate_dataset.
    """
    root = _expect_object(_load_json(data), "$")
    unknown_seen: set[str] = set()
    _warn_unknown(root, frozenset({"annotations"}), "$", unknown_seen)
    images = []
    for i, entry in enumerate(_expect_array(_require(root, "annotations", "$"), "$.annotations")):
        path = f"$.annotations[{i}]"
        obj = _expect_object(entry, path)
        _warn_unknown(obj, _GT_IMAGE_FIELDS, path, unknown_seen)
        image_id = _expect_string(_require(obj, "image_id", path), f"{path}.image_id")
        width = _expect_positive_int(_require(obj, "image_width", path), f"{path}.image_width")
        height = _expect_positive_int(_require(obj, "image_height", path), f"{path}.image_height")
        forest = _parse_forest(_require(obj, "paragraphs", path), f"{path}.paragraphs", True, unknown_seen)
        images.append(ImageAnnotation(image_id, width, height, forest))
    return GroundTruthDataset(tuple(images))


def parse_task1_submission(data: bytes) -> Task1Submission:
    """Parse a hierarchical detection submission (no transcriptions)."""
    root = _expect_object(_load_json(data), "$")
    unknown_seen: set[str] = set()
    _warn_unknown(root, frozenset({"annotations"}), "$", unknown_seen)
    by_image: dict[str, tuple[Paragraph, ...]] = {}
    for i, entry in enumerate(_expect_array(_require(root, "annotations", "$"), "$.annotations")):
        path = f"$.annotations[{i}]"
        obj = _expect_object(entry, path)
        _warn_unknown(obj, _T1_IMAGE_FIELDS, path, unknown_seen)
        image_id = _expect_string(_require(obj, "image_id", path), f"{path}.image_id")
        if image_id in by_image:
            raise ValidationError(f"duplicate image_id {image_id!r} in submission")
        by_image[image_id] = _parse_forest(
            _require(obj, "paragraphs", path), f"{path}.paragraphs", False, unknown_seen
        )
    return Task1Submission(by_image)


def parse_task2_submission(data: bytes) -> Task2Submission:
    """Parse a word-level end-to-end submission (polygon + transcription)."""
    root = _expect_object(_load_json(data), "$")
    unknown_seen: set[str] = set()
    _warn_unknown(root, frozenset({"annotations"}), "$", unknown_seen)
    by_image: dict[str, tuple[Task2Word, ...]] = {}
    for i, entry in enumerate(_expect_array(_require(root, "annotations", "$"), "$.annotations")):
        path = f"$.annotations[{i}]"
        obj = _expect_object(entry, path)
        _warn_unknown(obj, _T2_IMAGE_FIELDS, path, unknown_seen)
        image_id = _expect_string(_require(obj, "image_id", path), f"{path}.image_id")
        if image_id in by_image:
            raise ValidationError(f"duplicate image_id {image_id!r} in submission")
        words = []
        for wi, wobj in enumerate(_expect_array(_require(obj, "words", path), f"{path}.words")):
            wpath = f"{path}.words[{wi}]"
            wdict = _expect_object(wobj, wpath)
            _warn_unknown(wdict, _T2_WORD_FIELDS, wpath, unknown_seen)
            polygon = _parse_polygon(_require(wdict, "vertices", wpath), f"{wpath}.vertices")
            text = _expect_string(_require(wdict, "text", wpath), f"{wpath}.text")
            words.append(Task2Word(polygon, unicodedata.normalize("NFC", text)))
        by_image[image_id] = tuple(words)
    return Task2Submission(by_image)


# ---------------------------------------------------------------------------
# Serialization (keys emitted in schema order)
# ---------------------------------------------------------------------------


def _vertices_doc(polygon: Polygon) -> list[list[float]]:
    return [[v.x, v.y] for v in polygon.vertices]


def _forest_doc(paragraphs: tuple[Paragraph, ...], with_text: bool) -> list[dict]:
    out = []
    for p in paragraphs:
        lines = []
        for ln in p.lines:
            words = []
            for w in ln.words:
                doc: dict = {"vertices": _vertices_doc(w.polygon)}
                if with_text:
                    doc["text"] = w.text
                    doc["legible"] = w.legible
                words.append(doc)
            lines.append({"words": words})
        out.append({"lines": lines})
    return out


def _dump(doc) -> bytes:
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def serialize_ground_truth(ds: GroundTruthDataset) -> bytes:
    doc = {
        "annotations": [
            {
                "image_id": img.image_id,
                "image_width": img.width,
                "image_height": img.height,
                "paragraphs": _forest_doc(img.paragraphs, with_text=True),
            }
            for img in ds.images
        ]
    }
    return _dump(doc)


def serialize_task1_submission(sub: Task1Submission) -> bytes:
    doc = {
        "annotations": [
            {"image_id": image_id, "paragraphs": _forest_doc(forest, with_text=False)}
            for image_id, forest in sub.paragraphs_by_image.items()
        ]
    }
    return _dump(doc)


def serialize_task2_submission(sub: Task2Submission) -> bytes:
    doc = {
        "annotations": [
            {
                "image_id": image_id,
                "words": [{"vertices": _vertices_doc(w.polygon), "text": w.text} for w in words],
            }
            for image_id, words in sub.words_by_image.items()
        ]
    }
    return _dump(doc)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: str
    severity: str  # "error" | "warning"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    images: int = 0
    paragraphs: int = 0
    lines: int = 0
    words: int = 0

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_doc(self) -> dict:
        return {
            "counts": {
                "images": self.images,
                "paragraphs": self.paragraphs,
                "lines": self.lines,
                "words": self.words,
            },
            "violations": [
                {"path": v.path, "severity": v.severity, "message": v.message} for v in self.violations
            ],
        }


def validate_dataset(ds: GroundTruthDataset) -> ValidationReport:
    """Check every structural and semantic invariant; never raises.

    The report is empty iff the dataset is fully well-formed and no polygon
    is degenerate. Out-of-grid vertices are warnings only: they are legal
    and get clipped at rasterization.
    """
    violations: list[Violation] = []
    n_paragraphs = n_lines = n_words = 0

    def err(path: str, message: str):
        violations.append(Violation(path, "error", message))

    def warn(path: str, message: str):
        violations.append(Violation(path, "warning", message))

    for img in ds.images:
        base = f"$.images[{img.image_id}]"
        if img.width < 1 or img.height < 1:
            err(base, f"image dimensions must be positive, got {img.width}x{img.height}")
        for pi, p in enumerate(img.paragraphs):
            n_paragraphs += 1
            ppath = f"{base}.paragraphs[{pi}]"
            if not p.lines:
                err(ppath, "paragraph has no lines")
            for li, ln in enumerate(p.lines):
                n_lines += 1
                lpath = f"{ppath}.lines[{li}]"
                if not ln.words:
                    err(lpath, "line has no words")
                for wi, w in enumerate(ln.words):
                    n_words += 1
                    wpath = f"{lpath}.words[{wi}]"
                    if len(w.polygon.vertices) < 3:
                        err(wpath, f"polygon has {len(w.polygon.vertices)} vertices, need at least 3")
                        continue
                    if any(not (math.isfinite(v.x) and math.isfinite(v.y)) for v in w.polygon.vertices):
                        err(wpath, "polygon has non-finite vertices")
                        continue
                    if w.polygon.shoelace_area() == 0.0:
                        err(wpath, "polygon has zero area")
                    if w.legible and not w.text:
                        err(wpath, "legible word has empty text")
                    if any(
                        v.x < 0 or v.y < 0 or v.x > img.width or v.y > img.height
                        for v in w.polygon.vertices
                    ):
                        warn(wpath, "vertex outside the image bounds (clipped at rasterization)")

    return ValidationReport(tuple(violations), len(ds.images), n_paragraphs, n_lines, n_words)
