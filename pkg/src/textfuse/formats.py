"""Reading and writing the line-oriented annotation/prediction format.

One record per line: ``x1,y1,x2,y2,x3,y3,x4,y4,text``.  Everything after
the 8th comma is the text, which therefore may itself contain commas.
Files are UTF-8; LF or CRLF is accepted on input, LF emitted.  The text
``###`` marks a don't-care region.  All text is NFC-normalized on parse.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .fusion import FusedPrediction, Prediction, PredictionSet
from .geometry import GeometryError, QuadBox, canonicalize

IGNORE_TEXT = "###"


class FormatError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class MalformedLine(FormatError):
    pass


class BadGeometryLine(FormatError):
    """A syntactically valid line whose corners fail quad validation."""


class EncodingError(FormatError):
    def __init__(self, message: str, byte_offset: int):
        super().__init__(message)
        self.byte_offset = byte_offset


class IndexOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationRecord:
    box: QuadBox
    text: str

    @property
    def ignore(self) -> bool:
        return self.text == IGNORE_TEXT


def parse_annotation_file(data: bytes) -> list[AnnotationRecord]:
    """Parse one annotation/prediction file; raises with 1-based line numbers."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(
            f"invalid UTF-8 at byte offset {exc.start}", byte_offset=exc.start
        ) from exc

    records: list[AnnotationRecord] = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        parts = line.split(",", 8)
        if len(parts) < 9:
            raise MalformedLine(
                f"line {line_no}: expected 8 coordinates and a text field", line_no
            )
        try:
            coords = [float(v) for v in parts[:8]]
        except ValueError:
            raise MalformedLine(f"line {line_no}: non-numeric coordinate", line_no) from None
        word = unicodedata.normalize("NFC", parts[8])
        if not word:
            raise MalformedLine(f"line {line_no}: empty text field", line_no)
        try:
            box = canonicalize(list(zip(coords[0::2], coords[1::2])))
        except GeometryError as exc:
            raise BadGeometryLine(f"line {line_no}: {exc}", line_no) from exc
        records.append(AnnotationRecord(box=box, text=word))
    return records


def _record_sort_key(box: QuadBox) -> tuple[float, float, float]:
    bl = box.corners[0]
    return (bl.y, bl.x, box.area())


def write_records(records: Iterable[tuple[QuadBox, str]]) -> bytes:
    """Serialize (box, text) pairs: sorted, one decimal place, LF lines."""
    ordered = sorted(records, key=lambda r: _record_sort_key(r[0]))
    lines = []
    for box, word in ordered:
        coords = ",".join(f"{c + 0.0:.1f}" for c in box.flat())
        lines.append(f"{coords},{word}")
    if not lines:
        return b""
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_predictions(preds: Iterable[FusedPrediction]) -> bytes:
    return write_records((p.box, p.text) for p in preds)


def write_prediction_set(s: PredictionSet) -> bytes:
    return write_records((p.box, p.text) for p in s.predictions)


def join_two_stage(
    det: Sequence[QuadBox],
    rec: Sequence[tuple[int, str, float | None]],
    image_id: str,
    model_id: str,
) -> tuple[PredictionSet, list[int]]:
    """Pair detector boxes with recognizer outputs by box index.

    Boxes without a recognition entry get empty text; their indices are
    returned as the flagged list.
    """
    texts: dict[int, tuple[str, float | None]] = {}
    for index, word, score in rec:
        if not (0 <= index < len(det)):
            raise IndexOutOfRange(
                f"recognition index {index} out of range for {len(det)} boxes"
            )
        texts[index] = (word, score)
    predictions = []
    flagged = []
    for i, box in enumerate(det):
        word, score = texts.get(i, ("", None))
        if i not in texts:
            flagged.append(i)
        predictions.append(Prediction(box=box, text=word, score=score, model_id=model_id))
    return PredictionSet(image_id=image_id, model_id=model_id, predictions=predictions), flagged


@dataclass
class CorpusManifest:
    """Maps each image id to its ground-truth file and per-model prediction files."""

    images: dict[str, tuple[Path | None, dict[str, Path]]]

    @classmethod
    def from_directories(
        cls, model_dirs: Mapping[str, Path], gt_dir: Path | None = None
    ) -> "CorpusManifest":
        for model_id, d in model_dirs.items():
            if not d.is_dir():
                raise FormatError(f"model directory not found: {d}")
        if gt_dir is not None and not gt_dir.is_dir():
            raise FormatError(f"ground-truth directory not found: {gt_dir}")

        image_ids: set[str] = set()
        if gt_dir is not None:
            image_ids.update(p.stem for p in gt_dir.glob("*.txt"))
        for d in model_dirs.values():
            image_ids.update(p.stem for p in d.glob("*.txt"))

        images: dict[str, tuple[Path | None, dict[str, Path]]] = {}
        for image_id in sorted(image_ids):
            gt_path = gt_dir / f"{image_id}.txt" if gt_dir is not None else None
            if gt_path is not None and not gt_path.is_file():
                gt_path = None
            model_paths = {
                model_id: d / f"{image_id}.txt"
                for model_id, d in model_dirs.items()
                if (d / f"{image_id}.txt").is_file()
            }
            images[image_id] = (gt_path, model_paths)
        return cls(images=images)
