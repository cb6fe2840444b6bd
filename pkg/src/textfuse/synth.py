"""Synthetic multi-model prediction corpora with controlled, complementary errors.

Stands in for real detector/recognizer ensembles at desk scale: each
synthetic model drops, jitters, and corrupts ground-truth boxes under a
seeded noise profile.  Complementarity between models is engineered by
partitioning the droppable box indices, so the union of two partitioned
models always covers more ground truth than either alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .formats import AnnotationRecord
from .fusion import Prediction, PredictionSet
from .geometry import GeometryError, Point, QuadBox, canonicalize, intersect

_ALPHABET = "abcdeghiklmnopqrstuvxy" + "ăâđêôơưáàảãạếềệốồộớờợ"


@dataclass(frozen=True)
class NoiseProfile:
    drop_rate: float = 0.0
    jitter_px: float = 0.0
    char_error_rate: float = 0.0
    spurious_rate: float = 0.0
    seed: int = 0
    # (slot, n_slots): only boxes with index % n_slots == slot may be dropped
    drop_partition: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        for name in ("drop_rate", "char_error_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} out of [0,1]: {v}")
        if self.jitter_px < 0 or self.spurious_rate < 0:
            raise ValueError("jitter_px and spurious_rate must be >= 0")
        if self.drop_partition is not None:
            slot, n = self.drop_partition
            if not (0 <= slot < n):
                raise ValueError(f"bad drop partition: {self.drop_partition}")


def complementary_profiles(base: NoiseProfile, n: int) -> list[NoiseProfile]:
    """n profiles whose droppable index sets partition the ground truth."""
    return [replace(base, seed=base.seed + i, drop_partition=(i, n)) for i in range(n)]


def _jittered_box(box: QuadBox, jitter: float, rng: random.Random) -> tuple[QuadBox, float]:
    """Perturb corners uniformly; retries draws that break convexity."""
    if jitter <= 0:
        return box, 0.0
    for _ in range(8):
        moved = []
        total = 0.0
        for c in box.corners:
            dx, dy = rng.uniform(-jitter, jitter), rng.uniform(-jitter, jitter)
            total += (dx * dx + dy * dy) ** 0.5
            moved.append(Point(c.x + dx, c.y + dy))
        try:
            return canonicalize(moved), total / 4.0
        except GeometryError:
            continue
    return box, 0.0


def _corrupt_text(text: str, rng: random.Random) -> str:
    pos = rng.randrange(len(text))
    choices = [c for c in _ALPHABET if c != text[pos]]
    return text[:pos] + rng.choice(choices) + text[pos + 1 :]


def _disjoint_from_all(box: QuadBox, others: Sequence[QuadBox]) -> bool:
    return all(intersect(box.polygon(), o.polygon()).is_empty for o in others)


def _spurious_boxes(
    count: int, gt_boxes: Sequence[QuadBox], rng: random.Random
) -> list[QuadBox]:
    if gt_boxes:
        xs = [c.x for b in gt_boxes for c in b.corners]
        ys = [c.y for b in gt_boxes for c in b.corners]
        x0, x1 = min(xs) - 100, max(xs) + 100
        y0, y1 = min(ys) - 100, max(ys) + 100
    else:
        x0, y0, x1, y1 = 0.0, 0.0, 1000.0, 1000.0
    placed: list[QuadBox] = []
    for _ in range(count):
        for _ in range(50):
            w, h = rng.uniform(20, 60), rng.uniform(10, 25)
            cx, cy = rng.uniform(x0, x1 - w), rng.uniform(y0, y1 - h)
            box = canonicalize([(cx, cy), (cx + w, cy), (cx + w, cy + h), (cx, cy + h)])
            if _disjoint_from_all(box, list(gt_boxes) + placed):
                placed.append(box)
                break
    return placed


def synthesize_model(
    gt: Mapping[str, Sequence[AnnotationRecord]],
    profile: NoiseProfile,
    model_id: str,
) -> dict[str, PredictionSet]:
    """Generate one model's predictions for every image of a ground-truth corpus.

    Deterministic for a fixed (corpus, profile); don't-care regions are
    skipped.  Scores reflect 1 minus the applied corruption magnitude.
    """
    out: dict[str, PredictionSet] = {}
    for image_id in sorted(gt):
        rng = random.Random(f"{profile.seed}|{image_id}")
        records = [r for r in gt[image_id] if not r.ignore]
        predictions: list[Prediction] = []
        for i, rec in enumerate(records):
            droppable = (
                profile.drop_partition is None
                or i % profile.drop_partition[1] == profile.drop_partition[0]
            )
            roll = rng.random()
            if droppable and roll < profile.drop_rate:
                continue
            box, mean_disp = _jittered_box(rec.box, profile.jitter_px, rng)
            text = rec.text
            corrupted = False
            if text and rng.random() < profile.char_error_rate:
                text = _corrupt_text(text, rng)
                corrupted = True
            magnitude = 0.0
            if profile.jitter_px > 0:
                magnitude += 0.5 * min(1.0, mean_disp / profile.jitter_px)
            if corrupted:
                magnitude += 0.5
            score = max(0.0, 1.0 - min(1.0, magnitude))
            predictions.append(
                Prediction(box=box, text=text, score=score, model_id=model_id)
            )

        n_spurious = int(profile.spurious_rate)
        if rng.random() < profile.spurious_rate - n_spurious:
            n_spurious += 1
        gt_boxes = [r.box for r in gt[image_id]]
        for box in _spurious_boxes(n_spurious, gt_boxes, rng):
            word = "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(3, 6)))
            predictions.append(Prediction(box=box, text=word, score=0.0, model_id=model_id))

        out[image_id] = PredictionSet(
            image_id=image_id, model_id=model_id, predictions=predictions
        )
    return out
