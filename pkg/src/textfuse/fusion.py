"""Ensemble combination of per-model text-box predictions.

Given n prediction lists for the same image, non-overlapping boxes are
passed through unchanged, pairs with IoU at or above the threshold are
merged into their (re-boxed) intersection, and pairs with IoU strictly
between zero and the threshold are split into their (re-boxed) largest
difference pieces.  The threshold defaults to 0.5.
"""

from __future__ import annotations

import itertools
import unicodedata
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .geometry import QuadBox, difference, intersect, iou, min_area_rect


class Relation(str, Enum):
    MERGED = "merged"
    SPLIT = "split"
    PASSTHROUGH = "passthrough"


class LabelPolicy(str, Enum):
    HIGHEST_SCORE = "highest-score"
    MODEL_PRIORITY = "model-priority"
    LARGEST_SOURCE_AREA = "largest-area"


class FusionError(ValueError):
    pass


class MissingScore(FusionError):
    pass


class FixpointNotReached(UserWarning):
    """Fusion stopped at max_passes with threshold-exceeding pairs left."""


@dataclass(frozen=True)
class Prediction:
    """One detected box with its recognized word."""

    box: QuadBox
    text: str
    score: float | None = None
    model_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "text", unicodedata.normalize("NFC", self.text))
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise FusionError(f"score out of range: {self.score}")


@dataclass
class PredictionSet:
    """All predictions of one model for one image."""

    image_id: str
    model_id: str
    predictions: list[Prediction] = field(default_factory=list)

    def __post_init__(self) -> None:
        for p in self.predictions:
            if p.model_id and p.model_id != self.model_id:
                raise FusionError(
                    f"prediction from {p.model_id!r} in set of {self.model_id!r}"
                )


@dataclass(frozen=True)
class FusionConfig:
    iou_threshold: float = 0.5
    label_policy: LabelPolicy = LabelPolicy.HIGHEST_SCORE
    model_priority: tuple[str, ...] = ()
    max_passes: int = 16

    def __post_init__(self) -> None:
        if not (0.0 < self.iou_threshold <= 1.0):
            raise FusionError(f"iou_threshold out of range: {self.iou_threshold}")
        if self.label_policy is LabelPolicy.MODEL_PRIORITY and not self.model_priority:
            raise FusionError("model-priority policy requires a model_priority list")
        if self.max_passes < 1:
            raise FusionError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass(frozen=True)
class ProvenanceEntry:
    model_id: str
    index: int
    relation: Relation


@dataclass(frozen=True)
class FusedPrediction:
    box: QuadBox
    text: str
    provenance: tuple[ProvenanceEntry, ...]


@dataclass
class FusionResult:
    predictions: list[FusedPrediction]
    fixpoint_reached: bool = True
    diagnostics: list[str] = field(default_factory=list)


_uid_counter = itertools.count()


@dataclass
class WorkItem:
    """Mutable prediction state threaded through pairwise fusion."""

    box: QuadBox
    text: str
    score: float | None
    model_id: str
    source_area: float
    provenance: list[ProvenanceEntry]
    uid: int = field(default_factory=lambda: next(_uid_counter))

    @classmethod
    def from_prediction(cls, pred: Prediction, index: int, model_id: str | None = None) -> "WorkItem":
        mid = model_id or pred.model_id
        return cls(
            box=pred.box,
            text=pred.text,
            score=pred.score,
            model_id=mid,
            source_area=pred.box.area(),
            provenance=[ProvenanceEntry(mid, index, Relation.PASSTHROUGH)],
        )


def _retagged(entries: Iterable[ProvenanceEntry], relation: Relation) -> list[ProvenanceEntry]:
    return [ProvenanceEntry(e.model_id, e.index, relation) for e in entries]


def assign_text(
    candidates: Sequence[WorkItem],
    policy: LabelPolicy,
    model_priority: Sequence[str] = (),
) -> tuple[str, str]:
    """Pick the text (and owning model) a merged box should carry."""
    if not candidates:
        raise FusionError("assign_text needs at least one candidate")

    def rank(item: WorkItem) -> int:
        try:
            return list(model_priority).index(item.model_id)
        except ValueError:
            return len(model_priority)

    indexed = list(enumerate(candidates))
    if policy is LabelPolicy.HIGHEST_SCORE:
        if any(c.score is None for c in candidates):
            raise MissingScore("highest-score policy requires scores on all candidates")
        key = lambda ic: (-ic[1].score, rank(ic[1]), -ic[1].source_area, ic[0])
    elif policy is LabelPolicy.MODEL_PRIORITY:
        key = lambda ic: (rank(ic[1]), ic[0])
    else:
        key = lambda ic: (-ic[1].source_area, rank(ic[1]), ic[0])
    winner = min(indexed, key=key)[1]
    return winner.text, winner.model_id


def _merge_items(h: WorkItem, k: WorkItem, inter, cfg: FusionConfig) -> WorkItem:
    text, winner_id = assign_text([h, k], cfg.label_policy, cfg.model_priority)
    winner = h if winner_id == h.model_id else k
    return WorkItem(
        box=min_area_rect(inter),
        text=text,
        score=winner.score,
        model_id=winner.model_id,
        source_area=max(h.source_area, k.source_area),
        provenance=_retagged(h.provenance + k.provenance, Relation.MERGED),
    )


def _split_item(item: WorkItem, own, other, diagnostics: list[str] | None) -> WorkItem | None:
    pieces = difference(own, other)
    if not pieces:
        if diagnostics is not None:
            diagnostics.append(
                f"dropped {item.model_id!r} box {item.text!r}: zero-area remainder after split"
            )
        return None
    largest = max(pieces, key=lambda p: p.area())
    return WorkItem(
        box=min_area_rect(largest),
        text=item.text,
        score=item.score,
        model_id=item.model_id,
        source_area=item.source_area,
        provenance=_retagged(item.provenance, Relation.SPLIT),
    )


def _fuse_pair_tagged(
    h: WorkItem, k: WorkItem, cfg: FusionConfig, diagnostics: list[str] | None
) -> tuple[str, WorkItem | None, WorkItem | None]:
    """Apply the pairwise rule; returns (kind, h-derived, k-derived).

    kind is "none" (disjoint, both unchanged), "merge" (single output in
    the h slot), or "split" (either slot may be None when its remainder
    vanished).
    """
    ph, pk = h.box.polygon(), k.box.polygon()
    overlap = iou(ph, pk)
    if overlap <= 0.0:
        return "none", h, k
    if overlap >= cfg.iou_threshold:
        return "merge", _merge_items(h, k, intersect(ph, pk), cfg), None
    return (
        "split",
        _split_item(h, ph, pk, diagnostics),
        _split_item(k, pk, ph, diagnostics),
    )


def fuse_pair(
    h: WorkItem,
    k: WorkItem,
    cfg: FusionConfig,
    diagnostics: list[str] | None = None,
) -> list[WorkItem]:
    """Combine two predictions into 0, 1, or 2 per the pairwise overlap rule."""
    _, a, b = _fuse_pair_tagged(h, k, cfg, diagnostics)
    return [x for x in (a, b) if x is not None]


def _sort_key(box: QuadBox) -> tuple[float, float, float]:
    bl = box.corners[0]
    return (bl.y, bl.x, box.area())


def _insert_resolving(
    acc: list[WorkItem], incoming: WorkItem, cfg: FusionConfig, diagnostics: list[str]
) -> None:
    """Insert one prediction, resolving against accumulated boxes greedily.

    The highest-IoU accumulated partner is engaged first; each partner is
    engaged at most once per insertion so that re-boxing cannot cycle.
    """
    cur: WorkItem | None = incoming
    seen: set[int] = set()
    while cur is not None:
        best_i, best_iou = -1, 0.0
        for i, item in enumerate(acc):
            if item.uid in seen:
                continue
            v = iou(item.box.polygon(), cur.box.polygon())
            if v > best_iou:
                best_i, best_iou = i, v
        if best_i < 0:
            acc.append(cur)
            return
        partner = acc.pop(best_i)
        seen.add(partner.uid)
        kind, a, b = _fuse_pair_tagged(partner, cur, cfg, diagnostics)
        if kind == "merge":
            cur = a
        else:  # split; "none" is unreachable because best_iou > 0
            if a is not None:
                seen.add(a.uid)
                acc.append(a)
            cur = b


def _resolve_threshold_pairs(
    acc: list[WorkItem], cfg: FusionConfig, diagnostics: list[str]
) -> bool:
    """Merge remaining pairs at or above the threshold; True iff fixpoint reached."""
    for _ in range(cfg.max_passes):
        merged_any = False
        i = 0
        while i < len(acc):
            j = i + 1
            while j < len(acc):
                if iou(acc[i].box.polygon(), acc[j].box.polygon()) >= cfg.iou_threshold:
                    h, k = acc[i], acc.pop(j)
                    acc[i] = _merge_items(
                        h, k, intersect(h.box.polygon(), k.box.polygon()), cfg
                    )
                    merged_any = True
                else:
                    j += 1
            i += 1
        if not merged_any:
            return True
    for i in range(len(acc)):
        for j in range(i + 1, len(acc)):
            if iou(acc[i].box.polygon(), acc[j].box.polygon()) >= cfg.iou_threshold:
                return False
    return True


def _needs_priority_fallback(sets: Sequence[PredictionSet], cfg: FusionConfig) -> bool:
    return cfg.label_policy is LabelPolicy.HIGHEST_SCORE and any(
        p.score is None for s in sets for p in s.predictions
    )


def fuse_image(sets: Sequence[PredictionSet], cfg: FusionConfig | None = None) -> FusionResult:
    """Fuse the per-model prediction sets of a single image.

    With a single input set the output is the input unchanged (boxes from
    one model are never fused with each other).  Output order is sorted by
    bottom-left corner, then area.
    """
    if not sets:
        raise FusionError("fuse_image needs at least one prediction set")
    cfg = cfg or FusionConfig()
    image_id = sets[0].image_id
    for s in sets[1:]:
        if s.image_id != image_id:
            raise FusionError(f"mixed image ids: {image_id!r} vs {s.image_id!r}")

    diagnostics: list[str] = []
    if _needs_priority_fallback(sets, cfg):
        # scores absent: fall back to model priority, defaulting to input order
        priority = cfg.model_priority or tuple(s.model_id for s in sets)
        cfg = FusionConfig(
            iou_threshold=cfg.iou_threshold,
            label_policy=LabelPolicy.MODEL_PRIORITY,
            model_priority=priority,
            max_passes=cfg.max_passes,
        )
        diagnostics.append("missing scores: label policy fell back to model priority")

    acc = [
        WorkItem.from_prediction(p, i, sets[0].model_id)
        for i, p in enumerate(sets[0].predictions)
    ]
    fixpoint = True
    if len(sets) > 1:
        for s in sets[1:]:
            for i, pred in enumerate(s.predictions):
                _insert_resolving(acc, WorkItem.from_prediction(pred, i, s.model_id), cfg, diagnostics)
        fixpoint = _resolve_threshold_pairs(acc, cfg, diagnostics)
        if not fixpoint:
            warnings.warn(
                f"fusion of image {image_id!r} stopped at max_passes={cfg.max_passes}",
                FixpointNotReached,
            )
            diagnostics.append(f"fixpoint not reached within {cfg.max_passes} passes")

    acc.sort(key=lambda w: _sort_key(w.box))
    fused = [
        FusedPrediction(box=w.box, text=w.text, provenance=tuple(w.provenance))
        for w in acc
    ]
    return FusionResult(predictions=fused, fixpoint_reached=fixpoint, diagnostics=diagnostics)
