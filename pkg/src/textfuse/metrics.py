"""Detection, recognition, and end-to-end scoring against ground truth.

Detection uses greedy one-to-one IoU matching (threshold 0.5 by default,
the ICDAR convention).  Recognition quality is character accuracy from
Levenshtein distance over NFC code points.  End-to-end true positives
require a matched box plus exact, case-sensitive text equality.
Predictions that only cover "###" don't-care regions are excluded from
both precision and recall.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from .formats import AnnotationRecord
from .geometry import QuadBox, iou


class _HasBoxText(Protocol):
    box: QuadBox
    text: str


@dataclass
class MatchResult:
    pairs: list[tuple[int, int, float]]
    unmatched_preds: list[int]
    unmatched_gts: list[int]
    ignored_preds: list[int]
    n_ignored_gts: int = 0


def match_boxes(
    preds: Sequence[QuadBox],
    gts: Sequence[AnnotationRecord],
    match_iou: float = 0.5,
) -> MatchResult:
    """Greedy one-to-one matching by descending IoU at the given threshold."""
    if not (0.0 < match_iou <= 1.0):
        raise ValueError(f"match_iou out of range: {match_iou}")
    live_gts = [i for i, g in enumerate(gts) if not g.ignore]
    ignored_gts = [i for i, g in enumerate(gts) if g.ignore]

    candidates: list[tuple[float, int, int]] = []
    for pi, pbox in enumerate(preds):
        for gi in live_gts:
            v = iou(pbox.polygon(), gts[gi].box.polygon())
            if v >= match_iou:
                candidates.append((v, pi, gi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))

    pairs: list[tuple[int, int, float]] = []
    used_p: set[int] = set()
    used_g: set[int] = set()
    for v, pi, gi in candidates:
        if pi in used_p or gi in used_g:
            continue
        pairs.append((pi, gi, v))
        used_p.add(pi)
        used_g.add(gi)

    ignored_preds = []
    unmatched_preds = []
    for pi, pbox in enumerate(preds):
        if pi in used_p:
            continue
        if any(
            iou(pbox.polygon(), gts[gi].box.polygon()) >= match_iou for gi in ignored_gts
        ):
            ignored_preds.append(pi)
        else:
            unmatched_preds.append(pi)
    unmatched_gts = [gi for gi in live_gts if gi not in used_g]
    return MatchResult(
        pairs=sorted(pairs, key=lambda p: p[0]),
        unmatched_preds=unmatched_preds,
        unmatched_gts=unmatched_gts,
        ignored_preds=ignored_preds,
        n_ignored_gts=len(ignored_gts),
    )


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    h = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, h


def detection_prf(
    m: MatchResult, n_preds: int | None = None, n_gts: int | None = None
) -> tuple[float, float, float]:
    """Precision, recall, harmonic mean from a match result."""
    tp = len(m.pairs)
    fp = len(m.unmatched_preds)
    fn = len(m.unmatched_gts)
    if n_preds is not None and tp + fp + len(m.ignored_preds) != n_preds:
        raise ValueError("match result inconsistent with n_preds")
    if n_gts is not None and tp + fn + m.n_ignored_gts != n_gts:
        raise ValueError("match result inconsistent with n_gts")
    return _prf(tp, fp, fn)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode scalar values."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def char_accuracy(pred_text: str, gt_text: str) -> float:
    """max(0, (|gt| - ED) / |gt|); 1.0 when both strings are empty."""
    if not gt_text:
        return 1.0 if not pred_text else 0.0
    ed = levenshtein(pred_text, gt_text)
    return max(0.0, (len(gt_text) - ed) / len(gt_text))


@dataclass
class ImageStats:
    """Raw per-image counts; corpus aggregation is a sum over these."""

    det_tp: int = 0
    det_fp: int = 0
    det_fn: int = 0
    e2e_tp: int = 0
    ca_values: list[float] = field(default_factory=list)
    gt_char_total: int = 0
    char_hits: float = 0.0


@dataclass
class EvalReport:
    precision: float = 0.0
    recall: float = 0.0
    hmean: float = 0.0
    char_acc: float = 0.0
    e2e_fmeasure: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    per_image: dict[str, "EvalReport"] = field(default_factory=dict)

    def to_dict(self, with_per_image: bool = True) -> dict:
        out = {
            "precision": self.precision,
            "recall": self.recall,
            "hmean": self.hmean,
            "char_acc": self.char_acc,
            "e2e_fmeasure": self.e2e_fmeasure,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }
        if with_per_image:
            out["per_image"] = {
                k: v.to_dict(with_per_image=False) for k, v in sorted(self.per_image.items())
            }
        return out


def score_image(
    preds: Sequence[_HasBoxText],
    gts: Sequence[AnnotationRecord],
    match_iou: float = 0.5,
) -> ImageStats:
    m = match_boxes([p.box for p in preds], gts, match_iou)
    stats = ImageStats(
        det_tp=len(m.pairs), det_fp=len(m.unmatched_preds), det_fn=len(m.unmatched_gts)
    )
    for pi, gi, _ in m.pairs:
        pred_text, gt_text = preds[pi].text, gts[gi].text
        stats.ca_values.append(char_accuracy(pred_text, gt_text))
        stats.gt_char_total += len(gt_text)
        stats.char_hits += max(0.0, len(gt_text) - levenshtein(pred_text, gt_text))
        if pred_text == gt_text:
            stats.e2e_tp += 1
    return stats


def _report_from_stats(stats: ImageStats, char_acc_micro: bool) -> EvalReport:
    p, r, h = _prf(stats.det_tp, stats.det_fp, stats.det_fn)
    n_eff_preds = stats.det_tp + stats.det_fp
    n_eff_gts = stats.det_tp + stats.det_fn
    _, _, e2e_f = _prf(
        stats.e2e_tp, n_eff_preds - stats.e2e_tp, n_eff_gts - stats.e2e_tp
    )
    if char_acc_micro:
        ca = stats.char_hits / stats.gt_char_total if stats.gt_char_total else 0.0
    else:
        ca = sum(stats.ca_values) / len(stats.ca_values) if stats.ca_values else 0.0
    return EvalReport(
        precision=p,
        recall=r,
        hmean=h,
        char_acc=ca,
        e2e_fmeasure=e2e_f,
        tp=stats.det_tp,
        fp=stats.det_fp,
        fn=stats.det_fn,
    )


def end_to_end_eval(
    preds: Sequence[_HasBoxText],
    gts: Sequence[AnnotationRecord],
    match_iou: float = 0.5,
    char_acc_micro: bool = False,
) -> EvalReport:
    """Score a single image."""
    return _report_from_stats(score_image(preds, gts, match_iou), char_acc_micro)


def evaluate_corpus(
    images: Mapping[str, tuple[Sequence[_HasBoxText], Sequence[AnnotationRecord]]],
    match_iou: float = 0.5,
    char_acc_micro: bool = False,
) -> EvalReport:
    """Corpus metrics: micro P/R/H over summed counts, CA over all matched pairs."""
    total = ImageStats()
    per_image: dict[str, EvalReport] = {}
    for image_id in sorted(images):
        preds, gts = images[image_id]
        stats = score_image(preds, gts, match_iou)
        per_image[image_id] = _report_from_stats(stats, char_acc_micro)
        total.det_tp += stats.det_tp
        total.det_fp += stats.det_fp
        total.det_fn += stats.det_fn
        total.e2e_tp += stats.e2e_tp
        total.ca_values.extend(stats.ca_values)
        total.gt_char_total += stats.gt_char_total
        total.char_hits += stats.char_hits
    report = _report_from_stats(total, char_acc_micro)
    report.per_image = per_image
    return report
