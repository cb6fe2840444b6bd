"""Request handlers bridging the wire schemas and the core package.

The FastAPI routes and the CLI both call these functions, so file I/O and
HTTP stay out of the core modules.
"""

from __future__ import annotations

from .. import formats, metrics, oracle, synth
from ..fusion import (
    FusionConfig,
    FusionResult,
    LabelPolicy,
    Prediction,
    PredictionSet,
    fuse_image,
)
from ..geometry import QuadBox, canonicalize, iou
from . import schemas


def corners_to_box(corners: list[float]) -> QuadBox:
    return canonicalize(list(zip(corners[0::2], corners[1::2])))


def _to_prediction(m: schemas.PredictionModel, model_id: str) -> Prediction:
    return Prediction(
        box=corners_to_box(m.corners),
        text=m.text,
        score=m.score,
        model_id=m.model_id or model_id,
    )


def _to_set(m: schemas.PredictionSetModel) -> PredictionSet:
    return PredictionSet(
        image_id=m.image_id,
        model_id=m.model_id,
        predictions=[_to_prediction(p, m.model_id) for p in m.predictions],
    )


def _to_config(m: schemas.FusionConfigModel) -> FusionConfig:
    return FusionConfig(
        iou_threshold=m.iou_threshold,
        label_policy=LabelPolicy(m.label_policy),
        model_priority=tuple(m.model_priority),
        max_passes=m.max_passes,
    )


def _fused_to_model(result: FusionResult, image_id: str) -> schemas.FuseResponse:
    return schemas.FuseResponse(
        image_id=image_id,
        predictions=[
            schemas.FusedPredictionModel(
                corners=list(p.box.flat()),
                text=p.text,
                provenance=[
                    schemas.ProvenanceModel(
                        model_id=e.model_id, index=e.index, relation=e.relation.value
                    )
                    for e in p.provenance
                ],
            )
            for p in result.predictions
        ],
        fixpoint_reached=result.fixpoint_reached,
        diagnostics=result.diagnostics,
    )


def fuse(req: schemas.FuseRequest) -> schemas.FuseResponse:
    sets = [_to_set(s) for s in req.sets]
    result = fuse_image(sets, _to_config(req.config))
    return _fused_to_model(result, sets[0].image_id)


def _to_record(m: schemas.GroundTruthModel) -> formats.AnnotationRecord:
    return formats.AnnotationRecord(box=corners_to_box(m.corners), text=m.text)


def _metrics_model(r: metrics.EvalReport) -> schemas.MetricsModel:
    return schemas.MetricsModel(
        precision=r.precision,
        recall=r.recall,
        hmean=r.hmean,
        char_acc=r.char_acc,
        e2e_fmeasure=r.e2e_fmeasure,
        tp=r.tp,
        fp=r.fp,
        fn=r.fn,
    )


def evaluate(req: schemas.EvalRequest) -> schemas.EvalResponse:
    images = {
        img.image_id: (
            [_to_prediction(p, "") for p in img.predictions],
            [_to_record(g) for g in img.ground_truth],
        )
        for img in req.images
    }
    report = metrics.evaluate_corpus(
        images, match_iou=req.match_iou, char_acc_micro=req.char_acc_micro
    )
    top = _metrics_model(report)
    return schemas.EvalResponse(
        **top.model_dump(),
        per_image={k: _metrics_model(v) for k, v in report.per_image.items()},
    )


def synthesize(req: schemas.SynthRequest) -> schemas.SynthResponse:
    gt = {
        img.image_id: [_to_record(g) for g in img.ground_truth] for img in req.images
    }
    profile = synth.NoiseProfile(**req.profile.model_dump())
    sets = synth.synthesize_model(gt, profile, req.model_id)
    return schemas.SynthResponse(
        sets=[
            schemas.PredictionSetModel(
                image_id=s.image_id,
                model_id=s.model_id,
                predictions=[
                    schemas.PredictionModel(
                        corners=list(p.box.flat()),
                        text=p.text,
                        score=p.score,
                        model_id=p.model_id,
                    )
                    for p in s.predictions
                ],
            )
            for s in sorted(sets.values(), key=lambda s: s.image_id)
        ]
    )


def convert(req: schemas.ConvertRequest) -> schemas.ConvertResponse:
    boxes = [corners_to_box(c) for c in req.boxes]
    rec = [(e.index, e.text, e.score) for e in req.recognized]
    pset, flagged = formats.join_two_stage(boxes, rec, req.image_id, req.model_id)
    return schemas.ConvertResponse(
        set=schemas.PredictionSetModel(
            image_id=pset.image_id,
            model_id=pset.model_id,
            predictions=[
                schemas.PredictionModel(
                    corners=list(p.box.flat()),
                    text=p.text,
                    score=p.score,
                    model_id=p.model_id,
                )
                for p in pset.predictions
            ],
        ),
        missing_text_indices=flagged,
    )


def oracle_check(req: schemas.OracleCheckRequest) -> schemas.OracleCheckResponse:
    a = corners_to_box(req.corners_a).polygon()
    b = corners_to_box(req.corners_b).polygon()
    grid = oracle.grid_for([a, b], resolution=req.resolution)
    exact = iou(a, b)
    approx = oracle.raster_iou(a, b, grid)
    return schemas.OracleCheckResponse(
        exact_iou=exact, raster_iou=approx, delta=abs(exact - approx)
    )
