"""Ensemble fusion and evaluation for quadrilateral scene-text predictions."""

from .fusion import (
    FusedPrediction,
    FusionConfig,
    FusionResult,
    LabelPolicy,
    Prediction,
    PredictionSet,
    fuse_image,
)
from .geometry import ConvexPolygon, Point, QuadBox, canonicalize
from .metrics import EvalReport, char_accuracy, evaluate_corpus

__version__ = "0.1.0"

__all__ = [
    "ConvexPolygon",
    "EvalReport",
    "FusedPrediction",
    "FusionConfig",
    "FusionResult",
    "LabelPolicy",
    "Point",
    "Prediction",
    "PredictionSet",
    "QuadBox",
    "canonicalize",
    "char_accuracy",
    "evaluate_corpus",
    "fuse_image",
]
