"""Pydantic request/response models for the HTTP service.

Boxes travel on the wire as flat 8-float corner lists in the same order
as the file format: x1,y1,...,x4,y4.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

Corners = list[float]


class PredictionModel(BaseModel):
    corners: Corners = Field(min_length=8, max_length=8)
    text: str
    score: Optional[float] = None
    model_id: str = ""


class PredictionSetModel(BaseModel):
    image_id: str
    model_id: str
    predictions: list[PredictionModel] = []


class FusionConfigModel(BaseModel):
    iou_threshold: float = 0.5
    label_policy: Literal["highest-score", "model-priority", "largest-area"] = "highest-score"
    model_priority: list[str] = []
    max_passes: int = 16


class ProvenanceModel(BaseModel):
    model_id: str
    index: int
    relation: Literal["merged", "split", "passthrough"]


class FusedPredictionModel(BaseModel):
    corners: Corners
    text: str
    provenance: list[ProvenanceModel]


class FuseRequest(BaseModel):
    sets: list[PredictionSetModel] = Field(min_length=1)
    config: FusionConfigModel = FusionConfigModel()


class FuseResponse(BaseModel):
    image_id: str
    predictions: list[FusedPredictionModel]
    fixpoint_reached: bool
    diagnostics: list[str] = []


class GroundTruthModel(BaseModel):
    corners: Corners = Field(min_length=8, max_length=8)
    text: str


class EvalImageModel(BaseModel):
    image_id: str
    predictions: list[PredictionModel] = []
    ground_truth: list[GroundTruthModel] = []


class EvalRequest(BaseModel):
    images: list[EvalImageModel]
    match_iou: float = 0.5
    char_acc_micro: bool = False


class MetricsModel(BaseModel):
    precision: float
    recall: float
    hmean: float
    char_acc: float
    e2e_fmeasure: float
    tp: int
    fp: int
    fn: int


class EvalResponse(MetricsModel):
    per_image: dict[str, MetricsModel] = {}


class NoiseProfileModel(BaseModel):
    drop_rate: float = 0.0
    jitter_px: float = 0.0
    char_error_rate: float = 0.0
    spurious_rate: float = 0.0
    seed: int = 0
    drop_partition: Optional[tuple[int, int]] = None


class SynthImageModel(BaseModel):
    image_id: str
    ground_truth: list[GroundTruthModel]


class SynthRequest(BaseModel):
    images: list[SynthImageModel]
    profile: NoiseProfileModel = NoiseProfileModel()
    model_id: str = "synthetic"


class SynthResponse(BaseModel):
    sets: list[PredictionSetModel]


class RecognitionEntryModel(BaseModel):
    index: int
    text: str
    score: Optional[float] = None


class ConvertRequest(BaseModel):
    image_id: str
    boxes: list[Corners]
    recognized: list[RecognitionEntryModel] = []
    model_id: str = "two-stage"


class ConvertResponse(BaseModel):
    set: PredictionSetModel
    missing_text_indices: list[int] = []


class OracleCheckRequest(BaseModel):
    corners_a: Corners = Field(min_length=8, max_length=8)
    corners_b: Corners = Field(min_length=8, max_length=8)
    resolution: int = 1024


class OracleCheckResponse(BaseModel):
    exact_iou: float
    raster_iou: float
    delta: float
