"""Request/response models for the HTTP service (mirrors the core config)."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..config import (
    CorruptionSettings,
    ExperimentConfig,
    FusionSettings,
    RefineSettings,
    SceneSource,
)
from ..metrics import Metrics


class SceneSourceModel(BaseModel):
    suite: str = "canned12"
    count: int = Field(default=12, ge=1)
    file: Optional[str] = None


class FusionModel(BaseModel):
    temperature: float = Field(default=1.0, gt=0)
    top_k: int = Field(default=3, ge=1)
    variant: Literal["topk", "softmax", "mean"] = "topk"


class RefineModel(BaseModel):
    iterations: int = Field(default=8, ge=1)
    lookup_radius: int = Field(default=4, ge=1)
    smooth: bool = True
    gamma: float = Field(default=0.9, gt=0, lt=1)


class CorruptionModel(BaseModel):
    enabled: bool = False
    noise_amplitude: float = Field(default=0.5, gt=0, le=1)


class ExperimentConfigModel(BaseModel):
    output_dir: str
    rig_file: Optional[str] = None
    scenes: SceneSourceModel = SceneSourceModel()
    erp_width: int = Field(default=128, ge=2)
    erp_height: int = Field(default=64, ge=2)
    num_bins: int = Field(default=32, ge=2)
    d_min: float = Field(default=0.5, gt=0)
    d_max: float = 20.0
    fusion: FusionModel = FusionModel()
    refine: RefineModel = RefineModel()
    corruption: CorruptionModel = CorruptionModel()
    write_metric_depth: bool = False
    seed: int = 0

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            output_dir=self.output_dir,
            rig_file=self.rig_file,
            scenes=SceneSource(**self.scenes.model_dump()),
            erp_width=self.erp_width,
            erp_height=self.erp_height,
            num_bins=self.num_bins,
            d_min=self.d_min,
            d_max=self.d_max,
            fusion=FusionSettings(**self.fusion.model_dump()),
            refine=RefineSettings(**self.refine.model_dump()),
            corruption=CorruptionSettings(**self.corruption.model_dump()),
            write_metric_depth=self.write_metric_depth,
            seed=self.seed,
        )


class MetricsModel(BaseModel):
    label: str
    gt1: float
    gt3: float
    gt5: float
    mae: float
    rmse: float
    valid_count: int

    @classmethod
    def from_metrics(cls, label: str, m: Metrics) -> "MetricsModel":
        return cls(label=label, gt1=m.pct_gt1, gt3=m.pct_gt3, gt5=m.pct_gt5,
                   mae=m.mae, rmse=m.rmse, valid_count=m.valid_count)


class GenerateResponse(BaseModel):
    samples: int
    images: int
    output_dir: str
    manifest: str


class RunResponse(BaseModel):
    summary: MetricsModel
    per_sample: list[MetricsModel]
    metrics_csv: str


class AblateRequest(BaseModel):
    config: ExperimentConfigModel
    variants: Optional[list[str]] = None


class AblateResponse(BaseModel):
    rows: list[MetricsModel]
    csv_path: str


class ReportEntry(BaseModel):
    label: str
    metrics_csv: str


class ReportRequest(BaseModel):
    entries: list[ReportEntry]
    output_path: Optional[str] = None


class ReportResponse(BaseModel):
    csv_text: str
    output_path: Optional[str] = None
