"""Experiment configuration: defaults, JSON loading, seed fan-out."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

VARIANTS = ("k1", "k2", "k3", "no_topk", "plain_mean", "no_smoothing")


@dataclass
class SceneSource:
    suite: str = "canned12"
    count: int = 12
    file: str | None = None


@dataclass
class FusionSettings:
    temperature: float = 1.0
    top_k: int = 3
    variant: str = "topk"   # "topk" | "softmax" (no hard mask) | "mean" (no attention)

    def __post_init__(self):
        if self.variant not in ("topk", "softmax", "mean"):
            raise ValueError(f"unknown fusion variant: {self.variant}")


@dataclass
class RefineSettings:
    iterations: int = 8
    lookup_radius: int = 4
    smooth: bool = True
    gamma: float = 0.9


@dataclass
class CorruptionSettings:
    enabled: bool = False
    noise_amplitude: float = 0.5


@dataclass
class ExperimentConfig:
    output_dir: str
    rig_file: str | None = None
    scenes: SceneSource = field(default_factory=SceneSource)
    erp_width: int = 128
    erp_height: int = 64
    num_bins: int = 32
    d_min: float = 0.5
    d_max: float = 20.0
    fusion: FusionSettings = field(default_factory=FusionSettings)
    refine: RefineSettings = field(default_factory=RefineSettings)
    corruption: CorruptionSettings = field(default_factory=CorruptionSettings)
    write_metric_depth: bool = False
    seed: int = 0


_SECTIONS = {
    "scenes": SceneSource,
    "fusion": FusionSettings,
    "refine": RefineSettings,
    "corruption": CorruptionSettings,
}


def config_from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    kwargs = {}
    for key, cls in _SECTIONS.items():
        if key in doc:
            section = doc.pop(key)
            if not isinstance(section, dict):
                raise ValueError(f"config section '{key}' must be an object")
            kwargs[key] = cls(**section)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**doc, **kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as f:
        return config_from_dict(json.load(f))
