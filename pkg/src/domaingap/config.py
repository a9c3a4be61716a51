"""Run configuration: one TOML-or-JSON file describes an experiment
(collections, stage toggles, numeric defaults); CLI flags override it."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STAGES = ("color", "texture", "fid", "classification")


@dataclass
class CollectionConfig:
    name: str
    manifest: str
    images_root: str


@dataclass
class ColorConfig:
    hue_bins: int = 64
    gray_bins: int = 256
    per_image_mean: bool = False


@dataclass
class TextureConfig:
    patches_per_image: int = 4
    patch_side: int = 20
    levels: int = 16
    patch_list: str | None = None  # manual patch override CSV


@dataclass
class FidConfig:
    embeddings: dict[str, str] = field(default_factory=dict)  # name -> dir
    depths: list[int] = field(default_factory=lambda: [64, 192, 768, 2048])
    target: str = "real"
    baseline: str = "syn"
    translated: str | None = "syn2real"
    eps: float = 1e-6


@dataclass
class ClassificationConfig:
    predictions: dict[str, str] = field(default_factory=dict)  # regime -> csv
    baseline: str = "real"
    class_of_interest: str = "deer"


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str = "out"
    workers: int = 1
    crop_side: int = 256
    grayscale_threshold: float = 0.02
    stages: list[str] = field(default_factory=lambda: list(STAGES))
    collections: list[CollectionConfig] = field(default_factory=list)
    color: ColorConfig = field(default_factory=ColorConfig)
    texture: TextureConfig = field(default_factory=TextureConfig)
    fid: FidConfig = field(default_factory=FidConfig)
    classification: ClassificationConfig = field(default_factory=ClassificationConfig)

    def echo(self) -> dict:
        """Plain-dict form of the configuration for embedding in reports."""
        return asdict(self)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if path.suffix == ".toml":
        doc = tomllib.loads(path.read_text())
    elif path.suffix == ".json":
        doc = json.loads(path.read_text())
    else:
        raise ValueError(f"config must be .toml or .json, got {path.name}")
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> RunConfig:
    cfg = RunConfig()
    for key in ("seed", "out_dir", "workers", "crop_side", "grayscale_threshold"):
        if key in doc:
            setattr(cfg, key, doc[key])
    if "stages" in doc:
        unknown = [s for s in doc["stages"] if s not in STAGES]
        if unknown:
            raise ValueError(f"unknown stages {unknown}; valid: {list(STAGES)}")
        cfg.stages = list(doc["stages"])
    collections = doc.get("collections", {})
    if isinstance(collections, dict):
        cfg.collections = [
            CollectionConfig(name=name, **spec) for name, spec in
            sorted(collections.items())
        ]
    else:
        cfg.collections = [CollectionConfig(**spec) for spec in collections]
    if "color" in doc:
        cfg.color = ColorConfig(**doc["color"])
    if "texture" in doc:
        cfg.texture = TextureConfig(**doc["texture"])
    if "fid" in doc:
        cfg.fid = FidConfig(**doc["fid"])
    if "classification" in doc:
        cfg.classification = ClassificationConfig(**doc["classification"])
    return cfg
