"""Declarative pipeline configuration (JSON) and named fusion presets.

A config file lists the extractor models with their backends plus the
knobs shared by every stage:

    {
      "target_dim": 256,
      "normalize": true,
      "models": [
        {"name": "alexnet", "crop_size": 256,
         "backend": {"kind": "synthetic", "dim": 300, "seed": 7}},
        {"name": "vggnet-d", "crop_size": 256,
         "backend": {"kind": "file", "path": "features/vggnet-d.fcbf"}}
      ]
    }

Synthetic backends accept an optional "perturbations" table mapping a
query id to {"base": <corpus id>, "cosine": <target>}. Neural backends
take "model_path", "images_dir", optional "grayscale" and "channel_mean".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .errors import ValidationError
from .extraction import Backend, FileBackend, NeuralBackend, PreprocessSpec, SyntheticBackend
from .pca import DEFAULT_TARGET_DIM
from .types import ModelTag

# Named model subsets; any other model set is equally valid, these are
# config sugar for the commonly compared fusion combinations.
PRESETS: dict[str, tuple[str, ...]] = {
    "mmf-1": ("alexnet", "vggnet-e"),
    "mmf-2": ("alexnet", "vggnet-d", "vggnet-e"),
    "mmf-3": ("alexnet", "googlenet"),
    "mmf-4": ("alexnet", "resnet-152"),
    "mmf": ("vggnet-d", "vggnet-e", "googlenet"),
}


@dataclass(frozen=True)
class ModelConfig:
    tag: ModelTag
    backend: Backend


@dataclass(frozen=True)
class PipelineConfig:
    models: tuple[ModelConfig, ...]
    target_dim: int = DEFAULT_TARGET_DIM
    normalize: bool = True
    calibration_path: str | None = None
    preset: str | None = None

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValidationError(f"target_dim must be >= 1, got {self.target_dim}")
        names = [m.tag.name for m in self.models]
        if len(set(names)) != len(names):
            raise ValidationError("model names must be unique")
        if not self.models:
            raise ValidationError("config must declare at least one model")
        if self.preset is not None:
            self.preset_models(self.preset)

    def model_names(self) -> tuple[str, ...]:
        return tuple(m.tag.name for m in self.models)

    def preset_models(self, preset: str) -> tuple[str, ...]:
        """Resolve a preset to model names, requiring all of them configured."""
        if preset not in PRESETS:
            raise ValidationError(
                f"unknown preset {preset!r}; known: {', '.join(sorted(PRESETS))}"
            )
        names = PRESETS[preset]
        missing = [n for n in names if n not in self.model_names()]
        if missing:
            raise ValidationError(f"preset {preset!r} needs unconfigured models: {missing}")
        return names


def _build_backend(raw: dict[str, Any], crop_size: int, seed_override: int | None) -> Backend:
    kind = raw.get("kind")
    if kind == "synthetic":
        perturbations = {}
        for query_id, entry in raw.get("perturbations", {}).items():
            perturbations[query_id] = (entry["base"], float(entry["cosine"]))
        return SyntheticBackend(
            dim=int(raw["dim"]),
            seed=int(raw["seed"]) if seed_override is None else seed_override,
            perturbations=perturbations,
        )
    if kind == "file":
        return FileBackend(path=str(raw["path"]))
    if kind == "neural":
        return NeuralBackend(
            model_path=str(raw["model_path"]),
            images_dir=str(raw["images_dir"]),
            spec=PreprocessSpec(
                crop_size=crop_size,
                grayscale=bool(raw.get("grayscale", True)),
            ),
            channel_mean=tuple(raw.get("channel_mean", (0.5,))),
        )
    raise ValidationError(f"unknown backend kind {kind!r}")


def load_config(path: str, seed_override: int | None = None) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path!r} is not valid JSON: {exc}") from exc
    try:
        models = []
        for entry in raw["models"]:
            tag = ModelTag(name=str(entry["name"]), crop_size=int(entry["crop_size"]))
            models.append(
                ModelConfig(tag=tag, backend=_build_backend(entry["backend"], tag.crop_size, seed_override))
            )
        return PipelineConfig(
            models=tuple(models),
            target_dim=int(raw.get("target_dim", DEFAULT_TARGET_DIM)),
            normalize=bool(raw.get("normalize", True)),
            calibration_path=raw.get("calibration"),
            preset=raw.get("preset"),
        )
    except KeyError as exc:
        raise ValidationError(f"config {path!r} is missing required key {exc}") from exc
