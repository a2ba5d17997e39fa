"""Preprocessing and pluggable feature-extraction backends.

Three backends produce one feature matrix per extractor model:

* ``SyntheticBackend`` derives vectors from a stable hash of
  (image id, model name, seed) so tests and demos need no image files.
  A perturbation table can pin a query id to a configured cosine
  similarity against a base id's vector, standing in for edited copies
  of a document.
* ``FileBackend`` serves rows straight from an interchange feature file.
* ``NeuralBackend`` (optional) runs a TorchScript module over an image
  directory; it imports torch lazily so the core package stays light.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import IngestionError, ValidationError
from .types import CorpusManifest, FeatureMatrix, ModelTag

RESIZE_POLICY = "shorter-side-then-center-crop"


@dataclass(frozen=True)
class PreprocessSpec:
    """How raw rasters become fixed-size network inputs."""

    crop_size: int
    grayscale: bool = True
    resize_policy: str = RESIZE_POLICY

    def __post_init__(self):
        if self.crop_size <= 0:
            raise ValidationError(f"crop_size must be positive, got {self.crop_size}")
        if self.resize_policy != RESIZE_POLICY:
            raise ValidationError(f"unknown resize policy {self.resize_policy!r}")


def preprocess(image: np.ndarray, spec: PreprocessSpec) -> np.ndarray:
    """Resize the shorter side to crop_size, then take the center crop.

    Accepts H-by-W or H-by-W-by-C uint8/float rasters and returns a
    crop_size-square array, single-channel when grayscale is requested.
    """
    from PIL import Image

    image = np.asarray(image)
    if image.ndim not in (2, 3) or 0 in image.shape[:2]:
        raise IngestionError(f"cannot preprocess raster of shape {image.shape}")
    pil = Image.fromarray(image if image.dtype == np.uint8 else image.astype(np.uint8))
    if spec.grayscale and pil.mode != "L":
        pil = pil.convert("L")
    w, h = pil.size
    short = min(w, h)
    if short != spec.crop_size:
        scale = spec.crop_size / short
        if w <= h:
            new_size = (spec.crop_size, max(1, round(h * scale)))
        else:
            new_size = (max(1, round(w * scale)), spec.crop_size)
        pil = pil.resize(new_size, Image.BILINEAR)
    w, h = pil.size
    left = (w - spec.crop_size) // 2
    top = (h - spec.crop_size) // 2
    pil = pil.crop((left, top, left + spec.crop_size, top + spec.crop_size))
    return np.asarray(pil)


def _stable_rng(*parts: str | int) -> np.random.Generator:
    digest = hashlib.blake2b(
        "\x1f".join(str(p) for p in parts).encode("utf-8"), digest_size=16
    ).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def synthetic_features(image_id: str, model: ModelTag, dim: int, seed: int) -> np.ndarray:
    """Deterministic pseudo-random feature vector in [-1, 1]."""
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    rng = _stable_rng("base", image_id, model.name, dim, seed)
    return rng.uniform(-1.0, 1.0, dim)


def perturbed_features(
    image_id: str,
    base_id: str,
    target_cosine: float,
    model: ModelTag,
    dim: int,
    seed: int,
) -> np.ndarray:
    """A vector at the requested cosine similarity to base_id's vector.

    target_cosine 1.0 returns the base vector bit-for-bit (an unedited
    copy); smaller values mix in a deterministic orthogonal direction of
    the same magnitude, so the measured cosine equals the target up to
    rounding.
    """
    if not -1.0 <= target_cosine <= 1.0:
        raise ValidationError(f"target cosine must be in [-1, 1], got {target_cosine}")
    base = synthetic_features(base_id, model, dim, seed)
    if target_cosine == 1.0:
        return base
    rng = _stable_rng("orth", image_id, base_id, model.name, dim, seed)
    direction = rng.uniform(-1.0, 1.0, dim)
    base_norm = float(np.linalg.norm(base))
    base_unit = base / base_norm
    direction -= (direction @ base_unit) * base_unit
    direction_norm = float(np.linalg.norm(direction))
    if direction_norm == 0.0:
        raise ValidationError("degenerate orthogonal direction; use dim >= 2")
    orth_unit = direction / direction_norm
    mix = target_cosine * base_unit + np.sqrt(1.0 - target_cosine**2) * orth_unit
    return base_norm * mix


@dataclass(frozen=True)
class SyntheticBackend:
    """Hash-seeded feature source; no images required.

    ``perturbations`` maps a query id to (base id, target cosine) so that
    query features simulate edited versions of corpus images.
    """

    dim: int
    seed: int
    perturbations: Mapping[str, tuple[str, float]] = field(default_factory=dict)

    def vector(self, image_id: str, model: ModelTag) -> np.ndarray:
        if image_id in self.perturbations:
            base_id, target_cosine = self.perturbations[image_id]
            return perturbed_features(image_id, base_id, target_cosine, model, self.dim, self.seed)
        return synthetic_features(image_id, model, self.dim, self.seed)


@dataclass(frozen=True)
class FileBackend:
    """Serves rows of an existing interchange feature file."""

    path: str

    def _matrix(self) -> FeatureMatrix:
        from .io import read_feature_file

        try:
            with open(self.path, "rb") as fh:
                matrix, _ = read_feature_file(fh)
        except OSError as exc:
            raise IngestionError(f"cannot read feature file {self.path!r}: {exc}") from exc
        return matrix

    @property
    def dim(self) -> int:
        return self._load_cached().dim

    def vector(self, image_id: str, model: ModelTag) -> np.ndarray:
        matrix = self._load_cached()
        try:
            return matrix.row(image_id)
        except Exception:
            raise IngestionError(
                f"feature file {self.path!r} has no row for image {image_id!r}"
            ) from None

    def _load_cached(self) -> FeatureMatrix:
        cached = getattr(self, "_cache", None)
        if cached is None:
            cached = self._matrix()
            object.__setattr__(self, "_cache", cached)
        return cached


@dataclass(frozen=True)
class NeuralBackend:
    """Runs a TorchScript module over <images_dir>/<id>.<ext> rasters.

    Preprocessing follows the spec'd resize-then-center-crop policy, scales
    to [0, 1] and subtracts the per-channel mean before inference. Requires
    torch at call time; the import is deliberately lazy.
    """

    model_path: str
    images_dir: str
    spec: PreprocessSpec
    channel_mean: tuple[float, ...] = (0.5,)

    _EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")

    def _image_path(self, image_id: str) -> Path:
        base = Path(self.images_dir)
        for ext in self._EXTENSIONS:
            candidate = base / f"{image_id}{ext}"
            if candidate.exists():
                return candidate
        raise IngestionError(f"no image file for id {image_id!r} under {self.images_dir!r}")

    def vector(self, image_id: str, model: ModelTag) -> np.ndarray:
        try:
            import torch
        except ImportError as exc:
            raise IngestionError(
                "the neural backend requires torch; install it or use another backend"
            ) from exc
        from PIL import Image

        path = self._image_path(image_id)
        try:
            raster = np.asarray(Image.open(path))
        except Exception as exc:
            raise IngestionError(f"cannot decode image {path}: {exc}") from exc
        pixels = preprocess(raster, self.spec).astype(np.float32) / 255.0
        if pixels.ndim == 2:
            pixels = pixels[None, :, :]
        else:
            pixels = pixels.transpose(2, 0, 1)
        mean = np.asarray(self.channel_mean, dtype=np.float32).reshape(-1, 1, 1)
        pixels = pixels - mean
        module = self._load_module(torch)
        with torch.no_grad():
            out = module(torch.from_numpy(pixels[None]))
        return out.numpy().reshape(-1).astype(np.float64)

    def _load_module(self, torch):
        cached = getattr(self, "_module", None)
        if cached is None:
            try:
                cached = torch.jit.load(self.model_path, map_location="cpu")
            except Exception as exc:
                raise IngestionError(
                    f"cannot load TorchScript model {self.model_path!r}: {exc}"
                ) from exc
            cached.eval()
            object.__setattr__(self, "_module", cached)
        return cached


Backend = SyntheticBackend | FileBackend | NeuralBackend


def extract(backend: Backend, manifest: CorpusManifest, model: ModelTag) -> FeatureMatrix:
    """One feature row per manifest image, in manifest order."""
    rows = []
    dim = getattr(backend, "dim", None)
    for image_id in manifest.images:
        vector = np.asarray(backend.vector(image_id, model), dtype=np.float64)
        if vector.ndim != 1:
            raise ValidationError(f"backend returned non-vector features for {image_id!r}")
        if dim is None:
            dim = vector.shape[0]
        elif vector.shape[0] != dim:
            raise ValidationError(
                f"backend dim changed from {dim} to {vector.shape[0]} at image {image_id!r}"
            )
        rows.append(vector)
    values = np.stack(rows) if rows else np.zeros((0, dim or 0))
    return FeatureMatrix(model=model, ids=manifest.images, values=values)
