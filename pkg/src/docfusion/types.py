"""Core data types: model tags, corpus manifests, feature matrices.

Image ids are plain strings (the file stem of a document image). All
orderings in the package are derived from the bytewise order of the
UTF-8 encoded id, which makes every ranking and every file layout
reproducible regardless of how inputs were enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import AlignmentError, ValidationError

CORPUS_ROLES = ("training", "query", "calibration")


def id_sort_key(image_id: str) -> bytes:
    return image_id.encode("utf-8")


def canonical_order(ids: Iterable[str]) -> tuple[str, ...]:
    """Sort image ids bytewise by their UTF-8 encoding."""
    return tuple(sorted(ids, key=id_sort_key))


@dataclass(frozen=True)
class ModelTag:
    """Identity of one feature extractor: a unique name plus its input crop size."""

    name: str
    crop_size: int

    def __post_init__(self):
        if not self.name:
            raise ValidationError("model name must be non-empty")
        if self.crop_size <= 0:
            raise ValidationError(f"crop_size must be positive, got {self.crop_size}")


@dataclass(frozen=True)
class CorpusManifest:
    """Ordered list of image ids defining the row order of every feature matrix.

    The stored order is always canonical (bytewise by id); use
    :meth:`from_ids` to build one from arbitrarily ordered input.
    """

    images: tuple[str, ...]
    role: str = "training"

    def __post_init__(self):
        if self.role not in CORPUS_ROLES:
            raise ValidationError(f"unknown corpus role {self.role!r}")
        seen = set()
        for image_id in self.images:
            if not image_id:
                raise ValidationError("image id must be non-empty")
            if image_id in seen:
                raise ValidationError(f"duplicate image id {image_id!r}")
            seen.add(image_id)
        if self.images != canonical_order(self.images):
            raise ValidationError("manifest ids are not in canonical (bytewise) order")

    @classmethod
    def from_ids(cls, ids: Iterable[str], role: str = "training") -> "CorpusManifest":
        return cls(images=canonical_order(ids), role=role)

    def __len__(self) -> int:
        return len(self.images)

    def index_of(self, image_id: str) -> int:
        try:
            return self.images.index(image_id)
        except ValueError:
            raise AlignmentError(f"image id {image_id!r} not in manifest") from None


def _as_readonly(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """One extractor's feature vectors: an n-by-d array plus its row ids.

    Row i holds the features of ``ids[i]``. Entries must be finite. The
    array is made read-only so matrices can be shared freely.
    """

    model: ModelTag
    ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise ValidationError(f"feature values must be 2-D, got shape {values.shape}")
        if values.shape[0] != len(self.ids):
            raise ValidationError(
                f"row count {values.shape[0]} does not match id count {len(self.ids)}"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("duplicate image id in feature matrix")
        if values.size and not np.all(np.isfinite(values)):
            raise ValidationError("feature values must be finite (no NaN/Inf)")
        object.__setattr__(self, "values", _as_readonly(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, image_id: str) -> np.ndarray:
        try:
            i = self.ids.index(image_id)
        except ValueError:
            raise AlignmentError(f"image id {image_id!r} not in feature matrix") from None
        return self.values[i]

    def with_values(self, values: np.ndarray, model: ModelTag | None = None) -> "FeatureMatrix":
        return FeatureMatrix(model=model or self.model, ids=self.ids, values=values)


@dataclass(frozen=True)
class CalibrationSet:
    """Held-out (query id, original id) pairs used to score each model."""

    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        seen = set()
        for query_id, original_id in self.pairs:
            if not query_id or not original_id:
                raise ValidationError("calibration ids must be non-empty")
            if query_id in seen:
                raise ValidationError(f"duplicate calibration query id {query_id!r}")
            seen.add(query_id)

    def __len__(self) -> int:
        return len(self.pairs)

    def validate_against(self, training: CorpusManifest, queries: CorpusManifest) -> None:
        """Check that every original is a training image and every query a query image."""
        training_ids = set(training.images)
        query_ids = set(queries.images)
        for query_id, original_id in self.pairs:
            if original_id not in training_ids:
                raise ValidationError(
                    f"calibration original {original_id!r} not in training manifest"
                )
            if query_id not in query_ids:
                raise ValidationError(
                    f"calibration query {query_id!r} not in query manifest"
                )


def align(matrices: Sequence[FeatureMatrix], manifest: CorpusManifest) -> list[FeatureMatrix]:
    """Reorder each matrix's rows to the manifest's canonical order.

    Every matrix must cover every manifest image; extra rows are dropped.
    Matrices already in order are returned unchanged.
    """
    aligned = []
    for matrix in matrices:
        if matrix.ids == manifest.images:
            aligned.append(matrix)
            continue
        position = {image_id: i for i, image_id in enumerate(matrix.ids)}
        rows = []
        for image_id in manifest.images:
            if image_id not in position:
                raise AlignmentError(
                    f"matrix for model {matrix.model.name!r} is missing image {image_id!r}"
                )
            rows.append(position[image_id])
        aligned.append(
            FeatureMatrix(
                model=matrix.model,
                ids=manifest.images,
                values=matrix.values[rows],
            )
        )
    return aligned
