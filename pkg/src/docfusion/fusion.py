"""Weighted-average fusion of per-model reduced feature matrices.

Inputs are expected to be the L2-normalized PCA projections, all in the
same dimension and row order. The sum runs in sorted model-name order so
the result is byte-deterministic no matter how callers order the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calibration import FusionWeights
from .errors import ValidationError
from .types import FeatureMatrix, ModelTag

WEIGHT_SUM_GATE = 1e-9


@dataclass(frozen=True)
class FusedMatrix:
    """The fused matrix plus the weights that produced it, for provenance."""

    matrix: FeatureMatrix
    weights: FusionWeights


def fused_model_name(weights: FusionWeights) -> str:
    parts = [
        f"{float(weights.weights[name])!r}*{name}"
        for name in sorted(weights.weights, key=lambda s: s.encode("utf-8"))
    ]
    return "fused(" + "+".join(parts) + ")"


def fuse(matrices: Sequence[FeatureMatrix], weights: FusionWeights) -> FusedMatrix:
    """Row i of the output is sum_m weight_m * (row i of matrix m)."""
    if not matrices:
        raise ValidationError("fusion requires at least one matrix")
    by_name = {}
    for matrix in matrices:
        if matrix.model.name in by_name:
            raise ValidationError(f"duplicate model {matrix.model.name!r} in fusion inputs")
        by_name[matrix.model.name] = matrix
    if set(by_name) != set(weights.weights):
        raise ValidationError(
            f"model set mismatch: matrices {sorted(by_name)} vs weights "
            f"{sorted(weights.weights)}"
        )
    first = matrices[0]
    for matrix in matrices[1:]:
        if matrix.dim != first.dim:
            raise ValidationError(
                f"dim mismatch: {matrix.model.name} has {matrix.dim}, expected {first.dim}"
            )
        if matrix.ids != first.ids:
            raise ValidationError(
                f"row alignment mismatch between {first.model.name} and {matrix.model.name}"
            )
    total = sum(weights.weights.values())
    if abs(total - 1.0) > WEIGHT_SUM_GATE:
        raise ValidationError(f"fusion weights sum to {total!r}, expected 1")

    out = np.zeros((first.n, first.dim), dtype=np.float64)
    for name in sorted(by_name, key=lambda s: s.encode("utf-8")):
        out += weights.weights[name] * by_name[name].values.astype(np.float64)
    tag = ModelTag(
        name=fused_model_name(weights),
        crop_size=max(m.model.crop_size for m in matrices),
    )
    return FusedMatrix(
        matrix=FeatureMatrix(model=tag, ids=first.ids, values=out),
        weights=weights,
    )
