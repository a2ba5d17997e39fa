"""Per-model quality scoring on a held-out calibration set.

Each model retrieves every calibration query against the full training
corpus; the 1-based rank of the query's true original feeds a reciprocal
rank sum scaled by the model's top-5 accuracy. Normalizing those scores
across models yields the fusion weights, which sum to 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import math

from .errors import ValidationError
from .index import RetrievalIndex, query
from .types import CalibrationSet, FeatureMatrix

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class FusionWeights:
    """Raw per-model scores and their sum-to-one normalized weights."""

    scores: Mapping[str, float]
    weights: Mapping[str, float]

    def __post_init__(self):
        if set(self.scores) != set(self.weights):
            raise ValidationError("scores and weights must cover the same models")
        if not self.weights:
            raise ValidationError("at least one model required")
        total = math.fsum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"weights sum to {total!r}, expected 1")

    def subset(self, names: tuple[str, ...]) -> "FusionWeights":
        """Re-normalize over a subset of models (e.g. a named preset)."""
        missing = [n for n in names if n not in self.scores]
        if missing:
            raise ValidationError(f"no calibrated weights for models {missing}")
        return coefficients({n: self.scores[n] for n in names})


def rank_originals(
    index: RetrievalIndex,
    calibration: CalibrationSet,
    query_features: FeatureMatrix,
) -> dict[str, int]:
    """1-based rank of each pair's original in the query's full corpus ranking."""
    corpus_ids = set(index.ids)
    ranks: dict[str, int] = {}
    for query_id, original_id in calibration.pairs:
        if original_id not in corpus_ids:
            raise ValidationError(f"original {original_id!r} is not in the index")
        hits = query(index, query_features.row(query_id), k=len(index))
        for hit in hits:
            if hit.id == original_id:
                ranks[query_id] = hit.rank
                break
    return ranks


def top_k_accuracy(ranks: Mapping[str, int], k: int) -> float:
    """Fraction of queries whose original ranked within the top k."""
    if not ranks:
        raise ValidationError("no ranks to score")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    return sum(1 for r in ranks.values() if r <= k) / len(ranks)


def rank_score(ranks: Mapping[str, int]) -> float:
    """Top-5 accuracy times the sum of reciprocal ranks.

    The accuracy factor is a single per-model constant, so a model that
    never ranks an original within the top 5 scores exactly zero.
    """
    if not ranks:
        raise ValidationError("no ranks to score")
    accuracy = top_k_accuracy(ranks, 5)
    return accuracy * math.fsum(1.0 / r for r in ranks.values())


def coefficients(scores: Mapping[str, float]) -> FusionWeights:
    """Divide each score by the total so weights sum to 1.

    All-zero scores fall back to uniform weights rather than erroring; a
    degenerate calibration set should not take down the pipeline.
    """
    if not scores:
        raise ValidationError("at least one model required")
    for name, value in scores.items():
        if not math.isfinite(value) or value < 0:
            raise ValidationError(f"score for {name!r} must be finite and >= 0, got {value!r}")
    clean = {name: float(value) for name, value in scores.items()}
    total = math.fsum(clean.values())
    if total == 0.0:
        weights = {name: 1.0 / len(clean) for name in clean}
    else:
        weights = {name: value / total for name, value in clean.items()}
    return FusionWeights(scores=clean, weights=weights)
