"""Accuracy evaluation of retrieval configurations against ground truth.

A configuration is anything that yields a queryable index plus matching
query features: a single model's reduced matrix, or a weighted fusion of
several. Accuracy at k is the percentage of queries whose true original
ranks within the top k; queries themselves are never inserted into the
index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .calibration import rank_originals, top_k_accuracy
from .errors import ValidationError
from .index import RetrievalIndex
from .types import CalibrationSet, FeatureMatrix

DEFAULT_KS = (1, 3, 5, 10)


@dataclass
class AccuracyReport:
    """Named rows of top-k percentages, rendered in insertion order."""

    ks: tuple[int, ...] = DEFAULT_KS
    rows: dict[str, dict[int, float]] = field(default_factory=dict)

    def add(self, name: str, accuracies: dict[int, float]) -> None:
        if tuple(sorted(accuracies)) != tuple(sorted(self.ks)):
            raise ValidationError(f"row {name!r} does not cover ks {self.ks}")
        ordered = sorted(self.ks)
        values = [accuracies[k] for k in ordered]
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValidationError(f"row {name!r} violates top-k monotonicity: {values}")
        if any(not 0.0 <= v <= 100.0 for v in values):
            raise ValidationError(f"row {name!r} has percentages outside [0, 100]")
        self.rows[name] = dict(accuracies)


def evaluate_configuration(
    name: str,
    index: RetrievalIndex,
    query_features: FeatureMatrix,
    truth: CalibrationSet,
    ks: tuple[int, ...] = DEFAULT_KS,
) -> dict[int, float]:
    """Top-k accuracy percentages for one configuration."""
    if not truth.pairs:
        raise ValidationError("truth set is empty")
    if tuple(ks) != tuple(sorted(ks)):
        raise ValidationError(f"ks must be sorted ascending, got {ks}")
    ranks = rank_originals(index, truth, query_features)
    return {k: 100.0 * top_k_accuracy(ranks, k) for k in ks}


def compare_report(report: AccuracyReport) -> str:
    """Deterministic TSV: method column then one 2-decimal column per k."""
    if not report.rows:
        raise ValidationError("report has no rows")
    ordered = sorted(report.ks)
    header = "method\t" + "\t".join(f"top{k}" for k in ordered)
    lines = [header]
    for name, accuracies in report.rows.items():
        lines.append(name + "\t" + "\t".join(f"{accuracies[k]:.2f}" for k in ordered))
    return "\n".join(lines) + "\n"
