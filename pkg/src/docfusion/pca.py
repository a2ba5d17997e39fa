"""Per-model PCA reduction of feature matrices to a common target dimension.

The covariance of the (optionally mean-centered) feature rows is
eigendecomposed and the top-k eigenvectors form an orthonormal projection
basis. Each extractor gets its own fitted model so that matrices from
different extractors end up in spaces of identical dimension before fusion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .types import FeatureMatrix

DEFAULT_TARGET_DIM = 256

ORTHONORMALITY_TOL = 1e-9


@dataclass(frozen=True)
class PcaModel:
    """Fitted reduction: mean vector, orthonormal basis rows, eigenvalues.

    ``basis`` is k-by-d with mutually orthonormal rows sorted by descending
    eigenvalue; ``target_dim`` is the retained k, which may be smaller than
    the requested dimension when the fit sample is small.
    """

    mean: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    source_dim: int
    target_dim: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        basis = np.asarray(self.basis, dtype=np.float64)
        eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if basis.ndim != 2 or basis.shape != (self.target_dim, self.source_dim):
            raise ValidationError(
                f"basis shape {basis.shape} does not match "
                f"(target_dim, source_dim)=({self.target_dim}, {self.source_dim})"
            )
        if mean.shape != (self.source_dim,):
            raise ValidationError(f"mean has shape {mean.shape}, expected ({self.source_dim},)")
        if eigenvalues.shape != (self.target_dim,):
            raise ValidationError("one eigenvalue per basis row required")
        gram = basis @ basis.T
        if np.max(np.abs(gram - np.eye(self.target_dim))) > ORTHONORMALITY_TOL:
            raise ValidationError("basis rows are not orthonormal within 1e-9")
        if np.any(eigenvalues < 0):
            raise ValidationError("eigenvalues must be non-negative (clamped)")
        if np.any(np.diff(eigenvalues) > 0):
            raise ValidationError("eigenvalues must be sorted descending")
        for name, value in (("mean", mean), ("basis", basis), ("eigenvalues", eigenvalues)):
            if not np.all(np.isfinite(value)):
                raise ValidationError(f"{name} contains non-finite entries")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "basis", _readonly(basis))
        object.__setattr__(self, "eigenvalues", _readonly(eigenvalues))


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a)
    out.setflags(write=False)
    return out


def covariance(matrix: FeatureMatrix, centered: bool = True) -> np.ndarray:
    """Covariance C = (1/n) sum_i x_i x_i^T of the rows, symmetrized exactly.

    ``centered`` subtracts the row mean first (the default, and what
    :func:`fit` uses).
    """
    if matrix.n < 1:
        raise ValidationError("covariance requires at least one row")
    x = matrix.values.astype(np.float64, copy=True)
    if centered:
        x -= x.mean(axis=0)
    c = (x.T @ x) / matrix.n
    return (c + c.T) / 2.0


def fit(matrix: FeatureMatrix, target_dim: int = DEFAULT_TARGET_DIM) -> PcaModel:
    """Fit a PcaModel on the matrix, keeping k = min(target_dim, d, n-1) components.

    The sign of each eigenvector is fixed so its largest-magnitude entry
    (lowest index on ties) is positive, which makes fits reproducible
    byte-for-byte on identical input.
    """
    if target_dim < 1:
        raise ValidationError(f"target_dim must be >= 1, got {target_dim}")
    n, d = matrix.n, matrix.dim
    if n < 2:
        raise ValidationError(f"PCA fit requires at least 2 rows, got {n}")
    k = min(target_dim, d, n - 1)
    if k < target_dim:
        warnings.warn(
            f"reducing to {k} dimensions instead of {target_dim}: "
            f"limited by n={n}, d={d}",
            stacklevel=2,
        )

    x = matrix.values.astype(np.float64)
    mean = x.mean(axis=0)
    c = covariance(matrix, centered=True)
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(c)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    # eigh returns ascending order; keep the top-k, descending.
    order = np.argsort(eigenvalues)[::-1][:k]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    basis = eigenvectors[:, order].T.copy()
    for i in range(k):
        pivot = int(np.argmax(np.abs(basis[i])))
        if basis[i, pivot] < 0:
            basis[i] = -basis[i]
    return PcaModel(
        mean=mean,
        basis=basis,
        eigenvalues=eigenvalues,
        source_dim=d,
        target_dim=k,
    )


def project(model: PcaModel, matrix: FeatureMatrix) -> FeatureMatrix:
    """Project rows onto the basis: row i -> basis @ (row i - mean)."""
    if matrix.dim != model.source_dim:
        raise ValidationError(
            f"matrix dim {matrix.dim} does not match PCA source dim {model.source_dim}"
        )
    x = matrix.values.astype(np.float64)
    projected = (x - model.mean) @ model.basis.T
    return matrix.with_values(projected)


def l2_normalize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Scale each row to unit L2 norm; zero rows are rejected by id."""
    norms = np.linalg.norm(matrix.values.astype(np.float64), axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValidationError(
            f"cannot normalize zero-norm row for image {matrix.ids[int(zero[0])]!r}"
        )
    return matrix.with_values(matrix.values.astype(np.float64) / norms[:, None])
