"""Cosine-similarity retrieval index over a feature matrix.

Scoring is exact brute force (one dot product per corpus row), which for
corpora of a few thousand images is both fast enough and unambiguous.
Ties are broken by bytewise image-id order so every ranking is total and
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .types import FeatureMatrix, id_sort_key


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("cosine is undefined for zero-norm vectors")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class RankedHit:
    id: str
    similarity: float
    rank: int


@dataclass(frozen=True, eq=False)
class RetrievalIndex:
    """Immutable queryable snapshot: features, ids, precomputed row norms."""

    values: np.ndarray = field(repr=False)
    ids: tuple[str, ...]
    norms: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values)
        norms = np.ascontiguousarray(np.asarray(self.norms, dtype=np.float64))
        if values.ndim != 2 or values.shape[0] != len(self.ids):
            raise ValidationError("index features must be n-by-K with one id per row")
        if norms.shape != (values.shape[0],):
            raise ValidationError("one norm per row required")
        values.setflags(write=False)
        norms.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "norms", norms)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def build_index(matrix: FeatureMatrix) -> RetrievalIndex:
    """Precompute row norms and freeze the matrix into a RetrievalIndex."""
    if matrix.n < 1:
        raise ValidationError("cannot index an empty matrix")
    norms = np.linalg.norm(matrix.values.astype(np.float64), axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValidationError(
            f"zero-norm feature row for image {matrix.ids[int(zero[0])]!r}"
        )
    return RetrievalIndex(values=matrix.values, ids=matrix.ids, norms=norms)


def query(index: RetrievalIndex, q: np.ndarray, k: int) -> list[RankedHit]:
    """Top min(k, n) corpus rows by cosine similarity to the query vector.

    With k = len(index) this returns the full ranking. Equal similarities
    are ordered by bytewise image id.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != index.dim:
        raise ValidationError(
            f"query dim {q.shape} does not match index dim {index.dim}"
        )
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise ValidationError("query vector has zero norm")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    sims = np.clip((index.values.astype(np.float64) @ q) / (index.norms * qnorm), -1.0, 1.0)
    order = sorted(range(len(index)), key=lambda i: (-sims[i], id_sort_key(index.ids[i])))
    return [
        RankedHit(id=index.ids[i], similarity=float(sims[i]), rank=pos + 1)
        for pos, i in enumerate(order[: min(k, len(index))])
    ]


def hits_as_tsv(hits: list[RankedHit]) -> str:
    """Render query hits as the documented TSV: rank, id, similarity (9 dp)."""
    lines = [f"{h.rank}\t{h.id}\t{h.similarity:.9f}" for h in hits]
    return "\n".join(lines) + ("\n" if lines else "")
