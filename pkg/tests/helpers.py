"""Independent oracles and scenario builders shared by the test suite.

The eigensolver and cosine ranking here deliberately avoid the library's
own code paths (and numpy's linalg eigensolvers) so they can serve as
ground truth.
"""

from __future__ import annotations

import math

import numpy as np

from docfusion import (
    CalibrationSet,
    FeatureMatrix,
    ModelTag,
    build_index,
    coefficients,
    evaluate_configuration,
    fit,
    fuse,
    l2_normalize,
    project,
    rank_originals,
    rank_score,
)


# -- brute-force symmetric eigensolver (cyclic Jacobi) ---------------------


def jacobi_eigh(matrix: np.ndarray, sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvector rows of a symmetric matrix.

    Classic cyclic Jacobi rotations; element-wise arithmetic only, no
    calls into numpy.linalg.
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = math.sqrt(
            math.fsum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j)
        )
        if off < 1e-30:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                if abs(theta) > 1e150:  # theta**2 would overflow; limit is t ~ 1/(2 theta)
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues)[::-1]
    return eigenvalues[order], v[:, order].T


def brute_covariance(rows: np.ndarray, centered: bool = True) -> np.ndarray:
    """Eq-by-eq covariance: element sums over outer products."""
    rows = np.asarray(rows, dtype=np.float64)
    n, d = rows.shape
    if centered:
        mean = np.array([math.fsum(rows[:, j]) / n for j in range(d)])
        rows = rows - mean
    c = np.zeros((d, d))
    for i in range(n):
        c += np.outer(rows[i], rows[i])
    return c / n


def max_principal_angle(basis_a: np.ndarray, basis_b: np.ndarray) -> float:
    """Largest principal angle (radians) between two orthonormal row spans."""
    overlap = np.asarray(basis_a) @ np.asarray(basis_b).T
    singular = np.linalg.svd(overlap, compute_uv=False)
    return float(np.arccos(np.clip(singular.min(), -1.0, 1.0)))


# -- brute-force cosine ranking --------------------------------------------


def brute_cosine(u, v) -> float:
    num = math.fsum(float(a) * float(b) for a, b in zip(u, v))
    nu = math.sqrt(math.fsum(float(a) ** 2 for a in u))
    nv = math.sqrt(math.fsum(float(b) ** 2 for b in v))
    return max(-1.0, min(1.0, num / (nu * nv)))


def brute_ranking(values: np.ndarray, ids: tuple[str, ...], q: np.ndarray):
    """Full (id, similarity) ranking by descending cosine, id tie-break."""
    sims = [(ids[i], brute_cosine(values[i], q)) for i in range(len(ids))]
    return sorted(sims, key=lambda pair: (-pair[1], pair[0].encode("utf-8")))


# -- synthetic retrieval scenarios ------------------------------------------


def truth_plus_noise_scenario(
    seed: int,
    model_noise: dict[str, float],
    n_corpus: int = 120,
    n_queries: int = 100,
    dim: int = 128,
    spectrum_decay: float = 0.75,
    independent_models: tuple[str, ...] = (),
):
    """Corpus/query features per model around shared ground-truth directions.

    Every image has a hidden unit truth vector drawn with a decaying
    coordinate spectrum (documents share dominant directions, so each
    model's PCA recovers a comparable basis). Each model sees truth plus
    its own Gaussian noise; ``noise`` is the total noise norm relative to
    the unit signal. Models named in ``independent_models`` get features
    unrelated to the truth, i.e. pure noise.
    """
    rng = np.random.default_rng(seed)
    corpus_ids = tuple(f"doc{i:04d}" for i in range(n_corpus))
    query_ids = tuple(f"qry{i:04d}" for i in range(n_queries))
    originals = {qid: corpus_ids[i % n_corpus] for i, qid in enumerate(query_ids)}
    scale = np.arange(1, dim + 1, dtype=np.float64) ** (-spectrum_decay)
    truth = {}
    for cid in corpus_ids:
        t = scale * rng.normal(size=dim)
        truth[cid] = t / np.linalg.norm(t)

    per_model_corpus = {}
    per_model_queries = {}
    sigma = {name: noise / np.sqrt(dim) for name, noise in model_noise.items()}
    for name in model_noise:
        tag = ModelTag(name=name, crop_size=256)
        if name in independent_models:
            corpus_rows = rng.normal(size=(n_corpus, dim))
            query_rows = rng.normal(size=(n_queries, dim))
        else:
            corpus_rows = np.stack(
                [truth[cid] + sigma[name] * rng.normal(size=dim) for cid in corpus_ids]
            )
            query_rows = np.stack(
                [truth[originals[qid]] + sigma[name] * rng.normal(size=dim) for qid in query_ids]
            )
        per_model_corpus[name] = FeatureMatrix(model=tag, ids=corpus_ids, values=corpus_rows)
        per_model_queries[name] = FeatureMatrix(model=tag, ids=query_ids, values=query_rows)

    truth_pairs = CalibrationSet(pairs=tuple((qid, originals[qid]) for qid in query_ids))
    return per_model_corpus, per_model_queries, truth_pairs


def run_fusion_pipeline(per_model_corpus, per_model_queries, truth_pairs, target_dim=24):
    """Reduce, calibrate, fuse, evaluate; returns per-model and fused results."""
    reduced_corpus = {}
    reduced_queries = {}
    for name, corpus in per_model_corpus.items():
        pca_model = fit(corpus, target_dim)
        reduced_corpus[name] = l2_normalize(project(pca_model, corpus))
        reduced_queries[name] = l2_normalize(project(pca_model, per_model_queries[name]))

    scores = {}
    per_model_accuracy = {}
    for name in reduced_corpus:
        index = build_index(reduced_corpus[name])
        ranks = rank_originals(index, truth_pairs, reduced_queries[name])
        scores[name] = rank_score(ranks)
        per_model_accuracy[name] = evaluate_configuration(
            name, index, reduced_queries[name], truth_pairs
        )

    weights = coefficients(scores)
    names = sorted(reduced_corpus)
    fused_corpus = fuse([reduced_corpus[n] for n in names], weights)
    fused_queries = fuse([reduced_queries[n] for n in names], weights)
    fused_accuracy = evaluate_configuration(
        "fused", build_index(fused_corpus.matrix), fused_queries.matrix, truth_pairs
    )
    return per_model_accuracy, fused_accuracy, weights
