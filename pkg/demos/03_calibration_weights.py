"""Calibration: score extractors on held-out pairs and derive fusion weights.

Each model ranks every calibration query's true original against the full
corpus. Reciprocal ranks, scaled by top-5 accuracy, become the model's
score; scores normalized across models are the fusion weights.
"""

import numpy as np

from docfusion import (
    CalibrationSet,
    FeatureMatrix,
    ModelTag,
    build_index,
    coefficients,
    rank_originals,
    rank_score,
    top_k_accuracy,
)

rng = np.random.default_rng(23)
n, dim = 80, 32

corpus_ids = tuple(f"doc{i:03d}" for i in range(n))
truth = {cid: rng.normal(size=dim) for cid in corpus_ids}
query_ids = tuple(f"query{i:02d}" for i in range(20))
pairs = CalibrationSet(pairs=tuple((q, corpus_ids[i * 4]) for i, q in enumerate(query_ids)))
originals = dict(pairs.pairs)

# a sharp model (mild noise) and a blurry one (heavy noise)
noise_level = {"sharp": 0.4, "blurry": 2.5}
scores = {}
for name, noise in noise_level.items():
    tag = ModelTag(name=name, crop_size=256)
    corpus = FeatureMatrix(
        model=tag, ids=corpus_ids,
        values=np.stack([truth[c] + noise * rng.normal(size=dim) for c in corpus_ids]),
    )
    queries = FeatureMatrix(
        model=tag, ids=query_ids,
        values=np.stack([truth[originals[q]] + noise * rng.normal(size=dim) for q in query_ids]),
    )
    ranks = rank_originals(build_index(corpus), pairs, queries)
    scores[name] = rank_score(ranks)
    print(
        f"{name:>6}: top-5 accuracy {top_k_accuracy(ranks, 5):5.1%}, "
        f"rank score {scores[name]:7.3f}, sample ranks {sorted(ranks.values())[:8]}"
    )

weights = coefficients(scores)
print("\nfusion weights (sum to 1):")
for name, weight in sorted(weights.weights.items()):
    print(f"  {name:>6}: {weight:.4f}")
