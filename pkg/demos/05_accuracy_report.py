"""Accuracy harness: compare individual extractors against their fusion.

Two synthetic extractors observe the same documents through independent
noise; fusing them averages that noise away. The report below is the same
TSV the command-line `evaluate` stage writes.
"""

import numpy as np

from docfusion import (
    AccuracyReport,
    CalibrationSet,
    FeatureMatrix,
    ModelTag,
    build_index,
    coefficients,
    compare_report,
    evaluate_configuration,
    fit,
    fuse,
    l2_normalize,
    project,
    rank_originals,
    rank_score,
)

rng = np.random.default_rng(1)
n_corpus, n_queries, dim, noise = 120, 100, 128, 1.5

corpus_ids = tuple(f"doc{i:04d}" for i in range(n_corpus))
query_ids = tuple(f"qry{i:04d}" for i in range(n_queries))
originals = {q: corpus_ids[i % n_corpus] for i, q in enumerate(query_ids)}

# hidden truth with a decaying spectrum: documents share dominant directions
scale = np.arange(1, dim + 1, dtype=float) ** -0.75
truth = {}
for cid in corpus_ids:
    t = scale * rng.normal(size=dim)
    truth[cid] = t / np.linalg.norm(t)

sigma = noise / np.sqrt(dim)
reduced_corpus, reduced_queries, scores = {}, {}, {}
for name in ("model-a", "model-b"):
    tag = ModelTag(name=name, crop_size=256)
    corpus = FeatureMatrix(
        model=tag, ids=corpus_ids,
        values=np.stack([truth[c] + sigma * rng.normal(size=dim) for c in corpus_ids]),
    )
    queries = FeatureMatrix(
        model=tag, ids=query_ids,
        values=np.stack([truth[originals[q]] + sigma * rng.normal(size=dim) for q in query_ids]),
    )
    pca = fit(corpus, target_dim=64)
    reduced_corpus[name] = l2_normalize(project(pca, corpus))
    reduced_queries[name] = l2_normalize(project(pca, queries))

pairs = CalibrationSet(pairs=tuple((q, originals[q]) for q in query_ids))
report = AccuracyReport()
for name in sorted(reduced_corpus):
    index = build_index(reduced_corpus[name])
    scores[name] = rank_score(rank_originals(index, pairs, reduced_queries[name]))
    report.add(name, evaluate_configuration(name, index, reduced_queries[name], pairs))

weights = coefficients(scores)
order = sorted(reduced_corpus)
fused_corpus = fuse([reduced_corpus[n] for n in order], weights)
fused_queries = fuse([reduced_queries[n] for n in order], weights)
fused = evaluate_configuration(
    "fused", build_index(fused_corpus.matrix), fused_queries.matrix, pairs
)
report.add("fused", fused)

print("fusion weights:", {k: round(v, 3) for k, v in weights.weights.items()})
print()
print(compare_report(report))
best_alone = max(report.rows[name][5] for name in order)
print(f"top-5: best individual {best_alone:.2f}%, fused {fused[5]:.2f}%")
