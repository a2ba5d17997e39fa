"""End-to-end retrieval: extract, reduce, weight, fuse, and query.

Runs the whole pipeline in memory on synthetic extractors. The query
images are simulated edits of corpus documents (fixed cosine similarity
to their originals), and the fused index is asked for their sources.
"""

from docfusion import (
    CalibrationSet,
    CorpusManifest,
    ModelTag,
    SyntheticBackend,
    build_index,
    coefficients,
    extract,
    fit,
    fuse,
    l2_normalize,
    project,
    query,
    rank_originals,
    rank_score,
)

corpus = CorpusManifest.from_ids([f"paper{i:03d}" for i in range(150)])
queries = CorpusManifest.from_ids([f"edit{i:02d}" for i in range(10)], role="query")
pairs = CalibrationSet(
    pairs=tuple((q, corpus.images[i * 14]) for i, q in enumerate(queries.images))
)
edits = {q: (orig, 0.93) for q, orig in pairs.pairs}  # edited copies, cosine 0.93

models = {
    "alexnet": ModelTag(name="alexnet", crop_size=256),
    "vggnet-e": ModelTag(name="vggnet-e", crop_size=256),
    "googlenet": ModelTag(name="googlenet", crop_size=288),
}
backends = {
    name: SyntheticBackend(dim=200 + 40 * i, seed=5, perturbations=edits)
    for i, name in enumerate(models)
}

reduced_corpus, reduced_queries, scores = {}, {}, {}
for name, tag in models.items():
    corpus_features = extract(backends[name], corpus, tag)
    query_features = extract(backends[name], queries, tag)
    pca = fit(corpus_features, target_dim=64)
    reduced_corpus[name] = l2_normalize(project(pca, corpus_features))
    reduced_queries[name] = l2_normalize(project(pca, query_features))
    ranks = rank_originals(build_index(reduced_corpus[name]), pairs, reduced_queries[name])
    scores[name] = rank_score(ranks)
    print(f"{name:>9}: rank score {scores[name]:.3f}")

weights = coefficients(scores)
order = sorted(models)
fused_corpus = fuse([reduced_corpus[n] for n in order], weights)
fused_queries = fuse([reduced_queries[n] for n in order], weights)
index = build_index(fused_corpus.matrix)
print("\nfused space:", fused_corpus.matrix.model.name)

print("\ntop-3 hits per edited query (true original marked *):")
for query_id, original in pairs.pairs[:5]:
    hits = query(index, fused_queries.matrix.row(query_id), k=3)
    rendered = ", ".join(
        f"{h.id}{'*' if h.id == original else ''} {h.similarity:.3f}" for h in hits
    )
    print(f"  {query_id}: {rendered}")
