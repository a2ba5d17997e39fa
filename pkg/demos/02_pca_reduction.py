"""PCA reduction: compress a wide feature matrix onto its top variance axes.

CNN descriptors are a few thousand dimensions wide; retrieval only needs
the directions where documents actually differ. The fit below recovers a
planted 6-dimensional structure from 64-dimensional vectors.
"""

import numpy as np

from docfusion import FeatureMatrix, ModelTag, fit, l2_normalize, project

rng = np.random.default_rng(11)
n, wide_dim, true_rank = 300, 64, 6

latent = rng.normal(size=(n, true_rank))
mixing = rng.normal(size=(true_rank, wide_dim))
values = latent @ mixing + 0.05 * rng.normal(size=(n, wide_dim))

matrix = FeatureMatrix(
    model=ModelTag(name="vggnet-e", crop_size=256),
    ids=tuple(f"page{i:03d}" for i in range(n)),
    values=values,
)

model = fit(matrix, target_dim=16)
print(f"reduced {matrix.dim}-d features to {model.target_dim}-d")

spectrum = model.eigenvalues
explained = spectrum / spectrum.sum()
print("top eigenvalue share per component:")
for j, share in enumerate(explained[:8]):
    print(f"  component {j}: {share:7.2%}  {'#' * int(60 * share)}")
print(f"first {true_rank} components explain {explained[:true_rank].sum():.2%}")

reduced = l2_normalize(project(model, matrix))
print("projected shape:", reduced.values.shape)
print("row norms after normalization:", np.round(np.linalg.norm(reduced.values[:4], axis=1), 12))
