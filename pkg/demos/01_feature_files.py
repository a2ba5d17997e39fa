"""Feature interchange files: write a matrix, read it back, inspect the bytes.

Every stage of the pipeline trades n-by-d float32 matrices through one
binary format, so extractors written in any language can feed the engine.
"""

import io

import numpy as np

from docfusion import CorpusManifest, FeatureMatrix, ModelTag
from docfusion.io import read_feature_file, write_feature_file

rng = np.random.default_rng(7)

ids = ["invoice-017", "contract-002", "report-114"]
manifest = CorpusManifest.from_ids(ids)
print("canonical row order:", manifest.images)

matrix = FeatureMatrix(
    model=ModelTag(name="alexnet", crop_size=256),
    ids=manifest.images,
    values=rng.normal(size=(3, 8)).astype(np.float32),
)

sink = io.BytesIO()
write_feature_file(matrix, manifest, sink)
blob = sink.getvalue()
print(f"file size: {len(blob)} bytes, magic: {blob[:4]!r}")

back, back_manifest = read_feature_file(io.BytesIO(blob))
print("round-trip model:", back.model)
print("bit-exact values:", np.array_equal(back.values, matrix.values))

sink2 = io.BytesIO()
write_feature_file(matrix, manifest, sink2)
print("byte-deterministic:", sink2.getvalue() == blob)
