"""On-disk formats. Everything here is byte-deterministic.

Binary layouts (all little-endian):

feature interchange file ("FCBF"):
    magic "FCBF" | version u16 = 1 | model-name length u16 + UTF-8 bytes |
    crop_size u32 | n u64 | d u64 |
    n image-id records (length u16 + UTF-8 bytes, canonical order) |
    n*d float32 values, row-major

PCA model file ("FCPC"):
    magic "FCPC" | version u16 = 1 | source_dim u64 | target_dim u64 |
    mean (f64 x d) | eigenvalues (f64 x k) | basis (f64, row-major k x d)

retrieval index file ("FCIX"):
    magic "FCIX" | version u16 = 1 | K u64 | n u64 |
    n image-id records | n*K float32 values, row-major | n f64 norms

Text formats are UTF-8 with LF line endings: manifests hold one image id
per line; calibration files one "query<TAB>original" pair per line;
fusion-weight files one "model<TAB>score<TAB>weight" row per line under a
header. float32 is enough for CNN features; the PCA file keeps float64
because basis round-off compounds through projection.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .calibration import FusionWeights
from .errors import AlignmentError, CorruptionError, FormatError, ValidationError
from .index import RetrievalIndex
from .pca import PcaModel
from .types import CalibrationSet, CorpusManifest, FeatureMatrix, ModelTag, canonical_order

FEATURE_MAGIC = b"FCBF"
PCA_MAGIC = b"FCPC"
INDEX_MAGIC = b"FCIX"
FORMAT_VERSION = 1


def _pack_str(value: str) -> bytes:
    data = value.encode("utf-8")
    if len(data) > 0xFFFF:
        raise ValidationError(f"string too long for u16 length prefix: {value[:32]!r}...")
    return struct.pack("<H", len(data)) + data


def _read_exact(source: BinaryIO, size: int, what: str) -> bytes:
    data = source.read(size)
    if len(data) != size:
        raise CorruptionError(f"truncated file while reading {what}")
    return data


def _unpack_str(source: BinaryIO, what: str) -> str:
    (length,) = struct.unpack("<H", _read_exact(source, 2, f"{what} length"))
    return _read_exact(source, length, what).decode("utf-8")


# -- feature interchange files ------------------------------------------


def write_feature_file(matrix: FeatureMatrix, manifest: CorpusManifest, sink: BinaryIO) -> None:
    """Write the matrix in the interchange format; rows follow the manifest.

    Values are stored as float32; pass float32 data for bit-exact
    round-trips. The matrix must already be aligned to the manifest.
    """
    if matrix.ids != manifest.images:
        raise AlignmentError(
            f"matrix rows are not aligned to the manifest "
            f"({len(matrix.ids)} vs {len(manifest.images)} ids)"
        )
    values = np.ascontiguousarray(matrix.values, dtype=np.float32)
    if values.size and not np.all(np.isfinite(values)):
        raise ValidationError("feature values must be finite")
    sink.write(FEATURE_MAGIC)
    sink.write(struct.pack("<H", FORMAT_VERSION))
    sink.write(_pack_str(matrix.model.name))
    sink.write(struct.pack("<I", matrix.model.crop_size))
    sink.write(struct.pack("<QQ", matrix.n, matrix.dim))
    for image_id in manifest.images:
        sink.write(_pack_str(image_id))
    sink.write(values.tobytes())


def read_feature_file(source: BinaryIO) -> tuple[FeatureMatrix, CorpusManifest]:
    """Read an interchange file back; the inverse of :func:`write_feature_file`.

    The file does not carry a corpus role, so the returned manifest
    defaults to "training".
    """
    magic = source.read(4)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    (version,) = struct.unpack("<H", _read_exact(source, 2, "version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported feature file version {version}")
    model_name = _unpack_str(source, "model name")
    (crop_size,) = struct.unpack("<I", _read_exact(source, 4, "crop size"))
    n, d = struct.unpack("<QQ", _read_exact(source, 16, "matrix shape"))
    ids = tuple(_unpack_str(source, f"image id {i}") for i in range(n))
    if ids != canonical_order(ids):
        raise FormatError("image ids are not in canonical order")
    payload = _read_exact(source, n * d * 4, "feature payload")
    if source.read(1):
        raise CorruptionError("trailing bytes after feature payload")
    values = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    if values.size and not np.all(np.isfinite(values)):
        raise ValidationError("feature payload contains non-finite values")
    matrix = FeatureMatrix(
        model=ModelTag(name=model_name, crop_size=crop_size),
        ids=ids,
        values=values,
    )
    return matrix, CorpusManifest(images=ids, role="training")


# -- PCA model files -----------------------------------------------------


def write_pca_file(model: PcaModel, sink: BinaryIO) -> None:
    sink.write(PCA_MAGIC)
    sink.write(struct.pack("<H", FORMAT_VERSION))
    sink.write(struct.pack("<QQ", model.source_dim, model.target_dim))
    sink.write(np.ascontiguousarray(model.mean, dtype="<f8").tobytes())
    sink.write(np.ascontiguousarray(model.eigenvalues, dtype="<f8").tobytes())
    sink.write(np.ascontiguousarray(model.basis, dtype="<f8").tobytes())


def read_pca_file(source: BinaryIO) -> PcaModel:
    magic = source.read(4)
    if magic != PCA_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {PCA_MAGIC!r}")
    (version,) = struct.unpack("<H", _read_exact(source, 2, "version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported PCA file version {version}")
    d, k = struct.unpack("<QQ", _read_exact(source, 16, "PCA dims"))
    mean = np.frombuffer(_read_exact(source, d * 8, "mean"), dtype="<f8")
    eigenvalues = np.frombuffer(_read_exact(source, k * 8, "eigenvalues"), dtype="<f8")
    basis = np.frombuffer(_read_exact(source, k * d * 8, "basis"), dtype="<f8").reshape(k, d)
    if source.read(1):
        raise CorruptionError("trailing bytes after PCA basis")
    return PcaModel(mean=mean, basis=basis, eigenvalues=eigenvalues, source_dim=d, target_dim=k)


# -- retrieval index files ------------------------------------------------


def write_index_file(index: RetrievalIndex, sink: BinaryIO) -> None:
    sink.write(INDEX_MAGIC)
    sink.write(struct.pack("<H", FORMAT_VERSION))
    sink.write(struct.pack("<QQ", index.dim, len(index)))
    for image_id in index.ids:
        sink.write(_pack_str(image_id))
    sink.write(np.ascontiguousarray(index.values, dtype="<f4").tobytes())
    sink.write(np.ascontiguousarray(index.norms, dtype="<f8").tobytes())


def read_index_file(source: BinaryIO) -> RetrievalIndex:
    magic = source.read(4)
    if magic != INDEX_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {INDEX_MAGIC!r}")
    (version,) = struct.unpack("<H", _read_exact(source, 2, "version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported index file version {version}")
    dim, n = struct.unpack("<QQ", _read_exact(source, 16, "index shape"))
    ids = tuple(_unpack_str(source, f"image id {i}") for i in range(n))
    values = np.frombuffer(_read_exact(source, n * dim * 4, "index features"), dtype="<f4")
    norms = np.frombuffer(_read_exact(source, n * 8, "index norms"), dtype="<f8")
    if source.read(1):
        raise CorruptionError("trailing bytes after index norms")
    return RetrievalIndex(values=values.reshape(n, dim), ids=ids, norms=norms)


# -- text formats ----------------------------------------------------------


def write_manifest_file(manifest: CorpusManifest, sink: BinaryIO) -> None:
    for image_id in manifest.images:
        sink.write(image_id.encode("utf-8") + b"\n")


def read_manifest_file(source: BinaryIO, role: str = "training") -> CorpusManifest:
    ids = [line.decode("utf-8") for line in source.read().splitlines() if line]
    return CorpusManifest.from_ids(ids, role=role)


def write_calibration_file(calibration: CalibrationSet, sink: BinaryIO) -> None:
    for query_id, original_id in calibration.pairs:
        sink.write(f"{query_id}\t{original_id}\n".encode("utf-8"))


def read_calibration_file(source: BinaryIO) -> CalibrationSet:
    pairs = []
    for lineno, raw in enumerate(source.read().splitlines(), start=1):
        if not raw:
            continue
        parts = raw.decode("utf-8").split("\t")
        if len(parts) != 2:
            raise FormatError(f"calibration line {lineno} is not 'query<TAB>original'")
        pairs.append((parts[0], parts[1]))
    return CalibrationSet(pairs=tuple(pairs))


WEIGHTS_HEADER = "model\trank_score\tweight"


def write_weights_file(weights: FusionWeights, sink: BinaryIO) -> None:
    """Persist fusion weights with full float precision (repr round-trips)."""
    sink.write(WEIGHTS_HEADER.encode("utf-8") + b"\n")
    for name in sorted(weights.scores, key=lambda s: s.encode("utf-8")):
        sink.write(
            f"{name}\t{float(weights.scores[name])!r}\t{float(weights.weights[name])!r}\n".encode("utf-8")
        )


def read_weights_file(source: BinaryIO) -> FusionWeights:
    lines = [line for line in source.read().decode("utf-8").splitlines() if line]
    if not lines or lines[0] != WEIGHTS_HEADER:
        raise FormatError("weights file is missing its header row")
    scores = {}
    epsilons = {}
    for raw in lines[1:]:
        parts = raw.split("\t")
        if len(parts) != 3:
            raise FormatError(f"bad weights row: {raw!r}")
        scores[parts[0]] = float(parts[1])
        epsilons[parts[0]] = float(parts[2])
    return FusionWeights(scores=scores, weights=epsilons)


def render_calibration_report(
    rows: "list[tuple[str, float, float, float, dict[int, float]]]",
    ks: tuple[int, ...] = (1, 3, 5, 10),
) -> str:
    """Per-model calibration summary: top-5 score, rank score, weight, top-k %."""
    header = "model\ttop5_score\trank_score\tweight\t" + "\t".join(f"top{k}" for k in ks)
    lines = [header]
    for name, top5_score, score, weight, accuracies in rows:
        lines.append(
            f"{name}\t{top5_score:.6f}\t{score:.6f}\t{weight:.6f}\t"
            + "\t".join(f"{accuracies[k]:.2f}" for k in ks)
        )
    return "\n".join(lines) + "\n"
