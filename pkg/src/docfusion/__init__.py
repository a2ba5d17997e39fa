"""Content-based document image retrieval with fused CNN features.

The pipeline extracts one feature matrix per CNN model, reduces each with
PCA to a shared dimension, weights each model by retrieval quality on a
held-out calibration set, fuses the reduced matrices into one
weighted-average feature space, and answers queries by exact cosine
ranking.
"""

from .calibration import (
    FusionWeights,
    coefficients,
    rank_originals,
    rank_score,
    top_k_accuracy,
)
from .errors import (
    AlignmentError,
    CorruptionError,
    DocfusionError,
    FormatError,
    IngestionError,
    NumericalError,
    ValidationError,
)
from .evaluation import AccuracyReport, compare_report, evaluate_configuration
from .extraction import (
    FileBackend,
    NeuralBackend,
    PreprocessSpec,
    SyntheticBackend,
    extract,
    perturbed_features,
    preprocess,
    synthetic_features,
)
from .fusion import FusedMatrix, fuse
from .index import RankedHit, RetrievalIndex, build_index, cosine, hits_as_tsv, query
from .pca import PcaModel, covariance, fit, l2_normalize, project
from .types import (
    CalibrationSet,
    CorpusManifest,
    FeatureMatrix,
    ModelTag,
    align,
    canonical_order,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "AlignmentError",
    "CalibrationSet",
    "CorpusManifest",
    "CorruptionError",
    "DocfusionError",
    "FeatureMatrix",
    "FileBackend",
    "FormatError",
    "FusedMatrix",
    "FusionWeights",
    "IngestionError",
    "ModelTag",
    "NeuralBackend",
    "NumericalError",
    "PcaModel",
    "PreprocessSpec",
    "RankedHit",
    "RetrievalIndex",
    "SyntheticBackend",
    "ValidationError",
    "align",
    "build_index",
    "canonical_order",
    "coefficients",
    "compare_report",
    "cosine",
    "covariance",
    "evaluate_configuration",
    "extract",
    "fit",
    "fuse",
    "hits_as_tsv",
    "l2_normalize",
    "perturbed_features",
    "preprocess",
    "project",
    "query",
    "rank_originals",
    "rank_score",
    "synthetic_features",
    "top_k_accuracy",
]
