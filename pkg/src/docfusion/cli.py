"""Staged batch pipeline: extract -> reduce -> calibrate -> index -> query/evaluate.

Each stage reads files produced by earlier stages and writes
byte-deterministic outputs, so reruns on identical inputs are
byte-identical and stages can be cached or re-run independently.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


from . import io as dio
from .calibration import coefficients, rank_originals, rank_score, top_k_accuracy
from .config import PRESETS, PipelineConfig, load_config
from .errors import DocfusionError, NumericalError, ValidationError
from .evaluation import DEFAULT_KS, AccuracyReport, compare_report, evaluate_configuration
from .extraction import extract
from .fusion import fuse
from .index import build_index, hits_as_tsv, query
from .pca import fit, l2_normalize, project
from .types import CorpusManifest, FeatureMatrix


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the documented contract is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_manifest(path: str, role: str = "training") -> CorpusManifest:
    with open(path, "rb") as fh:
        return dio.read_manifest_file(fh, role=role)


def _read_features(path: Path) -> FeatureMatrix:
    with open(path, "rb") as fh:
        matrix, _ = dio.read_feature_file(fh)
    return matrix


def _write_features(matrix: FeatureMatrix, path: Path) -> None:
    manifest = CorpusManifest(images=matrix.ids, role="training")
    with open(path, "wb") as fh:
        dio.write_feature_file(matrix, manifest, fh)


def _feature_path(directory: str | Path, model_name: str) -> Path:
    return Path(directory) / f"{model_name}.fcbf"


def _reduced_matrices(config: PipelineConfig, directory: str, names) -> dict[str, FeatureMatrix]:
    return {name: _read_features(_feature_path(directory, name)) for name in names}


def cmd_extract(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    role = args.role
    manifest = _read_manifest(args.manifest, role=role)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for model in config.models:
        matrix = extract(model.backend, manifest, model.tag)
        with open(_feature_path(out, model.tag.name), "wb") as fh:
            dio.write_feature_file(matrix, manifest, fh)
    return 0


def cmd_reduce(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    target_dim = args.top_dim if args.top_dim is not None else config.target_dim
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for model in config.models:
        matrix = _read_features(_feature_path(args.features, model.tag.name))
        if args.pca:
            with open(Path(args.pca) / f"{model.tag.name}.fcpc", "rb") as fh:
                pca_model = dio.read_pca_file(fh)
        else:
            pca_model = fit(matrix, target_dim)
            with open(out / f"{model.tag.name}.fcpc", "wb") as fh:
                dio.write_pca_file(pca_model, fh)
        reduced = project(pca_model, matrix)
        if config.normalize:
            reduced = l2_normalize(reduced)
        _write_features(reduced, _feature_path(out, model.tag.name))
    return 0


def cmd_calibrate(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    calibration_path = args.calibration or config.calibration_path
    if not calibration_path:
        raise ValidationError("no calibration file given (flag or config)")
    with open(calibration_path, "rb") as fh:
        calibration = dio.read_calibration_file(fh)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    scores = {}
    report_rows = []
    for model in config.models:
        corpus = _read_features(_feature_path(args.reduced, model.tag.name))
        queries = _read_features(_feature_path(args.query_features, model.tag.name))
        ranks = rank_originals(build_index(corpus), calibration, queries)
        score = rank_score(ranks)
        scores[model.tag.name] = score
        accuracies = {k: 100.0 * top_k_accuracy(ranks, k) for k in DEFAULT_KS}
        report_rows.append((model.tag.name, top_k_accuracy(ranks, 5), score, accuracies))

    weights = coefficients(scores)
    with open(out / "weights.tsv", "wb") as fh:
        dio.write_weights_file(weights, fh)
    rendered = dio.render_calibration_report(
        [
            (name, top5, score, weights.weights[name], accuracies)
            for name, top5, score, accuracies in report_rows
        ]
    )
    (out / "calibration_report.tsv").write_bytes(rendered.encode("utf-8"))
    return 0


def _select_models(config: PipelineConfig, preset: str | None) -> tuple[str, ...]:
    if preset:
        return config.preset_models(preset)
    if config.preset:
        return config.preset_models(config.preset)
    return config.model_names()


def cmd_index(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    names = _select_models(config, args.preset)
    with open(args.weights, "rb") as fh:
        weights = dio.read_weights_file(fh)
    subset = weights.subset(names)
    matrices = list(_reduced_matrices(config, args.reduced, names).values())
    fused = fuse(matrices, subset)
    retrieval_index = build_index(fused.matrix)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_features(fused.matrix, out / "fused.fcbf")  # composite name recorded
    with open(out / "fused.fcix", "wb") as fh:
        dio.write_index_file(retrieval_index, fh)
    return 0


def cmd_query(args) -> int:
    with open(args.index, "rb") as fh:
        retrieval_index = dio.read_index_file(fh)
    features = _read_features(Path(args.features))
    hits = query(retrieval_index, features.row(args.id), k=args.k)
    rendered = hits_as_tsv(hits)
    if args.out:
        Path(args.out).write_bytes(rendered.encode("utf-8"))
    else:
        sys.stdout.write(rendered)
    return 0


def cmd_evaluate(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    with open(args.truth, "rb") as fh:
        truth = dio.read_calibration_file(fh)
    with open(args.weights, "rb") as fh:
        weights = dio.read_weights_file(fh)

    report = AccuracyReport()
    corpus = _reduced_matrices(config, args.reduced, config.model_names())
    queries = _reduced_matrices(config, args.query_features, config.model_names())
    for name in config.model_names():
        accuracies = evaluate_configuration(
            name, build_index(corpus[name]), queries[name], truth
        )
        report.add(name, accuracies)
    for preset in args.preset or ([config.preset] if config.preset else []):
        names = config.preset_models(preset)
        subset = weights.subset(names)
        fused_corpus = fuse([corpus[n] for n in names], subset)
        fused_queries = fuse([queries[n] for n in names], subset)
        accuracies = evaluate_configuration(
            preset,
            build_index(fused_corpus.matrix),
            fused_queries.matrix,
            truth,
        )
        report.add(preset, accuracies)

    rendered = compare_report(report)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.tsv").write_bytes(rendered.encode("utf-8"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="docfusion",
        description="Content-based document image retrieval with fused CNN features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override synthetic backend seeds")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("extract", help="extract one feature file per model")
    common(p)
    p.add_argument("--manifest", required=True, help="corpus manifest (one id per line)")
    p.add_argument(
        "--role", choices=("training", "query", "calibration"), default="training"
    )
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("reduce", help="fit/apply PCA and write reduced features")
    common(p)
    p.add_argument("--features", required=True, help="directory of extracted feature files")
    p.add_argument("--top-dim", type=int, default=None, help="override the target dimension")
    p.add_argument("--pca", default=None, help="apply existing PCA models from this directory")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("calibrate", help="score models and compute fusion weights")
    common(p)
    p.add_argument("--reduced", required=True, help="directory of reduced corpus features")
    p.add_argument(
        "--query-features", required=True, help="directory of reduced calibration query features"
    )
    p.add_argument("--calibration", default=None, help="query<TAB>original pairs file")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("index", help="fuse reduced features and build the retrieval index")
    common(p)
    p.add_argument("--reduced", required=True, help="directory of reduced corpus features")
    p.add_argument("--weights", required=True, help="weights file from calibrate")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="rank corpus images against one query")
    p.add_argument("--index", required=True, help="index file from the index stage")
    p.add_argument("--features", required=True, help="reduced query feature file")
    p.add_argument("--id", required=True, help="query image id")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--out", default=None, help="write TSV here instead of stdout")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("evaluate", help="top-k accuracy report for models and presets")
    common(p)
    p.add_argument("--reduced", required=True, help="directory of reduced corpus features")
    p.add_argument(
        "--query-features", required=True, help="directory of reduced evaluation query features"
    )
    p.add_argument("--weights", required=True, help="weights file from calibrate")
    p.add_argument("--truth", required=True, help="query<TAB>original ground-truth file")
    p.add_argument("--preset", action="append", choices=sorted(PRESETS), default=None)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"docfusion: numerical error: {exc}", file=sys.stderr)
        return 3
    except DocfusionError as exc:
        print(f"docfusion: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"docfusion: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
