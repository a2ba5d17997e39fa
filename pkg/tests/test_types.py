import numpy as np
import pytest

from docfusion import (
    AlignmentError,
    CalibrationSet,
    CorpusManifest,
    FeatureMatrix,
    ModelTag,
    ValidationError,
    align,
)


def matrix(ids, values, name="m", crop=256):
    return FeatureMatrix(model=ModelTag(name=name, crop_size=crop), ids=tuple(ids), values=np.asarray(values, dtype=np.float64))


class TestModelTag:
    def test_rejects_empty_name(self):
        with pytest.raises(ValidationError):
            ModelTag(name="", crop_size=256)

    def test_rejects_nonpositive_crop(self):
        with pytest.raises(ValidationError):
            ModelTag(name="alexnet", crop_size=0)


class TestCorpusManifest:
    def test_from_ids_sorts_bytewise(self):
        manifest = CorpusManifest.from_ids(["b", "a", "c"])
        assert manifest.images == ("a", "b", "c")

    def test_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            CorpusManifest.from_ids(["a", "a"])

    def test_rejects_non_canonical_order(self):
        with pytest.raises(ValidationError):
            CorpusManifest(images=("b", "a"))

    def test_rejects_unknown_role(self):
        with pytest.raises(ValidationError):
            CorpusManifest.from_ids(["a"], role="test")

    def test_bytewise_not_locale_order(self):
        # 'Z' (0x5a) sorts before 'a' (0x61) bytewise
        manifest = CorpusManifest.from_ids(["a", "Z"])
        assert manifest.images == ("Z", "a")


class TestFeatureMatrix:
    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            matrix(["a"], [[1.0, np.nan]])

    def test_rejects_row_count_mismatch(self):
        with pytest.raises(ValidationError):
            matrix(["a", "b"], [[1.0, 2.0]])

    def test_values_are_read_only(self):
        m = matrix(["a"], [[1.0, 2.0]])
        with pytest.raises(ValueError):
            m.values[0, 0] = 3.0

    def test_row_lookup(self):
        m = matrix(["a", "b"], [[1.0, 2.0], [3.0, 4.0]])
        assert m.row("b").tolist() == [3.0, 4.0]
        with pytest.raises(AlignmentError):
            m.row("zz")


class TestCalibrationSet:
    def test_rejects_duplicate_queries(self):
        with pytest.raises(ValidationError):
            CalibrationSet(pairs=(("q1", "a"), ("q1", "b")))

    def test_validate_against_manifests(self):
        pairs = CalibrationSet(pairs=(("q1", "a"),))
        training = CorpusManifest.from_ids(["a", "b"])
        queries = CorpusManifest.from_ids(["q1"], role="query")
        pairs.validate_against(training, queries)
        with pytest.raises(ValidationError):
            pairs.validate_against(CorpusManifest.from_ids(["b"]), queries)


class TestAlign:
    def test_identity_when_in_order(self):
        manifest = CorpusManifest.from_ids(["a", "b"])
        m = matrix(["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
        (out,) = align([m], manifest)
        assert out is m

    def test_permutation_oracle(self):
        # two matrices permuted differently both land in canonical order,
        # and each id keeps its own row values
        manifest = CorpusManifest.from_ids(["a", "b", "c"])
        m1 = matrix(["c", "a", "b"], [[3.0], [1.0], [2.0]])
        m2 = matrix(["b", "c", "a"], [[20.0], [30.0], [10.0]])
        out1, out2 = align([m1, m2], manifest)
        for image_id in manifest.images:
            assert out1.row(image_id).tolist() == m1.row(image_id).tolist()
            assert out2.row(image_id).tolist() == m2.row(image_id).tolist()
        assert out1.ids == out2.ids == ("a", "b", "c")
        assert out1.values[:, 0].tolist() == [1.0, 2.0, 3.0]

    def test_missing_image_names_the_id(self):
        manifest = CorpusManifest.from_ids(["a", "q7"])
        m = matrix(["a"], [[1.0]])
        with pytest.raises(AlignmentError, match="q7"):
            align([m], manifest)

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        ids = [f"img{i}" for i in rng.permutation(8)]
        manifest = CorpusManifest.from_ids(ids)
        m = matrix(ids, rng.normal(size=(8, 3)))
        once = align([m], manifest)
        twice = align(once, manifest)
        assert twice[0] is once[0]
        assert np.array_equal(once[0].values, twice[0].values)

    def test_extra_rows_are_dropped(self):
        manifest = CorpusManifest.from_ids(["a"])
        m = matrix(["a", "b"], [[1.0], [2.0]])
        (out,) = align([m], manifest)
        assert out.ids == ("a",)
        assert out.values.tolist() == [[1.0]]
