import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import numeric_table
from netclust.errors import DataError
from netclust.ingest import Column, RawTable
from netclust.preprocess import (
    FeatureMatrix,
    MissingPolicy,
    SplitSpec,
    apply_scaler,
    clean,
    digitize,
    fit_scaler,
    invert_scaler,
    split,
)


def table_with_one_bad_column(n_cols=79, n_rows=30):
    cols = []
    names = []
    for j in range(n_cols):
        vals = np.arange(n_rows, dtype=float) + j
        if j == 17:
            vals[::5] = math.nan
        names.append(f"c{j}")
        cols.append(Column(f"c{j}", "numeric", vals))
    return RawTable(column_names=names, columns=cols, n_rows=n_rows)


class TestClean:
    def test_drop_column_removes_the_one_bad_column(self):
        t = clean(table_with_one_bad_column(), MissingPolicy(mode="drop-column"))
        assert t.n_cols == 78
        assert "c17" not in t.column_names

    def test_no_missing_is_noop_under_every_mode(self):
        t = numeric_table(["a", "b"], [[1, 2, 3], [4, 5, 6]])
        for mode in ("drop-column", "drop-row", "impute-median"):
            assert clean(t, MissingPolicy(mode=mode)) == t

    def test_impute_median(self):
        t = numeric_table(["a"], [[1.0, math.nan, 3.0]])
        out = clean(t, MissingPolicy(mode="impute-median"))
        assert out.column("a").values.tolist() == [1.0, 2.0, 3.0]

    def test_impute_categorical_mode(self):
        col = Column("proto", "categorical", ["tcp", None, "tcp", "udp"])
        t = RawTable(column_names=["proto"], columns=[col], n_rows=4)
        out = clean(t, MissingPolicy(mode="impute-median"))
        assert out.column("proto").values == ["tcp", "tcp", "tcp", "udp"]

    def test_drop_row(self):
        t = numeric_table(["a", "b"], [[1.0, math.nan, 3.0], [4.0, 5.0, 6.0]])
        out = clean(t, MissingPolicy(mode="drop-row"))
        assert out.n_rows == 2
        assert out.column("a").values.tolist() == [1.0, 3.0]

    def test_all_columns_removed_is_error(self):
        t = numeric_table(["a"], [[math.nan, 1.0]])
        with pytest.raises(DataError, match="every column"):
            clean(t, MissingPolicy(mode="drop-column"))

    def test_threshold_spares_lightly_missing_columns(self):
        t = numeric_table(["a", "b"], [[math.nan, 1.0, 2.0, 3.0], [1, 2, 3, 4]])
        out = clean(t, MissingPolicy(mode="drop-column", column_drop_threshold=0.5))
        assert out.n_cols == 2


class TestDigitize:
    def test_ordinal_encoding_lexicographic(self):
        col = Column("proto", "categorical", ["tcp", "udp", "tcp"])
        t = RawTable(column_names=["proto"], columns=[col], n_rows=3)
        m = digitize(t)
        assert m.values[:, 0].tolist() == [0.0, 1.0, 0.0]
        assert m.encodings == {"proto": {"tcp": 0, "udp": 1}}

    def test_all_numeric_identity(self):
        t = numeric_table(["a", "b"], [[1, 2], [3, 4]])
        m = digitize(t)
        assert np.array_equal(m.values, np.array([[1.0, 3.0], [2.0, 4.0]]))
        assert m.encodings == {}

    def test_mixed_table_hand_checked_mapping(self):
        # expected codes computed by hand from the lexicographic rule:
        # proto: {icmp:0, tcp:1, udp:2}; flag: {ACK:0, SYN:1}; svc: {dns:0, http:1}
        cols = [
            Column("proto", "categorical", ["tcp", "udp", "icmp"]),
            Column("len", "numeric", np.array([10.0, 20.0, 30.0])),
            Column("flag", "categorical", ["SYN", "ACK", "SYN"]),
            Column("dur", "numeric", np.array([0.1, 0.2, 0.3])),
            Column("svc", "categorical", ["http", "dns", "http"]),
        ]
        t = RawTable(
            column_names=[c.name for c in cols], columns=cols, n_rows=3
        )
        m = digitize(t)
        assert m.n_features == 5
        assert m.feature_names == ["proto", "len", "flag", "dur", "svc"]
        assert m.values[:, 0].tolist() == [1.0, 2.0, 0.0]
        assert m.values[:, 2].tolist() == [1.0, 0.0, 1.0]
        assert m.values[:, 4].tolist() == [1.0, 0.0, 1.0]

    def test_unseen_category_with_stored_mapping(self):
        col = Column("proto", "categorical", ["tcp", "sctp"])
        t = RawTable(column_names=["proto"], columns=[col], n_rows=2)
        with pytest.raises(DataError, match="'sctp' in column 'proto'"):
            digitize(t, encodings={"proto": {"tcp": 0, "udp": 1}})


class TestScaler:
    def test_min_max_endpoints(self):
        m = FeatureMatrix(np.array([[0.0], [5.0], [10.0]]), ["x"])
        out = apply_scaler(fit_scaler(m, "min-max"), m)
        assert out.values[:, 0].tolist() == [0.0, 0.5, 1.0]

    def test_constant_feature_maps_to_zero(self):
        m = FeatureMatrix(np.array([[7.0], [7.0], [7.0]]), ["x"])
        for method in ("min-max", "z-score"):
            out = apply_scaler(fit_scaler(m, method), m)
            assert out.values[:, 0].tolist() == [0.0, 0.0, 0.0]

    def test_zscore_moments(self, rng):
        m = FeatureMatrix(rng.normal(3.0, 2.5, size=(200, 4)), list("abcd"))
        out = apply_scaler(fit_scaler(m, "z-score"), m)
        assert np.all(np.abs(out.values.mean(axis=0)) < 1e-9)
        assert np.all(np.abs(out.values.std(axis=0) - 1.0) < 1e-9)

    def test_round_trip(self, rng):
        m = FeatureMatrix(rng.uniform(-5, 5, size=(50, 3)), list("abc"))
        for method in ("min-max", "z-score"):
            s = fit_scaler(m, method)
            back = invert_scaler(s, apply_scaler(s, m))
            assert np.all(np.abs(back.values - m.values) < 1e-9)

    def test_name_mismatch(self):
        m = FeatureMatrix(np.zeros((2, 1)), ["x"])
        s = fit_scaler(m, "min-max")
        other = FeatureMatrix(np.zeros((2, 1)), ["y"])
        with pytest.raises(DataError, match="feature names"):
            apply_scaler(s, other)

    def test_min_max_lands_in_unit_interval(self, rng):
        m = FeatureMatrix(rng.uniform(-3, 9, size=(40, 5)), list("abcde"))
        out = apply_scaler(fit_scaler(m, "min-max"), m)
        assert out.values.min() >= 0.0 and out.values.max() <= 1.0
        # both endpoints attained per feature
        assert np.all(out.values.min(axis=0) == 0.0)
        assert np.all(out.values.max(axis=0) == 1.0)


class TestSplit:
    def test_80_20(self, rng):
        m = FeatureMatrix(rng.normal(size=(100, 2)), ["a", "b"])
        train, test = split(m, None, SplitSpec(test_fraction=0.2, seed=1))
        assert len(train) == 80 and len(test) == 20

    def test_tiny_rounding(self, rng):
        m = FeatureMatrix(rng.normal(size=(5, 1)), ["a"])
        train, test = split(m, np.zeros(5, dtype=int), SplitSpec(seed=1))
        assert len(train) == 4 and len(test) == 1

    def test_stratified_even_classes(self, rng):
        m = FeatureMatrix(rng.normal(size=(100, 1)), ["a"])
        labels = np.array([0] * 50 + [1] * 50)
        train, test = split(m, labels, SplitSpec(test_fraction=0.2, seed=3))
        assert len(test) == 20
        assert (labels[test] == 0).sum() == 10
        assert (labels[test] == 1).sum() == 10

    def test_disjoint_exhaustive_deterministic(self, rng):
        m = FeatureMatrix(rng.normal(size=(73, 2)), ["a", "b"])
        labels = rng.integers(0, 3, size=73)
        t1 = split(m, labels, SplitSpec(seed=9))
        t2 = split(m, labels, SplitSpec(seed=9))
        assert np.array_equal(t1[0], t2[0]) and np.array_equal(t1[1], t2[1])
        combined = np.sort(np.concatenate(t1))
        assert np.array_equal(combined, np.arange(73))

    def test_small_class_goes_to_train(self, rng):
        m = FeatureMatrix(rng.normal(size=(21, 1)), ["a"])
        labels = np.array([0] * 20 + [7])
        with pytest.warns(UserWarning, match="fewer than 2"):
            train, test = split(m, labels, SplitSpec(seed=2))
        assert 20 in train

    @given(
        n=st.integers(min_value=4, max_value=120),
        frac=st.floats(min_value=0.05, max_value=0.95),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_split_partition_property(self, n, frac, seed):
        m = FeatureMatrix(np.zeros((n, 1)), ["a"])
        train, test = split(m, None, SplitSpec(test_fraction=frac, seed=seed))
        assert len(set(train) & set(test)) == 0
        assert len(train) + len(test) == n
        assert len(test) == int(math.floor(frac * n + 0.5))
