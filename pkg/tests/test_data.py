import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from selfbound.data import (RNG_ALGORITHM, DataError, Dataset, SplitSpec, load_csv, split, split_for_voters,
                            split_metadata)


def _ds(m, d=2, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=(m, d)), rng.choice([-1, 1], size=m), "toy")


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadCsv:
    def test_four_rows(self, tmp_path):
        ds = load_csv(_write(tmp_path, "1,2,1\n3,4,1\n5,6,-1\n7,8,-1\n"))
        assert ds.m == 4 and ds.d == 2
        assert ds.labels.tolist() == [1, 1, -1, -1]
        assert ds.features[2].tolist() == [5.0, 6.0]

    def test_zero_one_labels(self, tmp_path):
        ds = load_csv(_write(tmp_path, "0.5,0\n1.5,1\n2.5,0\n"))
        assert ds.labels.tolist() == [-1, 1, -1]

    def test_header_and_label_column(self, tmp_path):
        ds = load_csv(_write(tmp_path, "y,a,b\n1,2,3\n-1,4,5\n"), label_column=0, has_header=True)
        assert ds.labels.tolist() == [1, -1]
        assert ds.features.tolist() == [[2, 3], [4, 5]]

    def test_non_numeric_cell_named(self, tmp_path):
        with pytest.raises(DataError, match=r"row 2, column 1"):
            load_csv(_write(tmp_path, "1,2,1\n3,x,1\n"))

    def test_missing_cell(self, tmp_path):
        with pytest.raises(DataError, match="row 1"):
            load_csv(_write(tmp_path, "1,nan,1\n3,4,-1\n"))

    def test_bad_label(self, tmp_path):
        with pytest.raises(DataError, match="label"):
            load_csv(_write(tmp_path, "1,2,2\n3,4,1\n"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(_write(tmp_path, ""))

    def test_ragged(self, tmp_path):
        with pytest.raises(DataError, match="columns"):
            load_csv(_write(tmp_path, "1,2,1\n3,1\n"))


class TestDataset:
    def test_rejects_bad_labels(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((2, 1)), np.array([0, 1]), "x")

    def test_rejects_nan(self):
        with pytest.raises(DataError):
            Dataset(np.array([[np.nan], [1.0]]), np.array([1, -1]), "x")

    def test_rejects_no_features(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((2, 0)), np.array([1, -1]), "x")


class TestSplit:
    def test_deterministic(self):
        ds = _ds(10)
        a = split(ds, SplitSpec(seed=7))
        b = split(ds, SplitSpec(seed=7))
        assert np.array_equal(a[0].features, b[0].features)
        assert np.array_equal(a[1].labels, b[1].labels)

    def test_even_sizes(self):
        tr, te = split(_ds(10), SplitSpec(seed=1))
        assert (tr.m, te.m) == (5, 5)

    def test_odd_rounding_test_gets_floor(self):
        tr, te = split(_ds(3), SplitSpec())
        assert (tr.m, te.m) == (2, 1)

    def test_voter_split_sizes(self):
        vt, pt = split_for_voters(_ds(100), SplitSpec())
        assert (vt.m, pt.m) == (50, 50)
        vt, pt = split_for_voters(_ds(5), SplitSpec())
        assert (vt.m, pt.m) == (3, 2)

    def test_seed_sensitivity(self):
        ds = _ds(100)
        a = split_for_voters(ds, SplitSpec(seed=0))[0].features
        b = split_for_voters(ds, SplitSpec(seed=1))[0].features
        assert not np.array_equal(a, b)

    def test_empty_part_rejected(self):
        with pytest.raises(DataError):
            split(_ds(1, seed=0), SplitSpec())

    @pytest.mark.parametrize("f", [0.0, 1.0, -0.5, 2.0])
    def test_fraction_range(self, f):
        with pytest.raises(DataError):
            SplitSpec(test_fraction=f)

    @given(st.integers(2, 200), st.integers(0, 2**63), st.floats(0.05, 0.95))
    def test_disjoint_and_exhaustive(self, m, seed, frac):
        # tag rows by a unique feature value so the partition can be recovered
        ds = Dataset(np.arange(m, dtype=float)[:, None], np.ones(m), "ids")
        if min(int(m * frac), m - int(m * frac)) < 1:
            with pytest.raises(DataError):
                split(ds, SplitSpec(seed, frac))
            return
        tr, te = split(ds, SplitSpec(seed, frac))
        a, b = set(tr.features[:, 0]), set(te.features[:, 0])
        assert not a & b and a | b == set(range(m))
        assert te.m == int(np.floor(m * frac))

    def test_metadata(self):
        ds = _ds(20)
        tr, te = split(ds, SplitSpec())
        vt, pt = split_for_voters(tr, SplitSpec())
        meta = split_metadata(tr, te, vt, pt)
        assert meta["rng"] == RNG_ALGORITHM and meta["stratified"] is False
        assert sum(meta["train_counts"].values()) == tr.m
        assert sum(meta["posterior_counts"].values()) == pt.m
