import math

import numpy as np
import pytest

from repsel.errors import DataError
from repsel.synthdata import (
    OUTLIER_CODES,
    clustered_gaussians,
    embed,
    embed_dataset,
    inject_repetitive_outliers,
    inject_structured_outliers,
    inject_uniform_outliers,
    make_dataset,
    random_orthonormal,
    sphere,
    swiss_roll,
    trefoil,
    trefoil_point,
)


def test_swiss_roll_radius_identity():
    ds = swiss_roll(200, 0.0, seed=1)
    x, _, z = ds.data
    np.testing.assert_allclose(x ** 2 + z ** 2, ds.latent ** 2, rtol=1e-12)
    r = np.hypot(x, z)
    assert r.min() >= 1.5 * math.pi - 1e-12 and r.max() <= 4.5 * math.pi + 1e-12
    assert 0 <= ds.data[1].min() and ds.data[1].max() <= 21


def test_swiss_roll_reproducible():
    np.testing.assert_array_equal(swiss_roll(5, 0.1, 3).data, swiss_roll(5, 0.1, 3).data)
    assert not np.array_equal(swiss_roll(5, 0.0, 3).data, swiss_roll(5, 0.0, 4).data)


def test_sphere_norms():
    ds = sphere(100, radius=2.5, seed=0)
    np.testing.assert_allclose(np.linalg.norm(ds.data, axis=0), 2.5, atol=1e-12)


def test_trefoil_at_zero():
    np.testing.assert_allclose(trefoil_point(0.0).ravel(), [0.0, -1.0, 0.0], atol=1e-15)
    ds = trefoil(30, seed=2)
    np.testing.assert_allclose(ds.data, trefoil_point(ds.latent), atol=1e-14)


class TestEmbed:
    def test_identity_option(self):
        D = np.arange(6.0).reshape(3, 2)
        np.testing.assert_array_equal(embed(D, 3, identity=True), D)
        np.testing.assert_array_equal(embed(D, 5, identity=True)[3:], 0)

    def test_isometry(self):
        ds = swiss_roll(40, seed=0)
        E = embed_dataset(ds, 50, seed=4).data
        G0 = ds.data.T @ ds.data
        np.testing.assert_allclose(E.T @ E, G0, rtol=1e-10, atol=1e-8)

    def test_orthonormal(self):
        U = random_orthonormal(20, 4, 9)
        np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-13)

    def test_too_small(self):
        with pytest.raises(DataError):
            embed(np.zeros((3, 4)), 2)


class TestInjection:
    def setup_method(self):
        self.ds = embed_dataset(swiss_roll(50, seed=1), 6, seed=2)

    def test_uniform_in_box(self):
        out = inject_uniform_outliers(self.ds, 30, seed=3)
        inl = out.data[:, out.labels >= 0]
        B = out.data[:, out.is_outlier]
        lo, hi = inl.min(axis=1), inl.max(axis=1)
        assert np.all(B >= lo[:, None]) and np.all(B <= hi[:, None])
        assert np.sum(out.labels == OUTLIER_CODES["random"]) == 30

    def test_n2_zero_is_shuffle(self):
        out = inject_uniform_outliers(self.ds, 0, seed=3)
        perm = np.array(out.params["permutation"])
        np.testing.assert_array_equal(out.data, self.ds.data[:, perm])

    def test_permutation_round_trip(self):
        out = inject_repetitive_outliers(self.ds, 20, 0.1, seed=4)
        perm = np.array(out.params["permutation"])
        inv = np.argsort(perm)
        original = out.data[:, inv]
        np.testing.assert_array_equal(original[:, :50], self.ds.data)
        np.testing.assert_array_equal(out.labels[inv][:50], self.ds.labels)
        assert np.all(out.labels[inv][50:] < 0)

    @pytest.mark.parametrize("n2, frac, copies", [(100, 0.1, 10), (7, 0.1, 1), (5, 1.0, 5)])
    def test_repetitive_counts(self, n2, frac, copies):
        out = inject_repetitive_outliers(self.ds, n2, frac, seed=5)
        reps = out.data[:, out.labels == OUTLIER_CODES["repetitive"]]
        assert reps.shape[1] == copies
        np.testing.assert_array_equal(reps, np.repeat(reps[:, :1], copies, axis=1))

    def test_repetitive_zero_fraction_is_uniform(self):
        a = inject_repetitive_outliers(self.ds, 12, 0.0, seed=6)
        b = inject_uniform_outliers(self.ds, 12, seed=6)
        np.testing.assert_array_equal(a.data, b.data)

    def test_structured_rank(self):
        out = inject_structured_outliers(self.ds, 40, rank=2, seed=7)
        B = out.data[:, out.is_outlier]
        s = np.linalg.svd(B, compute_uv=False)
        assert s[2] < 1e-10 * s[0]
        assert np.all(out.labels[out.is_outlier] == OUTLIER_CODES["structured"])

    def test_structured_scale(self):
        big = swiss_roll(400, seed=1)
        out = inject_structured_outliers(big, 4000, rank=2, scale=2.0, seed=8)
        B = out.data[:, out.is_outlier]
        A = big.data
        v = np.mean(np.sum((A - A.mean(axis=1, keepdims=True)) ** 2, axis=0))
        assert np.mean(np.sum(B ** 2, axis=0)) == pytest.approx(4 * v, rel=0.1)

    def test_bad_arguments(self):
        with pytest.raises(DataError):
            inject_repetitive_outliers(self.ds, 5, 1.5)
        with pytest.raises(DataError):
            inject_structured_outliers(self.ds, 5, rank=7)


def test_clustered_separation():
    ds = clustered_gaussians(4, 30, separation=10, dim=3, seed=0)
    means = np.array(ds.params["means"])
    for i in range(4):
        for j in range(i + 1, 4):
            assert np.linalg.norm(means[:, i] - means[:, j]) >= 10 - 1e-9
    assert np.bincount(ds.labels).tolist() == [30] * 4


def test_single_cluster():
    assert set(clustered_gaussians(1, 10, seed=1).labels) == {0}


class TestMakeDataset:
    def test_shapes_and_purity(self):
        a = make_dataset("swissroll", 40, 10, "structured", 12, seed=3)
        b = make_dataset("swissroll", 40, 10, "structured", 12, seed=3)
        assert a.data.shape == (12, 50)
        np.testing.assert_array_equal(a.data, b.data)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.params["dataset"] == "swissroll" and a.params["seed"] == 3

    @pytest.mark.parametrize("name", ["swissroll", "sphere", "trefoil", "clusters"])
    def test_each_generator(self, name):
        ds = make_dataset(name, 30, 6, "uniform", 10, seed=1)
        assert ds.data.shape[0] == 10 and np.sum(ds.is_outlier) == 6

    def test_unknown(self):
        with pytest.raises(DataError):
            make_dataset("moons")
        with pytest.raises(DataError):
            make_dataset(outliers="gaussian")
