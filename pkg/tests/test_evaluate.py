import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_hull_vertices, random_psd
from repsel.errors import DataError
from repsel.evaluate import (
    coverage_score,
    hull_vertices_2d,
    knn_predict,
    outlier_f1,
    rep_knn_accuracy,
    train_val_test_split,
)
from repsel.kernel import KernelSpec, build_gram
from repsel.solver import RepresentationMatrix, SolverConfig, lambda_critical, solve


class TestOutlierF1:
    def test_exact(self):
        truth = np.array([0, -1, 0, -3, 1])
        rep = outlier_f1(truth, [1, 3])
        assert rep.f1 == 1.0 and (rep.tp, rep.fp, rep.tn, rep.fn) == (2, 0, 3, 0)

    def test_empty_prediction(self):
        assert outlier_f1(np.array([True, False]), []).f1 == 0.0

    def test_arithmetic(self):
        truth = np.zeros(20, dtype=bool)
        truth[:10] = True
        rep = outlier_f1(truth, list(range(8)) + [10, 11])
        assert (rep.precision, rep.recall) == (pytest.approx(0.8), pytest.approx(0.8))
        assert rep.f1 == pytest.approx(0.8)
        assert rep.tp + rep.fp + rep.tn + rep.fn == 20

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.booleans(), min_size=1, max_size=40), st.randoms(use_true_random=False))
    def test_order_invariant(self, truth, rnd):
        truth = np.array(truth)
        n = truth.size
        pred = [i for i in range(n) if rnd.random() < 0.5]
        perm = np.array(rnd.sample(range(n), n))
        inv = np.argsort(perm)
        a = outlier_f1(truth, pred)
        b = outlier_f1(truth[perm], [int(inv[i]) for i in pred])
        assert a == b
        p, r = a.precision, a.recall
        assert a.f1 == (pytest.approx(2 * p * r / (p + r)) if p + r else 0.0)

    def test_out_of_range(self):
        with pytest.raises(DataError):
            outlier_f1(np.array([True]), [3])


class TestCoverage:
    def test_zero(self):
        assert coverage_score(np.eye(3), np.zeros((3, 3)), 1.0) == 0.0

    def test_optimum_dominates(self):
        rng = np.random.default_rng(0)
        K = random_psd(rng, 10)
        lam = 4 * lambda_critical(K)
        R, _ = solve(K, K, SolverConfig(lam, tol_abs=1e-10, tol_rel=1e-10, max_iter=100000))
        best = coverage_score(K, R, lam)
        for _ in range(50):
            other = R.values + 0.05 * rng.standard_normal(R.shape)
            assert best >= coverage_score(K, other, lam) - 1e-9

    def test_accepts_sketched_matrix(self):
        K = random_psd(np.random.default_rng(1), 6)
        rep = RepresentationMatrix(np.ones((2, 6)), [4, 1])
        assert coverage_score(K, rep, 0.7) == pytest.approx(coverage_score(K, rep.dense(), 0.7))


class TestHull:
    def test_square_with_center(self):
        assert hull_vertices_2d([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]]) == {0, 1, 2, 3}

    def test_triangle(self):
        assert hull_vertices_2d([[0, 0], [3, 0], [0, 2]]) == {0, 1, 2}

    def test_collinear_boundary_excluded(self):
        assert hull_vertices_2d([[0, 0], [1, 0], [2, 0], [1, 1]]) == {0, 2, 3}

    def test_collinear_raises(self):
        with pytest.raises(DataError):
            hull_vertices_2d([[0, 0], [1, 1], [2, 2]])

    def test_accepts_column_layout(self):
        assert hull_vertices_2d(np.array([[0, 3, 0], [0, 0, 2]])) == {0, 1, 2}

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(2)
        for trial in range(200):
            n = int(rng.integers(3, 26))
            if trial % 4 == 0:
                # integer grid forces collinear and duplicate points
                P = rng.integers(0, 4, size=(n, 2)).astype(float)
            else:
                P = rng.standard_normal((n, 2))
            try:
                got = hull_vertices_2d(P)
            except DataError:
                continue
            assert got == brute_hull_vertices(P), trial


class TestKnn:
    def test_coincident_training_point(self):
        rng = np.random.default_rng(3)
        D = rng.standard_normal((2, 12))
        K = build_gram(D, KernelSpec("rbf", gamma=0.5))
        labels = np.arange(12) % 3
        assert rep_knn_accuracy(list(range(12)), K, labels, [5, 7], k=1) == 1.0

    def test_single_representative(self):
        K = np.eye(5)
        np.testing.assert_array_equal(knn_predict(K, [2], [0, 1, 7, 1, 0], [0, 1, 3]), [7, 7, 7])

    def test_two_clusters(self):
        rng = np.random.default_rng(4)
        D = np.hstack([rng.normal(0, 0.2, (2, 20)), rng.normal(10, 0.2, (2, 20))])
        labels = np.repeat([0, 1], 20)
        K = build_gram(D, KernelSpec("rbf", gamma=0.05))
        assert rep_knn_accuracy([0, 20], K, labels, range(40), k=1) == 1.0

    def test_tie_goes_to_smaller_distance_sum(self):
        K = np.array([[1.0, 0.9, 0.5], [0.9, 1.0, 0.0], [0.5, 0.0, 1.0]])
        # test 0 has reps 1 (label 5, near) and 2 (label 3, far): one vote each
        assert knn_predict(K, [1, 2], [0, 5, 3], [0], k=2)[0] == 5

    def test_no_reps(self):
        with pytest.raises(DataError):
            rep_knn_accuracy([], np.eye(2), [0, 1], [0])


def test_split():
    tr, va, te = train_val_test_split(100, seed=1)
    assert (len(tr), len(va), len(te)) == (70, 10, 20)
    assert sorted(np.concatenate([tr, va, te]).tolist()) == list(range(100))
    np.testing.assert_array_equal(tr, train_val_test_split(100, seed=1)[0])
