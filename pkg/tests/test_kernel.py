import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from repsel.errors import AsymmetricKernelError, DataError
from repsel.kernel import (
    KernelSpec,
    build_gram,
    kernel_distance,
    median_heuristic_gamma,
    psd_repair,
    symmetrize,
    validate_psd,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def test_linear_identity():
    np.testing.assert_array_equal(build_gram(np.eye(2), KernelSpec("linear")), np.eye(2))


def test_rbf_diagonal_is_one():
    rng = np.random.default_rng(0)
    K = build_gram(rng.standard_normal((4, 30)), KernelSpec("rbf"))
    np.testing.assert_array_equal(np.diag(K), np.ones(30))


def test_cosine_parallel_columns():
    K = build_gram(np.array([[1.0, 2.0], [0.0, 0.0]]), KernelSpec("cosine"))
    np.testing.assert_allclose(K, np.ones((2, 2)), atol=1e-15)


def test_cosine_zero_column_named():
    D = np.array([[1.0, 0.0, 2.0], [1.0, 0.0, 1.0]])
    with pytest.raises(DataError, match="column 1"):
        build_gram(D, KernelSpec("cosine"))


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_rejected(bad):
    D = np.ones((2, 3))
    D[1, 2] = bad
    with pytest.raises(DataError):
        build_gram(D, KernelSpec("linear"))


def test_spec_validation():
    with pytest.raises(DataError):
        KernelSpec("rbf", gamma=0.0)
    with pytest.raises(DataError):
        KernelSpec("poly")
    assert KernelSpec("precomputed").repair and not KernelSpec("rbf").repair


def test_explicit_gamma_matches_formula():
    D = np.array([[0.0, 1.0, 3.0]])
    K = build_gram(D, KernelSpec("rbf", gamma=0.5))
    np.testing.assert_allclose(K[0, 2], np.exp(-0.5 * 9.0), rtol=1e-14)


def test_median_heuristic():
    # distances^2 among {0, 1, 3}: 1, 9, 4 -> median 4, m = 1
    assert median_heuristic_gamma(np.array([[0.0, 1.0, 3.0]])) == pytest.approx(0.25)


def test_built_kernels_exactly_symmetric():
    rng = np.random.default_rng(3)
    D = rng.standard_normal((7, 40))
    for kind in ("linear", "cosine", "rbf"):
        K = build_gram(D, KernelSpec(kind))
        assert np.array_equal(K, K.T)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 12)), elements=finite),
       st.sampled_from(["linear", "rbf"]))
def test_built_kernels_pass_psd(D, kind):
    assert validate_psd(build_gram(D, KernelSpec(kind)), tol=1e-8).is_psd


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 12)),
              elements=st.floats(0.5, 50)))
def test_cosine_passes_psd(D):
    assert validate_psd(build_gram(D, KernelSpec("cosine")), tol=1e-8).is_psd


def test_validate_psd_examples():
    r = validate_psd(np.eye(3), tol=0)
    assert r.is_psd and r.symmetric and r.min_eigenvalue == pytest.approx(1.0)
    r = validate_psd(np.diag([1.0, -0.5]))
    assert not r.is_psd and r.min_eigenvalue == pytest.approx(-0.5)
    # eigenvalues of [[1,2],[2,1]] are 1 +- 2
    assert validate_psd(np.array([[1.0, 2.0], [2.0, 1.0]])).min_eigenvalue == pytest.approx(-1.0)


def test_validate_psd_non_square():
    with pytest.raises(DataError):
        validate_psd(np.ones((2, 3)))


def test_psd_repair_examples():
    np.testing.assert_allclose(psd_repair(np.diag([1.0, -0.5])), np.diag([1.0, 0.0]), atol=1e-15)
    np.testing.assert_allclose(psd_repair(np.array([[1.0, 2.0], [2.0, 1.0]])), np.full((2, 2), 1.5),
                               atol=1e-14)
    K = np.array([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(psd_repair(K), K, atol=1e-10)


def test_psd_repair_idempotent_and_optimal():
    rng = np.random.default_rng(1)
    for n in range(2, 11):
        A = rng.standard_normal((n, n))
        K = A + A.T
        fixed = psd_repair(K)
        np.testing.assert_allclose(psd_repair(fixed), fixed, atol=1e-10)
        # oracle: clip by hand, then compare against random PSD competitors
        w, V = np.linalg.eigh(K)
        manual = (V * np.clip(w, 0, None)) @ V.T
        np.testing.assert_allclose(fixed, manual, atol=1e-10)
        best = np.linalg.norm(K - fixed)
        for _ in range(20):
            B = rng.standard_normal((n, n))
            other = manual + 0.1 * B @ B.T
            assert best <= np.linalg.norm(K - other) + 1e-12


def test_symmetrize_tolerance():
    K = np.array([[1.0, 0.5], [0.5 + 1e-10, 1.0]])
    out = symmetrize(K)
    assert out[0, 1] == out[1, 0]
    with pytest.raises(AsymmetricKernelError) as exc:
        symmetrize(np.array([[1.0, 0.5], [0.7, 1.0]]))
    assert exc.value.max_violation == pytest.approx(0.2)


def test_precomputed_defaults_to_repair():
    K = build_gram(np.array([[1.0, 2.0], [2.0, 1.0]]), KernelSpec("precomputed"))
    assert validate_psd(K, tol=1e-10).is_psd


def test_kernel_distance_examples():
    assert kernel_distance(np.eye(2), 0, 1) == pytest.approx(np.sqrt(2))
    assert kernel_distance(np.ones((2, 2)), 0, 1) == 0.0
    assert kernel_distance(np.eye(3) * 5, 2, 2) == 0.0
    with pytest.raises(IndexError):
        kernel_distance(np.eye(2), 0, 2)


def test_kernel_distance_triangle_inequality():
    rng = np.random.default_rng(7)
    for n in (5, 12, 20):
        A = rng.standard_normal((n, 3))
        K = A @ A.T
        d = np.array([[kernel_distance(K, i, j) for j in range(n)] for i in range(n)])
        assert np.allclose(d, d.T)
        for i, j, k in itertools.product(range(n), repeat=3):
            assert d[i, k] <= d[i, j] + d[j, k] + 1e-9
