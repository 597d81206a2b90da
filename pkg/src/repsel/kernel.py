"""Gram matrix construction, validation and PSD repair.

Data matrices follow the column convention: shape ``(m, n)`` with one
sample per column.  Kernel matrices are plain ``(n, n)`` float arrays.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from repsel.errors import AsymmetricKernelError, DataError

KERNEL_KINDS = ("linear", "cosine", "rbf", "precomputed")

# relative asymmetry silently fixed by (K + K.T) / 2
SYMMETRY_RTOL = 1e-8
MEDIAN_SUBSAMPLE = 200


@dataclass(frozen=True)
class KernelSpec:
    """Which similarity to compute.

    ``gamma`` is only used by ``rbf``; ``None`` selects the median
    heuristic.  ``psd_repair=None`` means "on for precomputed, off for
    built-in kernels".
    """

    kind: str = "rbf"
    gamma: Optional[float] = None
    psd_repair: Optional[bool] = None
    psd_tolerance: float = 1e-8

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise DataError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.gamma is not None and not self.gamma > 0:
            raise DataError(f"rbf gamma must be positive, got {self.gamma}")
        if self.psd_tolerance < 0:
            raise DataError("psd_tolerance must be non-negative")

    @property
    def repair(self) -> bool:
        if self.psd_repair is None:
            return self.kind == "precomputed"
        return bool(self.psd_repair)


class PSDReport(NamedTuple):
    symmetric: bool
    min_eigenvalue: float
    is_psd: bool


def as_data_matrix(D) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] < 1 or D.shape[1] < 1:
        raise DataError(f"data matrix must be 2-D with at least one row and column, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise DataError("data matrix contains NaN or Inf")
    return D


def _mirror_upper(G):
    # every entry comes from the upper triangle only -> exact symmetry
    return np.triu(G) + np.triu(G, 1).T


def pairwise_sq_dists(D):
    """Squared Euclidean distances between the columns of ``D``."""
    sq = np.einsum("ij,ij->j", D, D)
    G = D.T @ D
    d2 = sq[:, None] + sq[None, :] - 2.0 * G
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return _mirror_upper(d2)


def median_heuristic_gamma(D) -> float:
    """``1 / (m * median squared distance)`` over a fixed 200-sample subsample."""
    m, n = D.shape
    if n > MEDIAN_SUBSAMPLE:
        idx = np.sort(np.random.default_rng(0).choice(n, MEDIAN_SUBSAMPLE, replace=False))
        D = D[:, idx]
    d2 = pairwise_sq_dists(D)
    vals = d2[np.triu_indices(D.shape[1], 1)]
    vals = vals[vals > 0]
    if vals.size == 0:
        return 1.0 / m
    return float(1.0 / (m * np.median(vals)))


def check_square(K) -> np.ndarray:
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError(f"kernel matrix must be square, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise DataError("kernel matrix contains NaN or Inf")
    return K


def symmetrize(K, rtol=SYMMETRY_RTOL) -> np.ndarray:
    """Return ``(K + K.T) / 2`` if the asymmetry is within ``rtol``, else raise."""
    K = check_square(K)
    diff = np.abs(K - K.T)
    scale = np.maximum(1.0, np.maximum(np.abs(K), np.abs(K.T)))
    if np.any(diff > rtol * scale):
        raise AsymmetricKernelError(diff.max())
    return 0.5 * (K + K.T)


def build_gram(D, spec: KernelSpec = KernelSpec()) -> np.ndarray:
    """Compute the ``n x n`` similarity matrix between the columns of ``D``.

    For ``kind="precomputed"`` ``D`` is taken to be the kernel itself; it
    is symmetrized (within tolerance) and, if requested, PSD-repaired.
    """
    if spec.kind == "precomputed":
        K = symmetrize(D)
        return psd_repair(K) if spec.repair else K

    D = as_data_matrix(D)
    if spec.kind == "linear":
        K = _mirror_upper(D.T @ D)
    elif spec.kind == "cosine":
        norms = np.linalg.norm(D, axis=0)
        zero = np.flatnonzero(norms == 0)
        if zero.size:
            raise DataError(f"cosine kernel undefined for zero column {int(zero[0])}")
        U = D / norms
        K = _mirror_upper(U.T @ U)
        np.fill_diagonal(K, 1.0)
    else:
        gamma = spec.gamma if spec.gamma is not None else median_heuristic_gamma(D)
        K = np.exp(-gamma * pairwise_sq_dists(D))
    return psd_repair(K) if spec.repair else K


def resolved_gamma(D, spec: KernelSpec) -> Optional[float]:
    """The gamma ``build_gram`` would use, or None for non-rbf kernels."""
    if spec.kind != "rbf":
        return None
    return spec.gamma if spec.gamma is not None else median_heuristic_gamma(as_data_matrix(D))


def validate_psd(K, tol: float = 1e-8) -> PSDReport:
    K = check_square(K)
    diff = np.abs(K - K.T)
    symmetric = bool(np.all(diff <= 1e-12 * np.maximum(1.0, np.abs(K))))
    lam_min = float(np.linalg.eigvalsh(0.5 * (K + K.T))[0])
    return PSDReport(symmetric, lam_min, lam_min >= -tol)


def psd_repair(K) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: clip negative eigenvalues to 0."""
    K = symmetrize(K)
    w, V = np.linalg.eigh(K)
    if w[0] >= 0:
        return K
    w = np.clip(w, 0.0, None)
    return _mirror_upper((V * w) @ V.T)


def kernel_distance(K, i: int, j: int) -> float:
    """Feature-space distance ``sqrt(k_ii + k_jj - 2 k_ij)``."""
    n = K.shape[0]
    for idx in (i, j):
        if not 0 <= idx < n:
            raise IndexError(f"index {idx} out of range for kernel of size {n}")
    if i == j:
        return 0.0
    return float(np.sqrt(max(0.0, K[i, i] + K[j, j] - 2.0 * K[i, j])))
