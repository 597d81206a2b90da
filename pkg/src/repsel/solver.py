"""ADMM solver for the row-sparse kernel self-representation program.

Minimizes, over an ``r x n`` matrix ``R`` whose rows belong to candidate
representatives and whose columns belong to all samples::

    (lam / 2) * tr(R.T @ Ks @ R - 2 * Kc @ R) + sum_i ||R[i, :]||_2

``Ks`` is the ``r x r`` kernel block among candidates and ``Kc`` the
``n x r`` block between all samples and candidates.  The full problem is
``Ks = Kc = K``.

The iteration splits ``R`` into a smooth copy ``Delta`` and the row-sparse
copy ``R`` with scaled dual ``Q``::

    Delta <- (lam Ks + rho I)^-1 (lam Kc.T + rho (R - Q))
    R     <- row-wise group soft threshold of (Delta + Q) at 1 / rho
    Q     <- Q + Delta - R
"""

from dataclasses import dataclass, field
import math
from typing import Optional, Sequence

import numpy as np

from repsel.errors import DataError, NotPSDError

# eigen-directions with lam * s <= _DROP * rho change (lam Ks + rho I)^-1 by
# less than one ulp relative to 1 / rho, so they are folded into the identity part;
# eigenvalues below the eigensolver's own noise floor are treated as zero too
_DROP = 1e-15
_NOISE = 64 * np.finfo(float).eps
PSD_RTOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    rho: float = 1.0
    tol_abs: float = 1e-6
    tol_rel: float = 1e-4
    max_iter: int = 10000

    def __post_init__(self):
        if not self.lam > 0:
            raise DataError(f"lambda must be positive, got {self.lam}")
        if not self.rho > 0:
            raise DataError(f"rho must be positive, got {self.rho}")
        if not (self.tol_abs > 0 and self.tol_rel > 0):
            raise DataError("tolerances must be positive")
        if self.max_iter < 1:
            raise DataError("max_iter must be >= 1")


@dataclass
class RepresentationMatrix:
    """Coefficients ``values[i, j]``: weight of candidate ``candidate_indices[i]`` in sample ``j``."""

    values: np.ndarray
    candidate_indices: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError("representation matrix must be 2-D")
        r, n = self.values.shape
        if self.candidate_indices is None:
            self.candidate_indices = np.arange(r)
        self.candidate_indices = np.asarray(self.candidate_indices, dtype=np.int64)
        if self.candidate_indices.shape != (r,):
            raise DataError(f"expected {r} candidate indices, got {self.candidate_indices.shape}")
        if r > n:
            raise DataError(f"more candidates ({r}) than samples ({n})")
        if len(np.unique(self.candidate_indices)) != r:
            raise DataError("candidate indices must be distinct")
        if r and (self.candidate_indices.min() < 0 or self.candidate_indices.max() >= n):
            raise DataError("candidate index out of range")

    @property
    def shape(self):
        return self.values.shape

    def row_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def dense(self) -> np.ndarray:
        """Zero-padded ``n x n`` matrix with rows placed at their sample index."""
        n = self.values.shape[1]
        out = np.zeros((n, n))
        out[self.candidate_indices] = self.values
        return out


@dataclass
class SolveDiagnostics:
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    converged: bool

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "objective": self.objective,
            "converged": self.converged,
        }


def _check_blocks(Ks, Kc):
    Ks = np.asarray(Ks, dtype=np.float64)
    Kc = np.asarray(Kc, dtype=np.float64)
    if Ks.ndim != 2 or Ks.shape[0] != Ks.shape[1]:
        raise DataError(f"Ks must be square, got {Ks.shape}")
    if Kc.ndim != 2 or Kc.shape[1] != Ks.shape[0]:
        raise DataError(f"Kc must be n x {Ks.shape[0]}, got {Kc.shape}")
    return Ks, Kc


def objective(Ks, Kc, R, lam: float) -> float:
    Ks, Kc = _check_blocks(Ks, Kc)
    R = R.values if isinstance(R, RepresentationMatrix) else np.asarray(R, dtype=np.float64)
    if R.shape != (Ks.shape[0], Kc.shape[0]):
        raise DataError(f"R must be {Ks.shape[0]} x {Kc.shape[0]}, got {R.shape}")
    quad = np.sum(R * (Ks @ R))
    lin = np.sum(Kc * R.T)
    return float(0.5 * lam * (quad - 2.0 * lin) + np.linalg.norm(R, axis=1).sum())


class ShiftedInverse:
    """Cached ``(lam Ks + rho I)^-1`` built from one symmetric eigendecomposition.

    Stored as ``I / rho + V diag(c) V.T`` over the eigen-directions that
    matter numerically, so applying it costs ``O(r k n)`` with ``k`` the
    numerical rank of ``Ks`` rather than ``O(r^2 n)``.
    """

    def __init__(self, Ks, lam, rho, psd_rtol=PSD_RTOL):
        w, V = np.linalg.eigh(Ks)
        scale = max(1.0, abs(w[-1])) if w.size else 1.0
        if w.size and w[0] < -psd_rtol * scale:
            raise NotPSDError(w[0], psd_rtol * scale)
        self.rho = rho
        floor = _NOISE * w.size * scale if w.size else 0.0
        keep = (lam * w > _DROP * rho) & (w > floor)
        self.eigvals = w[keep]
        self.V = V[:, keep]
        self.coef = 1.0 / (lam * self.eigvals + rho) - 1.0 / rho
        # past half rank one dense GEMM beats two thin ones
        self.dense = None
        if 2 * self.rank > w.size:
            M = (self.V * self.coef) @ self.V.T
            M[np.diag_indices_from(M)] += 1.0 / rho
            self.dense = 0.5 * (M + M.T)

    @property
    def rank(self):
        return self.V.shape[1]

    def apply(self, X):
        if self.dense is not None:
            return self.dense @ X
        out = X / self.rho
        if self.rank:
            out += self.V @ (self.coef[:, None] * (self.V.T @ X))
        return out


def delta_update(Ks, Kc, R, Q, lam, rho, factor: Optional[ShiftedInverse] = None):
    """Smooth-block step; pass ``factor`` to reuse a cached factorization."""
    Ks, Kc = _check_blocks(Ks, Kc)
    if factor is None:
        factor = ShiftedInverse(Ks, lam, rho)
    return factor.apply(lam * Kc.T + rho * (R - Q))


def row_shrink(v, rho: float):
    """Group soft threshold ``max(0, 1 - (1/rho) / ||v||) * v``."""
    v = np.asarray(v, dtype=np.float64)
    nrm = np.linalg.norm(v)
    if nrm <= 1.0 / rho:
        return np.zeros_like(v)
    return (1.0 - 1.0 / (rho * nrm)) * v


def shrink_rows(W, rho: float):
    norms = np.linalg.norm(W, axis=1)
    scale = np.zeros_like(norms)
    live = norms > 1.0 / rho
    scale[live] = 1.0 - 1.0 / (rho * norms[live])
    return W * scale[:, None]


def dual_update(Q, Delta, R):
    Q, Delta, R = (np.asarray(a, dtype=np.float64) for a in (Q, Delta, R))
    if not Q.shape == Delta.shape == R.shape:
        raise DataError(f"shape mismatch: {Q.shape}, {Delta.shape}, {R.shape}")
    return Q + Delta - R


def lambda_critical(Kc) -> float:
    """Largest lambda for which ``R = 0`` is optimal: ``1 / max_i ||Kc[:, i]||``."""
    Kc = np.asarray(Kc, dtype=np.float64)
    top = np.linalg.norm(Kc, axis=0).max() if Kc.size else 0.0
    if top == 0:
        raise DataError("lambda_critical undefined for an all-zero kernel")
    return float(1.0 / top)


def solve(Ks, Kc, config: SolverConfig, candidate_indices: Optional[Sequence[int]] = None):
    """Run ADMM from all-zero variables.

    Returns ``(RepresentationMatrix, SolveDiagnostics)``.  The returned
    matrix is the thresholded variable, so its zero rows are exact zeros.
    Hitting ``max_iter`` is reported through ``converged=False``, not raised.
    """
    Ks, Kc = _check_blocks(Ks, Kc)
    r, n = Ks.shape[0], Kc.shape[0]
    if r > n:
        raise DataError(f"more candidates ({r}) than samples ({n})")
    lam, rho = config.lam, config.rho
    factor = ShiftedInverse(Ks, lam, rho)
    # constant part of the Delta step, lam (lam Ks + rho I)^-1 Kc.T
    C = lam * factor.apply(Kc.T)

    R = np.zeros((r, n))
    Q = np.zeros((r, n))
    eps_abs = config.tol_abs * math.sqrt(r * n)
    primal = dual = float("inf")
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        Delta = C + rho * factor.apply(R - Q)
        W = Delta + Q
        R_new = shrink_rows(W, rho)
        Q = W - R_new

        primal = float(np.linalg.norm(Delta - R_new))
        dual = float(rho * np.linalg.norm(R_new - R))
        R = R_new
        eps_pri = eps_abs + config.tol_rel * max(np.linalg.norm(Delta), np.linalg.norm(R))
        eps_dual = eps_abs + config.tol_rel * rho * np.linalg.norm(Q)
        if primal <= eps_pri and dual <= eps_dual:
            converged = True
            break

    rep = RepresentationMatrix(R, candidate_indices)
    diag = SolveDiagnostics(it, primal, dual, objective(Ks, Kc, R, lam), converged)
    return rep, diag


def solve_full(K, config: SolverConfig):
    """Solve the full problem where every sample is a candidate."""
    return solve(K, K, config)
