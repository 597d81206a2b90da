"""Randomized column-sketch solver with error-driven refinement.

Only a subset of samples (the sketch) may act as representatives.  After
each solve, every sample's squared feature-space reconstruction error is
computed and the worst-represented samples outside the sketch are added.
"""

from dataclasses import dataclass, field
import math
from typing import List
import warnings

import numpy as np

from repsel.errors import DataError
from repsel.solver import RepresentationMatrix, SolverConfig, solve

SKETCH_ALGORITHM = "pcg64-permutation-prefix/v1"


@dataclass(frozen=True)
class SketchConfig:
    r: int
    r_hat: int = 0
    iterations: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.r < 1:
            raise DataError("sketch size r must be >= 1")
        if self.r_hat < 0:
            raise DataError("r_hat must be >= 0")
        if self.iterations < 1:
            raise DataError("iterations must be >= 1")

    @classmethod
    def default_for(cls, n: int, seed: int = 0) -> "SketchConfig":
        r = min(n, max(100, math.ceil(0.05 * n)))
        return cls(r=r, r_hat=math.ceil(0.1 * r), iterations=3, seed=seed)


@dataclass
class SketchState:
    sampled_indices: List[int]
    errors: np.ndarray = None
    history: list = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self):
        return {
            "algorithm": SKETCH_ALGORITHM,
            "sampled_indices": [int(i) for i in self.sampled_indices],
            "history": self.history,
            "warnings": list(self.warnings),
        }


def random_sketch(n: int, r: int, seed: int) -> np.ndarray:
    """First ``r`` entries of a seeded PCG64 permutation of ``range(n)``."""
    if not 1 <= r <= n:
        raise DataError(f"sketch size must satisfy 1 <= r <= n, got r={r}, n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.permutation(n)[:r]


def slice_kernel(K, indices):
    """``(Ks, Kc)`` = ``(K[idx][:, idx], K[:, idx])``."""
    K = np.asarray(K)
    idx = np.asarray(indices, dtype=np.int64)
    n = K.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"sketch index out of range for kernel of size {n}")
    if len(np.unique(idx)) != idx.size:
        raise DataError("sketch indices must be distinct")
    Kc = K[:, idx]
    return Kc[idx], Kc


def misrepresentation_errors(K, indices, Rc) -> np.ndarray:
    """``e_j = k_jj - 2 Kc[j] @ r_j + r_j @ Ks @ r_j`` for every sample ``j``."""
    Rc = Rc.values if isinstance(Rc, RepresentationMatrix) else np.asarray(Rc, dtype=np.float64)
    Ks, Kc = slice_kernel(K, indices)
    n = K.shape[0]
    if Rc.shape != (Ks.shape[0], n):
        raise DataError(f"R_c must be {Ks.shape[0]} x {n}, got {Rc.shape}")
    e = (np.diag(K)
         - 2.0 * np.einsum("jr,rj->j", Kc, Rc)
         + np.einsum("rj,rj->j", Rc, Ks @ Rc))
    # rounding can push a true zero slightly negative
    return np.where((e < 0) & (e >= -1e-10), 0.0, e)


def refine(state: SketchState, r_hat: int) -> List[int]:
    """Append the ``r_hat`` unsampled indices with the largest error."""
    current = list(state.sampled_indices)
    if r_hat == 0:
        return current
    errors = np.asarray(state.errors)
    mask = np.ones(errors.size, dtype=bool)
    mask[current] = False
    pool = np.flatnonzero(mask)
    if r_hat > pool.size:
        msg = f"r_hat={r_hat} exceeds the {pool.size} unsampled indices; adding all of them"
        state.warnings.append(msg)
        warnings.warn(msg, stacklevel=2)
    order = np.lexsort((pool, -errors[pool]))
    return current + [int(i) for i in pool[order[:r_hat]]]


def solve_sketched(K, sk: SketchConfig, sv: SolverConfig):
    """Sketch, solve, score, refine; ``sk.iterations`` solves in total.

    Refinement happens between solves, so the returned matrix always
    belongs to the final sketch.  Returns
    ``(RepresentationMatrix, SketchState, SolveDiagnostics)``.
    """
    K = np.asarray(K, dtype=np.float64)
    n = K.shape[0]
    if sk.r > n:
        raise DataError(f"sketch size r={sk.r} exceeds n={n}")
    state = SketchState([int(i) for i in random_sketch(n, sk.r, sk.seed)])
    rep = diag = None
    added = []
    for it in range(sk.iterations):
        Ks, Kc = slice_kernel(K, state.sampled_indices)
        rep, diag = solve(Ks, Kc, sv, candidate_indices=state.sampled_indices)
        state.errors = misrepresentation_errors(K, state.sampled_indices, rep)
        state.history.append({
            "iteration": it,
            "sketch_size": len(state.sampled_indices),
            "objective": diag.objective,
            "solver_iterations": diag.iterations,
            "converged": diag.converged,
            "added": added,
            "total_error": float(state.errors.sum()),
        })
        if it + 1 < sk.iterations:
            new = refine(state, sk.r_hat)
            added = new[len(state.sampled_indices):]
            state.sampled_indices = new
    return rep, state, diag
