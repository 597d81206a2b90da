"""From an optimal representation matrix to a ranked representative set.

Pipeline: non-zero rows -> influence ranking -> diversity pruning ->
outlier rejection -> optional truncation.  Ties are always broken by
ascending sample index so results are fully deterministic.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import warnings

import numpy as np

from repsel.errors import DataError
from repsel.solver import RepresentationMatrix


@dataclass(frozen=True)
class SelectionConfig:
    row_tol: float = 0.0
    diversity_tau: float = 0.95
    outlier_theta: float = 0.9
    max_k: Optional[int] = None

    def __post_init__(self):
        if self.row_tol < 0:
            raise DataError("row_tol must be non-negative")
        if not 0.0 <= self.diversity_tau <= 1.0:
            raise DataError("diversity_tau must lie in [0, 1]")
        if not 0.0 <= self.outlier_theta <= 1.0:
            raise DataError("outlier_theta must lie in [0, 1]")
        if self.max_k is not None and self.max_k < 1:
            raise DataError("max_k must be a positive integer")


@dataclass
class SelectionResult:
    representatives: List[int] = field(default_factory=list)
    influence: dict = field(default_factory=dict)
    op_scores: dict = field(default_factory=dict)
    pruned_as_redundant: List[Tuple[int, int]] = field(default_factory=list)
    rejected_as_outliers: List[int] = field(default_factory=list)
    truncated: List[int] = field(default_factory=list)

    def to_dict(self):
        # JSON object keys must be strings; insertion order follows the ranking
        return {
            "representatives": [int(i) for i in self.representatives],
            "influence": {str(i): float(v) for i, v in self.influence.items()},
            "op_scores": {str(i): float(v) for i, v in self.op_scores.items()},
            "pruned": [[int(i), int(j)] for i, j in self.pruned_as_redundant],
            "outliers": [int(i) for i in self.rejected_as_outliers],
            "truncated": [int(i) for i in self.truncated],
        }


def _as_rep(R) -> RepresentationMatrix:
    return R if isinstance(R, RepresentationMatrix) else RepresentationMatrix(R)


def nonzero_rows(R, row_tol: float = 0.0) -> np.ndarray:
    """Row positions whose l2 norm exceeds ``row_tol``."""
    R = _as_rep(R)
    return np.flatnonzero(R.row_norms() > row_tol)


def influence_ranking(R, row_tol: float = 0.0) -> List[Tuple[int, float]]:
    """``(sample_index, row_norm)`` for non-zero rows, most influential first."""
    R = _as_rep(R)
    norms = R.row_norms()
    rows = np.flatnonzero(norms > row_tol)
    idx = R.candidate_indices[rows]
    # lexsort: last key is primary
    order = np.lexsort((idx, -norms[rows]))
    return [(int(idx[o]), float(norms[rows[o]])) for o in order]


def op_score(row, n: Optional[int] = None) -> float:
    """Outlier score ``(n - ||row||_1 / ||row||_inf) / (n - 1)``.

    1 means the sample represents a single point (usually itself); 0 means
    its weight is spread evenly over all ``n`` samples.
    """
    row = np.asarray(row, dtype=np.float64)
    n = row.size if n is None else n
    if n < 2:
        raise DataError("op_score needs n >= 2")
    a = np.abs(row)
    peak = a.max() if a.size else 0.0
    if peak == 0:
        raise DataError("op_score undefined for an all-zero representation row")
    # rounding in the l1 sum can step just outside [0, 1]
    return float(min(1.0, max(0.0, (n - a.sum() / peak) / (n - 1))))


def op_scores(R, row_tol: float = 0.0) -> dict:
    """OP for every non-zero row, keyed by sample index."""
    R = _as_rep(R)
    n = R.shape[1]
    return {int(R.candidate_indices[i]): op_score(R.values[i], n) for i in nonzero_rows(R, row_tol)}


def normalized_similarity(K, i, j):
    return K[i, j] / np.sqrt(K[i, i] * K[j, j])


def diversity_prune(ranked, K, tau: float):
    """Greedy scan in rank order dropping near-duplicates of kept candidates.

    Candidate ``j`` is pruned when a kept ``i`` has
    ``k_ij / sqrt(k_ii k_jj) >= tau``; the first such ``i`` in rank order is
    recorded.  Returns ``(kept, [(pruned, kept_index), ...])``.
    """
    K = np.asarray(K)
    ranked = [int(i) for i in ranked]
    if ranked:
        diag = K[ranked, ranked]
        bad = np.flatnonzero(diag <= 0)
        if bad.size:
            raise DataError(f"non-positive kernel diagonal at sample {ranked[bad[0]]}")
    kept, pruned = [], []
    for j in ranked:
        if kept:
            sims = K[kept, j] / np.sqrt(K[kept, kept] * K[j, j])
            hit = np.flatnonzero(sims >= tau)
            if hit.size:
                pruned.append((j, kept[hit[0]]))
                continue
        kept.append(j)
    return kept, pruned


def select(K, R_star, config: SelectionConfig = SelectionConfig()) -> SelectionResult:
    R_star = _as_rep(R_star)
    ranking = influence_ranking(R_star, config.row_tol)
    result = SelectionResult()
    if not ranking:
        return result
    result.influence = dict(ranking)
    result.op_scores = op_scores(R_star, config.row_tol)
    kept, result.pruned_as_redundant = diversity_prune([i for i, _ in ranking], K, config.diversity_tau)
    reps = []
    for i in kept:
        if result.op_scores[i] >= config.outlier_theta:
            result.rejected_as_outliers.append(i)
        else:
            reps.append(i)
    if config.max_k is not None and len(reps) > config.max_k:
        result.truncated = reps[config.max_k:]
        reps = reps[: config.max_k]
    result.representatives = reps
    return result


@dataclass
class OutlierReport:
    flagged: List[Tuple[int, float]]
    scores: dict
    warnings: List[str] = field(default_factory=list)

    @property
    def indices(self):
        return [i for i, _ in self.flagged]


def detect_outliers(R_star, theta: Optional[float] = None, top_k: Optional[int] = None,
                    row_tol: float = 0.0) -> OutlierReport:
    """Flag samples by OP score, either ``OP >= theta`` or the ``top_k`` highest.

    Samples with a zero representation row are never flagged.
    """
    if (theta is None) == (top_k is None):
        raise DataError("give exactly one of theta or top_k")
    R_star = _as_rep(R_star)
    scores = op_scores(R_star, row_tol)
    if not scores:
        raise DataError("all representation rows are zero; nothing to score")
    notes = []
    if theta is not None:
        if not 0.0 <= theta <= 1.0:
            raise DataError("theta must lie in [0, 1]")
        flagged = sorted((i, s) for i, s in scores.items() if s >= theta)
        flagged.sort(key=lambda t: -t[1])
    else:
        if top_k < 0:
            raise DataError("top_k must be non-negative")
        if top_k > len(scores):
            notes.append(f"top_k={top_k} exceeds the {len(scores)} non-zero rows; flagging all of them")
            warnings.warn(notes[-1], stacklevel=2)
        flagged = sorted(scores.items(), key=lambda t: (-t[1], t[0]))[:top_k]
    return OutlierReport(flagged, scores, notes)
