"""Quality metrics and geometric oracles."""

from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from repsel.errors import DataError
from repsel.solver import objective


@dataclass(frozen=True)
class BinaryClassificationReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self):
        return asdict(self)


def outlier_f1(truth, predicted) -> BinaryClassificationReport:
    """Confusion counts with outliers as the positive class.

    ``truth`` is a boolean mask (True = outlier) or an integer label array
    where negative labels mark outliers; ``predicted`` is an iterable of
    flagged sample indices.
    """
    truth = np.asarray(truth)
    is_out = truth if truth.dtype == bool else truth < 0
    pred = np.zeros(is_out.size, dtype=bool)
    idx = np.fromiter((int(i) for i in predicted), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= is_out.size):
        raise DataError("predicted index outside the sample range")
    pred[idx] = True
    tp = int(np.sum(pred & is_out))
    fp = int(np.sum(pred & ~is_out))
    fn = int(np.sum(~pred & is_out))
    tn = int(np.sum(~pred & ~is_out))
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return BinaryClassificationReport(p, r, f1, tp, fp, tn, fn)


def coverage_score(K, R, lam: float) -> float:
    """Negated full objective; larger means the representatives cover the data better."""
    R = R.dense() if hasattr(R, "dense") else np.asarray(R, dtype=np.float64)
    return -objective(K, K, R, lam)


def _orient(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_vertices_2d(points) -> set:
    """Indices of the strict convex-hull vertices of 2-D points.

    Monotone-chain scan with orientation computed in exact rational
    arithmetic, so collinear boundary points are never reported.
    Duplicate points contribute their lowest index only.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 2:
        P = P.T if P.ndim == 2 and P.shape[0] == 2 else P
    if P.ndim != 2 or P.shape[1] != 2 or P.shape[0] < 3:
        raise DataError("need at least three 2-D points")
    exact = [(Fraction(x), Fraction(y)) for x, y in P]
    first = {}
    for i, p in enumerate(exact):
        first.setdefault(p, i)
    pts = sorted(first)
    if len(pts) < 3:
        raise DataError("all points are collinear")

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _orient(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = chain(pts), chain(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DataError("all points are collinear")
    return {first[p] for p in hull}


def knn_predict(K, reps, labels, test, k: int = 1):
    """Label each test sample by majority vote of its ``k`` nearest representatives.

    Distances are feature-space distances computed from ``K``.  Vote ties go
    to the label with the smaller distance sum, then the lower label.
    """
    reps = np.asarray(reps, dtype=np.int64)
    if reps.size == 0:
        raise DataError("no representatives to classify with")
    if k < 1:
        raise DataError("k must be >= 1")
    labels = np.asarray(labels)
    diag = np.diag(K)
    k = min(k, reps.size)
    preds = []
    for t in test:
        d = np.sqrt(np.maximum(0.0, diag[t] + diag[reps] - 2.0 * K[t, reps]))
        near = np.lexsort((reps, d))[:k]
        votes = {}
        for j in near:
            lab = labels[reps[j]]
            cnt, dist = votes.get(lab, (0, 0.0))
            votes[lab] = (cnt + 1, dist + d[j])
        preds.append(min(votes, key=lambda lab: (-votes[lab][0], votes[lab][1], lab)))
    return np.asarray(preds)


def rep_knn_accuracy(train_reps, K, labels, test, k: int = 1) -> float:
    test = np.asarray(test, dtype=np.int64)
    if test.size == 0:
        raise DataError("empty test set")
    pred = knn_predict(K, train_reps, labels, test, k)
    return float(np.mean(pred == np.asarray(labels)[test]))


def train_val_test_split(n: int, seed: int = 0, fractions=(0.7, 0.1, 0.2)):
    """Seeded shuffled 70/10/20 split of ``range(n)``."""
    if abs(sum(fractions) - 1.0) > 1e-12:
        raise DataError("split fractions must sum to 1")
    perm = np.random.default_rng(seed).permutation(n)
    a = int(round(fractions[0] * n))
    b = a + int(round(fractions[1] * n))
    return np.sort(perm[:a]), np.sort(perm[a:b]), np.sort(perm[b:])
