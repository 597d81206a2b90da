"""Synthetic manifold datasets with labelled outlier contamination.

Every generator is a pure function of its arguments: randomness comes
from a ``numpy.random.Generator`` seeded per call.  Data matrices use the
column convention (one sample per column).

Integer labels: ``>= 0`` is the inlier cluster id, negative values are
outliers (``-1`` random, ``-2`` repetitive, ``-3`` structured).
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from repsel.errors import DataError

OUTLIER_CODES = {"random": -1, "repetitive": -2, "structured": -3}
SWISS_T_RANGE = (1.5 * math.pi, 4.5 * math.pi)
SWISS_HEIGHT = 21.0


@dataclass(frozen=True)
class LabeledDataset:
    data: np.ndarray
    labels: np.ndarray
    params: dict = field(default_factory=dict)
    # generating parameter per sample (NaN for outliers), where meaningful
    latent: np.ndarray = None

    def __post_init__(self):
        if self.data.ndim != 2 or self.labels.shape != (self.data.shape[1],):
            raise DataError("label count must equal the number of columns")
        if not np.any(self.labels >= 0):
            raise DataError("dataset needs at least one inlier")

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def is_outlier(self):
        return self.labels < 0

    @property
    def outlier_indices(self):
        return np.flatnonzero(self.labels < 0)


def _rng(seed):
    return np.random.default_rng(seed)


def swiss_roll(n1: int, noise_sigma: float = 0.0, seed=0) -> LabeledDataset:
    """3-D swiss roll ``(t cos t, h, t sin t)``."""
    if n1 < 1 or noise_sigma < 0:
        raise DataError("swiss_roll needs n1 >= 1 and noise_sigma >= 0")
    rng = _rng(seed)
    t = rng.uniform(*SWISS_T_RANGE, size=n1)
    h = rng.uniform(0.0, SWISS_HEIGHT, size=n1)
    X = np.vstack([t * np.cos(t), h, t * np.sin(t)])
    if noise_sigma > 0:
        X = X + noise_sigma * rng.standard_normal(X.shape)
    params = {"generator": "swissroll", "n1": n1, "noise_sigma": noise_sigma, "seed": seed}
    return LabeledDataset(X, np.zeros(n1, dtype=np.int64), params, latent=t)


def sphere(n1: int, radius: float = 1.0, ambient_noise: float = 0.0, seed=0) -> LabeledDataset:
    if n1 < 1 or radius <= 0 or ambient_noise < 0:
        raise DataError("sphere needs n1 >= 1, radius > 0, ambient_noise >= 0")
    rng = _rng(seed)
    G = rng.standard_normal((3, n1))
    X = radius * G / np.linalg.norm(G, axis=0)
    if ambient_noise > 0:
        X = X + ambient_noise * rng.standard_normal(X.shape)
    params = {"generator": "sphere", "n1": n1, "radius": radius, "noise_sigma": ambient_noise, "seed": seed}
    return LabeledDataset(X, np.zeros(n1, dtype=np.int64), params)


def trefoil_point(t):
    t = np.asarray(t, dtype=np.float64)
    return np.vstack([np.sin(t) + 2 * np.sin(2 * t), np.cos(t) - 2 * np.cos(2 * t), -np.sin(3 * t)])


def trefoil(n1: int, noise: float = 0.0, seed=0) -> LabeledDataset:
    if n1 < 1 or noise < 0:
        raise DataError("trefoil needs n1 >= 1 and noise >= 0")
    rng = _rng(seed)
    t = rng.uniform(0.0, 2 * math.pi, size=n1)
    X = trefoil_point(t)
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    params = {"generator": "trefoil", "n1": n1, "noise_sigma": noise, "seed": seed}
    return LabeledDataset(X, np.zeros(n1, dtype=np.int64), params, latent=t)


def clustered_gaussians(k: int, per_cluster: int, separation: float = 10.0, dim: int = 3,
                        seed=0, sigma: float = 1.0) -> LabeledDataset:
    """``k`` isotropic blobs whose means are pairwise >= ``separation * sigma`` apart.

    Means are placed on scaled simplex-like directions: mean ``i`` is
    ``separation * sigma / sqrt(2)`` times basis vector ``i`` (after a random
    rotation) when ``k <= dim``, otherwise drawn by rejection sampling.
    """
    if k < 1 or per_cluster < 1:
        raise DataError("clustered_gaussians needs k >= 1 and per_cluster >= 1")
    rng = _rng(seed)
    gap = separation * sigma
    if k <= dim:
        Qm, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        means = Qm[:, :k] * (gap / math.sqrt(2))
    else:
        means = np.zeros((dim, 0))
        box = gap * k
        while means.shape[1] < k:
            cand = rng.uniform(-box, box, size=(dim, 1))
            if means.shape[1] == 0 or np.min(np.linalg.norm(means - cand, axis=0)) >= gap:
                means = np.hstack([means, cand])
    X = np.repeat(means, per_cluster, axis=1) + sigma * rng.standard_normal((dim, k * per_cluster))
    labels = np.repeat(np.arange(k), per_cluster).astype(np.int64)
    params = {"generator": "clusters", "k": k, "per_cluster": per_cluster, "separation": separation,
              "dim": dim, "sigma": sigma, "seed": seed, "means": means.tolist()}
    return LabeledDataset(X, labels, params)


def random_orthonormal(m: int, d: int, seed=0):
    G = _rng(seed).standard_normal((m, d))
    Qm, Rm = np.linalg.qr(G)
    # sign fix makes the map a deterministic function of G
    return Qm * np.sign(np.diag(Rm))


def embed(D, m: int, seed=0, identity: bool = False):
    """Isometric map of ``d``-dimensional columns into ``R^m``."""
    D = np.asarray(D, dtype=np.float64)
    d = D.shape[0]
    if m < d:
        raise DataError(f"ambient dimension {m} smaller than data dimension {d}")
    if identity:
        return np.vstack([D, np.zeros((m - d, D.shape[1]))])
    return random_orthonormal(m, d, seed) @ D


def embed_dataset(ds: LabeledDataset, m: int, seed=0) -> LabeledDataset:
    params = dict(ds.params, ambient=m, embed_seed=seed)
    return replace(ds, data=embed(ds.data, m, seed), params=params)


def _append_and_shuffle(ds, B, codes, rng, extra):
    X = np.hstack([ds.data, B])
    labels = np.concatenate([ds.labels, codes])
    latent = None
    if ds.latent is not None:
        latent = np.concatenate([ds.latent, np.full(B.shape[1], np.nan)])
    perm = rng.permutation(X.shape[1])
    params = dict(ds.params, **extra)
    params["permutation"] = perm.tolist()
    return LabeledDataset(X[:, perm], labels[perm], params, None if latent is None else latent[perm])


def _inlier_box(ds):
    A = ds.data[:, ds.labels >= 0]
    return A.min(axis=1), A.max(axis=1)


def _uniform_in_box(ds, count, rng):
    lo, hi = _inlier_box(ds)
    return lo[:, None] + (hi - lo)[:, None] * rng.uniform(size=(lo.size, count))


def inject_uniform_outliers(ds: LabeledDataset, n2: int, seed=0) -> LabeledDataset:
    """Append ``n2`` points uniform on the inlier bounding box, then shuffle."""
    if n2 < 0:
        raise DataError("n2 must be >= 0")
    rng = _rng(seed)
    B = _uniform_in_box(ds, n2, rng)
    codes = np.full(n2, OUTLIER_CODES["random"], dtype=np.int64)
    return _append_and_shuffle(ds, B, codes, rng, {"outliers": "uniform", "n2": n2, "outlier_seed": seed})


def inject_repetitive_outliers(ds: LabeledDataset, n2: int, repeat_fraction: float = 0.1,
                               seed=0) -> LabeledDataset:
    """Uniform outliers where ``ceil(repeat_fraction * n2)`` are copies of one point."""
    if n2 < 0 or not 0.0 <= repeat_fraction <= 1.0:
        raise DataError("need n2 >= 0 and repeat_fraction in [0, 1]")
    rng = _rng(seed)
    B = _uniform_in_box(ds, n2, rng)
    n_rep = math.ceil(repeat_fraction * n2)
    codes = np.full(n2, OUTLIER_CODES["random"], dtype=np.int64)
    if n_rep:
        B[:, :n_rep] = B[:, [0]]
        codes[:n_rep] = OUTLIER_CODES["repetitive"]
    extra = {"outliers": "repetitive", "n2": n2, "repeat_fraction": repeat_fraction, "outlier_seed": seed}
    return _append_and_shuffle(ds, B, codes, rng, extra)


def inject_structured_outliers(ds: LabeledDataset, n2: int, rank: int = 2, scale: float = 1.0,
                               seed=0) -> LabeledDataset:
    """Outliers drawn from a random ``rank``-dimensional linear subspace.

    Coefficients are i.i.d. Gaussian with per-direction variance
    ``scale**2 * v / rank``, where ``v`` is the mean squared distance of the
    inliers to their centroid.  At ``scale = 1`` the outliers spread as
    widely as the inliers, but they lie on a flat subspace of their own.
    """
    if n2 < 0 or rank < 1 or scale <= 0:
        raise DataError("need n2 >= 0, rank >= 1 and scale > 0")
    rng = _rng(seed)
    m = ds.data.shape[0]
    if rank > m:
        raise DataError("subspace rank exceeds ambient dimension")
    U = random_orthonormal(m, rank, rng.integers(2**63))
    A = ds.data[:, ds.labels >= 0]
    v = np.mean(np.sum((A - A.mean(axis=1, keepdims=True)) ** 2, axis=0))
    B = U @ (scale * math.sqrt(v / rank) * rng.standard_normal((rank, n2)))
    codes = np.full(n2, OUTLIER_CODES["structured"], dtype=np.int64)
    extra = {"outliers": "structured", "n2": n2, "rank": rank, "scale": scale, "outlier_seed": seed}
    return _append_and_shuffle(ds, B, codes, rng, extra)


DATASETS = {"swissroll", "sphere", "trefoil", "clusters"}
OUTLIER_KINDS = {"uniform", "repetitive", "structured"}


def make_dataset(dataset="swissroll", n1=400, n2=0, outliers="uniform", ambient=50,
                 noise=0.0, seed=0, repeat_fraction=0.1, structured_rank=2) -> LabeledDataset:
    """Generator + embedding + contamination, seeded from one integer."""
    if dataset not in DATASETS:
        raise DataError(f"unknown dataset {dataset!r}")
    if outliers not in OUTLIER_KINDS:
        raise DataError(f"unknown outlier kind {outliers!r}")
    ss = np.random.SeedSequence(seed)
    s_gen, s_embed, s_out = (int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(3))
    if dataset == "swissroll":
        ds = swiss_roll(n1, noise, s_gen)
    elif dataset == "sphere":
        ds = sphere(n1, 1.0, noise, s_gen)
    elif dataset == "trefoil":
        ds = trefoil(n1, noise, s_gen)
    else:
        k = 3
        ds = clustered_gaussians(k, max(1, n1 // k), seed=s_gen)
    if ambient and ambient > ds.data.shape[0]:
        ds = embed_dataset(ds, ambient, s_embed)
    if outliers == "uniform":
        ds = inject_uniform_outliers(ds, n2, s_out)
    elif outliers == "repetitive":
        ds = inject_repetitive_outliers(ds, n2, repeat_fraction, s_out)
    else:
        ds = inject_structured_outliers(ds, n2, rank=structured_rank, seed=s_out)
    return replace(ds, params=dict(ds.params, dataset=dataset, seed=seed))
