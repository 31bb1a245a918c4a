"""Synthetic data generators for the recovery and clustering experiments.

Both generators draw everything from a single seed in a fixed order, so a
spec (or argument tuple) pins the dataset exactly.  Columns are returned as
``ObservedVector`` objects restricted to their per-column observation sets;
the full matrix is never handed out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .geometry import ObservedVector, Subspace


@dataclass
class SyntheticSpec:
    """Parameters of a single low-rank-plus-outliers dataset.

    ``singular_range`` gives the smallest and largest of ``d`` evenly
    spaced singular values for the inlier block.  ``outlier_fraction`` of
    the ``m`` columns are replaced by isotropic gaussian noise of scale
    ``outlier_sigma``; each column keeps ``ceil(observe_fraction * n)``
    entries, sampled without replacement.  ``inlier_noise_sigma`` adds
    dense gaussian noise to the inlier columns (zero keeps them exactly
    on the subspace).
    """

    n: int
    m: int
    d: int
    singular_range: tuple[float, float] = (2000.0, 10000.0)
    outlier_fraction: float = 0.0
    observe_fraction: float = 1.0
    outlier_sigma: float = 1.0
    inlier_noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.n, self.m, self.d) < 1:
            raise InvalidSpec("n, m, d must be positive")
        if self.d > min(self.n, self.m):
            raise InvalidSpec(f"d={self.d} exceeds min(n, m)")
        lo, hi = self.singular_range
        if not 0.0 < lo <= hi:
            raise InvalidSpec(f"bad singular_range ({lo}, {hi})")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise InvalidSpec("outlier_fraction must be in [0, 1]")
        if not 0.0 < self.observe_fraction <= 1.0:
            raise InvalidSpec("observe_fraction must be in (0, 1]")
        if self.outlier_sigma < 0.0 or self.inlier_noise_sigma < 0.0:
            raise InvalidSpec("noise scales must be nonnegative")


@dataclass
class GroundTruth:
    """What the generator knows: the true subspace(s), which columns are
    outliers, and per-column labels (subspace index, -1 for outliers)."""

    subspaces: list[Subspace]
    outlier_mask: np.ndarray
    labels: np.ndarray


def _sample_masks(n: int, m: int, observe_fraction: float, rng) -> list[np.ndarray]:
    count = math.ceil(observe_fraction * n)
    if count >= n:
        full = np.arange(n)
        return [full for _ in range(m)]
    return [np.sort(rng.choice(n, size=count, replace=False)) for _ in range(m)]


def _to_columns(X: np.ndarray, masks) -> list[ObservedVector]:
    return [
        ObservedVector(column_id=j, indices=rows, values=X[rows, j])
        for j, rows in enumerate(masks)
    ]


def gen_low_rank(spec: SyntheticSpec) -> tuple[list[ObservedVector], GroundTruth]:
    """One rank-d matrix with column outliers and per-column observations.

    The inlier block is ``L @ diag(s) @ R.T`` with i.i.d. standard normal
    ``L`` (n x d) and ``R`` (m x d) and ``s`` evenly spaced across
    ``singular_range``, so the block's condition number is exactly
    ``max(s) / min(s)``.  ``floor(outlier_fraction * m)`` distinct columns
    are then replaced by outliers.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n, m, d = spec.n, spec.m, spec.d
    L = rng.standard_normal((n, d))
    R = rng.standard_normal((m, d))
    svals = np.linspace(spec.singular_range[1], spec.singular_range[0], d)
    X = (L * svals) @ R.T
    q, _ = np.linalg.qr(L)
    truth_basis = Subspace(q)

    n_out = math.floor(spec.outlier_fraction * m)
    out_idx = np.sort(rng.choice(m, size=n_out, replace=False))
    if n_out:
        X[:, out_idx] = spec.outlier_sigma * rng.standard_normal((n, n_out))
    outlier_mask = np.zeros(m, dtype=bool)
    outlier_mask[out_idx] = True
    if spec.inlier_noise_sigma > 0.0:
        inlier_idx = np.flatnonzero(~outlier_mask)
        X[:, inlier_idx] += spec.inlier_noise_sigma * rng.standard_normal(
            (n, inlier_idx.size)
        )

    masks = _sample_masks(n, m, spec.observe_fraction, rng)
    labels = np.where(outlier_mask, -1, 0).astype(np.int64)
    truth = GroundTruth(
        subspaces=[truth_basis], outlier_mask=outlier_mask, labels=labels
    )
    return _to_columns(X, masks), truth


def gen_union(
    k: int,
    d: int,
    n: int,
    inliers_per_subspace: int,
    outlier_fraction: float,
    observe_fraction: float,
    rng,
    outlier_sigma: float = 1.0,
) -> tuple[list[ObservedVector], GroundTruth]:
    """Union of ``k`` rank-d subspaces with interleaved outlier columns.

    Each block is ``Y_L @ Y_R.T`` with i.i.d. standard normal factors, so
    every subspace holds exactly ``inliers_per_subspace`` columns.  The
    outlier count makes outliers an ``outlier_fraction`` share of all
    columns, and their positions are drawn uniformly among the columns.
    """
    if k < 1 or d < 1 or inliers_per_subspace < 1:
        raise InvalidSpec("k, d, inliers_per_subspace must be positive")
    if d > n:
        raise InvalidSpec(f"d={d} exceeds n={n}")
    if not 0.0 <= outlier_fraction < 1.0:
        raise InvalidSpec("outlier_fraction must be in [0, 1)")
    if not 0.0 < observe_fraction <= 1.0:
        raise InvalidSpec("observe_fraction must be in (0, 1]")
    rng = np.random.default_rng(rng)

    n_in = k * inliers_per_subspace
    blocks = []
    bases = []
    for _ in range(k):
        y_l = rng.standard_normal((n, d))
        y_r = rng.standard_normal((inliers_per_subspace, d))
        blocks.append(y_l @ y_r.T)
        q, _ = np.linalg.qr(y_l)
        bases.append(Subspace(q))
    inliers = np.concatenate(blocks, axis=1)

    n_out = round(outlier_fraction / (1.0 - outlier_fraction) * n_in)
    m = n_in + n_out
    out_pos = np.sort(rng.choice(m, size=n_out, replace=False))
    outlier_mask = np.zeros(m, dtype=bool)
    outlier_mask[out_pos] = True

    X = np.empty((n, m))
    X[:, ~outlier_mask] = inliers
    if n_out:
        X[:, out_pos] = outlier_sigma * rng.standard_normal((n, n_out))

    labels = np.full(m, -1, dtype=np.int64)
    labels[~outlier_mask] = np.repeat(np.arange(k), inliers_per_subspace)

    masks = _sample_masks(n, m, observe_fraction, rng)
    truth = GroundTruth(subspaces=bases, outlier_mask=outlier_mask, labels=labels)
    return _to_columns(X, masks), truth
