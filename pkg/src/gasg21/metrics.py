"""Evaluation metrics: subspace angles under optimal matching, relative
reconstruction error, and segmentation error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyInliers, ShapeMismatch, ZeroDenominator
from .geometry import Subspace, principal_angle


@dataclass
class AngleReport:
    """Largest principal angles between matched true/recovered pairs.

    ``angles[i]`` is the angle between true subspace ``i`` and the
    recovered subspace matched to it; ``assignment[i]`` is that recovered
    subspace's index.  The matching minimizes the total angle.
    """

    angles: np.ndarray
    assignment: np.ndarray
    worst: float
    median: float
    mean: float


def match_and_angles(true_subspaces, recovered_subspaces) -> AngleReport:
    """Optimally match recovered subspaces to true ones and report the
    largest principal angle of every matched pair.

    Raises
    ------
    ShapeMismatch
        If the two lists have different lengths (or any pair has
        incompatible shapes).
    """
    if len(true_subspaces) != len(recovered_subspaces):
        raise ShapeMismatch(
            f"{len(true_subspaces)} true vs {len(recovered_subspaces)} "
            "recovered subspaces"
        )
    if not true_subspaces:
        raise ShapeMismatch("empty subspace lists")
    k = len(true_subspaces)
    theta = np.empty((k, k))
    for i, t in enumerate(true_subspaces):
        for j, r in enumerate(recovered_subspaces):
            theta[i, j] = principal_angle(t, r)
    rows, cols = linear_sum_assignment(theta)
    angles = theta[rows, cols]
    return AngleReport(
        angles=angles,
        assignment=cols,
        worst=float(angles.max()),
        median=float(np.median(angles)),
        mean=float(angles.mean()),
    )


def relative_residual(original: np.ndarray, recovered: np.ndarray) -> float:
    """``norm(original - recovered, 'fro') / norm(original, 'fro')``.

    Scaling both arguments by the same positive constant leaves the value
    unchanged.  Raises ``ZeroDenominator`` when the original has zero norm.
    """
    original = np.asarray(original, dtype=np.float64)
    recovered = np.asarray(recovered, dtype=np.float64)
    if original.shape != recovered.shape:
        raise ShapeMismatch(f"shapes {original.shape} vs {recovered.shape}")
    den = np.linalg.norm(original)
    if den == 0.0:
        raise ZeroDenominator("original matrix has zero norm")
    return float(np.linalg.norm(original - recovered) / den)


def segmentation_error(
    true_labels, predicted_labels, outlier_mask=None
) -> float:
    """Percentage of misclassified inlier columns under the best one-to-one
    matching of label alphabets.

    ``outlier_mask`` marks columns excluded from the count (ground-truth
    outliers).  Label values are arbitrary on both sides; only the induced
    partitions matter, so permuting either alphabet leaves the result
    unchanged.

    Raises
    ------
    EmptyInliers
        If no columns remain after removing outliers.
    """
    t = np.asarray(true_labels)
    p = np.asarray(predicted_labels)
    if t.shape != p.shape or t.ndim != 1:
        raise ShapeMismatch(f"label shapes {t.shape} vs {p.shape}")
    if outlier_mask is not None:
        mask = np.asarray(outlier_mask, dtype=bool)
        if mask.shape != t.shape:
            raise ShapeMismatch(f"outlier mask shape {mask.shape}")
        t = t[~mask]
        p = p[~mask]
    if t.size == 0:
        raise EmptyInliers("no inlier columns to score")
    t_ids, t_inv = np.unique(t, return_inverse=True)
    p_ids, p_inv = np.unique(p, return_inverse=True)
    confusion = np.zeros((t_ids.size, p_ids.size), dtype=np.int64)
    np.add.at(confusion, (t_inv, p_inv), 1)
    rows, cols = linear_sum_assignment(confusion, maximize=True)
    correct = int(confusion[rows, cols].sum())
    return 100.0 * (t.size - correct) / t.size


def project_columns(U: Subspace, X: np.ndarray) -> np.ndarray:
    """Orthogonal projection of fully observed columns onto the subspace,
    ``U @ (U.T @ X)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != U.ambient_dim:
        raise ShapeMismatch(
            f"{X.shape[0]} rows vs ambient dimension {U.ambient_dim}"
        )
    return U.basis @ (U.basis.T @ X)
