"""Core types and operations for rank-one gradient steps on the Grassmannian.

A subspace is represented by an ``n x d`` matrix with orthonormal columns.
Data vectors arrive one column at a time, possibly with missing entries, as
``ObservedVector`` objects that carry the observed row indices and values.
The loss for one vector is the plain (not squared) euclidean norm of the
restricted least-squares residual, so its gradient with respect to the basis
is rank one and can be stored as an outer-product pair instead of a full
``n x d`` array.

All functions are pure: they never modify their inputs and return new
objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateGradient,
    IndexOutOfRange,
    InvalidShape,
    RankDeficient,
    ShapeMismatch,
    Underdetermined,
    ZeroVector,
)

# Frobenius defect ||U^T U - I||_F above which a basis is re-orthonormalized.
ORTHONORMALITY_TOL = 1e-10
# Residual norms below this are treated as "vector already in the span".
RESIDUAL_TOL = 1e-12
# Vector norms below this cannot be normalized reliably.
NORM_TOL = 1e-14
# Smallest singular value at or below this marks a restricted basis as
# numerically rank deficient.
RANK_TOL = 1e-10


@dataclass(eq=False)
class Subspace:
    """A point on the Grassmannian, stored as an orthonormal basis.

    Parameters
    ----------
    basis : ndarray of shape (n, d)
        Matrix whose columns span the subspace.  If the columns are not
        orthonormal to within ``ORTHONORMALITY_TOL`` (Frobenius norm of
        ``basis.T @ basis - I``), they are replaced by the thin-QR
        orthonormalization, which spans the same space.
    """

    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.ndim != 2:
            raise InvalidShape(f"basis must be 2-D, got ndim={basis.ndim}")
        n, d = basis.shape
        if not 1 <= d <= n:
            raise InvalidShape(f"need 1 <= rank <= ambient_dim, got ({n}, {d})")
        gram = basis.T @ basis
        defect = np.linalg.norm(gram - np.eye(d))
        if defect > ORTHONORMALITY_TOL:
            basis, _ = np.linalg.qr(basis)
        self.basis = basis

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def orthonormality_defect(self) -> float:
        """Frobenius norm of ``basis.T @ basis - I``."""
        d = self.rank
        return float(np.linalg.norm(self.basis.T @ self.basis - np.eye(d)))


@dataclass(eq=False)
class ObservedVector:
    """One data column together with its observation pattern.

    Parameters
    ----------
    column_id : int
        Position of this column in the data matrix.
    indices : ndarray of int
        Observed row indices, strictly increasing.
    values : ndarray of float
        Values at the observed rows, same length as ``indices``.
    """

    column_id: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.intp)
        values = np.asarray(self.values, dtype=np.float64)
        if indices.ndim != 1 or values.ndim != 1:
            raise InvalidShape("indices and values must be 1-D")
        if indices.shape[0] != values.shape[0]:
            raise InvalidShape(
                f"length mismatch: {indices.shape[0]} indices, "
                f"{values.shape[0]} values"
            )
        if indices.size:
            if indices[0] < 0:
                raise InvalidShape("negative row index")
            if indices.size > 1 and not np.all(np.diff(indices) > 0):
                raise InvalidShape("indices must be strictly increasing")
        self.indices = indices
        self.values = values

    @property
    def observed_count(self) -> int:
        return self.indices.shape[0]


@dataclass(eq=False)
class RankOneGradient:
    """Gradient of the per-vector loss, stored in factored form.

    The gradient value is ``-outer(e, w)`` where ``e`` is the normalized
    zero-padded residual and ``w`` the least-squares coefficients; only the
    two factors are kept, so the memory cost is O(n + d).  ``sigma`` equals
    ``norm(w)`` and is the sole nonzero singular value of the gradient.
    ``residual_norm`` is the norm of the unnormalized restricted residual.
    A gradient is degenerate when that norm falls below ``RESIDUAL_TOL``;
    degenerate gradients carry ``e = 0`` and define no step direction.
    """

    e: np.ndarray
    w: np.ndarray
    sigma: float
    residual_norm: float
    degenerate: bool = field(default=False)


def spherize(x: ObservedVector) -> ObservedVector:
    """Scale the observed values to unit euclidean norm.

    Raises
    ------
    ZeroVector
        If the norm of the observed values is below ``NORM_TOL``.
    """
    nrm = float(np.linalg.norm(x.values))
    if nrm < NORM_TOL:
        raise ZeroVector(f"column {x.column_id}: norm {nrm:.3e} too small")
    return ObservedVector(x.column_id, x.indices, x.values / nrm)


def restricted_basis(U: Subspace, indices: np.ndarray) -> np.ndarray:
    """Rows of the basis at the observed positions, as a new array.

    Raises
    ------
    IndexOutOfRange
        If any index is negative or at least ``ambient_dim``.
    """
    indices = np.asarray(indices)
    if indices.size:
        lo, hi = int(indices.min()), int(indices.max())
        if lo < 0 or hi >= U.ambient_dim:
            raise IndexOutOfRange(
                f"row indices must lie in [0, {U.ambient_dim}), "
                f"got range [{lo}, {hi}]"
            )
    return U.basis[indices, :]


def least_squares_weights(U: Subspace, x: ObservedVector) -> np.ndarray:
    """Coefficients w minimizing ``norm(x_obs - U_obs @ w)``.

    Solved through the thin QR factorization of the restricted basis, never
    through the normal equations.

    Raises
    ------
    Underdetermined
        If there are fewer observed entries than the rank.
    RankDeficient
        If the smallest singular value of the restricted basis is at or
        below ``RANK_TOL``.
    """
    if x.observed_count < U.rank:
        raise Underdetermined(
            f"column {x.column_id}: {x.observed_count} observed entries "
            f"for rank {U.rank}"
        )
    A = restricted_basis(U, x.indices)
    q, r = np.linalg.qr(A)
    svals = np.linalg.svd(r, compute_uv=False)
    if svals[-1] <= RANK_TOL:
        raise RankDeficient(
            f"column {x.column_id}: restricted basis has smallest singular "
            f"value {svals[-1]:.3e}"
        )
    return scipy.linalg.solve_triangular(r, q.T @ x.values, check_finite=False)


def residual_gradient(
    U: Subspace, x: ObservedVector, w: np.ndarray
) -> RankOneGradient:
    """Rank-one gradient factors of the loss at ``U`` for one vector.

    The residual is computed on the observed rows and zero-padded to the
    ambient dimension; ``e`` is that padded residual normalized to unit
    length.  By construction ``e`` is orthogonal to every column of the
    basis whenever ``w`` solves the restricted least-squares problem.
    """
    A = restricted_basis(U, x.indices)
    r_obs = x.values - A @ w
    rnorm = float(np.linalg.norm(r_obs))
    e = np.zeros(U.ambient_dim)
    degenerate = rnorm < RESIDUAL_TOL
    if not degenerate:
        e[x.indices] = r_obs / rnorm
    return RankOneGradient(
        e=e,
        w=np.asarray(w, dtype=np.float64),
        sigma=float(np.linalg.norm(w)),
        residual_norm=rnorm,
        degenerate=degenerate,
    )


def geodesic_step(
    U: Subspace,
    g: RankOneGradient,
    eta: float,
    sigma: float | None = None,
) -> Subspace:
    """Move the basis along the geodesic determined by a rank-one gradient.

    The update is

        ``U(eta) = U + ((cos(eta*s) - 1) * U @ wb + sin(eta*s) * e) @ wb.T``

    with ``wb = w / norm(w)`` and ``s`` the angle scale, which defaults to
    ``g.sigma``.  Passing ``sigma`` overrides the scale inside the sine and
    cosine only; the step direction is unchanged.  Column orthonormality is
    preserved exactly in exact arithmetic for any scale, and the returned
    ``Subspace`` re-orthonormalizes if accumulated floating-point drift ever
    exceeds ``ORTHONORMALITY_TOL``.

    Raises
    ------
    DegenerateGradient
        If ``g`` is degenerate or has no usable direction (``sigma`` of the
        gradient below ``NORM_TOL``).
    """
    if g.degenerate:
        raise DegenerateGradient("residual below tolerance, no step direction")
    if g.sigma < NORM_TOL:
        raise DegenerateGradient("zero coefficient vector, no step direction")
    if g.e.shape[0] != U.ambient_dim or g.w.shape[0] != U.rank:
        raise ShapeMismatch(
            f"gradient factors ({g.e.shape[0]}, {g.w.shape[0]}) do not match "
            f"basis ({U.ambient_dim}, {U.rank})"
        )
    scale = g.sigma if sigma is None else float(sigma)
    wb = g.w / g.sigma
    theta = eta * scale
    p = U.basis @ wb
    direction = (np.cos(theta) - 1.0) * p + np.sin(theta) * g.e
    return Subspace(U.basis + np.outer(direction, wb))


def principal_angle(U1: Subspace, U2: Subspace) -> float:
    """Largest principal angle between two subspaces, in radians.

    Equals ``arccos`` of the smallest singular value of ``U1.T @ U2``,
    clamped to ``[0, pi/2]``.

    Raises
    ------
    ShapeMismatch
        If the ambient dimensions or ranks differ.
    """
    if U1.ambient_dim != U2.ambient_dim or U1.rank != U2.rank:
        raise ShapeMismatch(
            f"cannot compare ({U1.ambient_dim}, {U1.rank}) with "
            f"({U2.ambient_dim}, {U2.rank})"
        )
    svals = np.linalg.svd(U1.basis.T @ U2.basis, compute_uv=False)
    return float(np.arccos(np.clip(svals[-1], 0.0, 1.0)))


def fit_loss(U: Subspace, x: ObservedVector) -> float:
    """Norm of the restricted least-squares residual of ``x`` against ``U``."""
    w = least_squares_weights(U, x)
    A = restricted_basis(U, x.indices)
    return float(np.linalg.norm(x.values - A @ w))
