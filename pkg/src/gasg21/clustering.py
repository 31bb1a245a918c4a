"""Clustering data drawn from a union of subspaces.

Pipeline: oversample Q candidate subspaces by probabilistic farthest
insertion on the zero-filled spherized columns, keep the K candidates that
greedily minimize the summed column residuals, then refine them with the
same stochastic geodesic updates as single-subspace recovery, each vector
updating only the subspace it currently fits best.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IndexOutOfRange,
    InvalidShape,
    InvalidSpec,
    RankDeficient,
    TooFewColumns,
    Underdetermined,
    ZeroVector,
)
from .geometry import (
    NORM_TOL,
    RANK_TOL,
    ObservedVector,
    Subspace,
    least_squares_weights,
    restricted_basis,
    spherize,
)
from .recovery import RecoveryConfig, RunTrace, process_vector
from .stepsize import AdaptiveStepState, StepParams


@dataclass
class CandidateSet:
    """Oversampled candidate subspaces and the columns that seeded them."""

    candidates: list[Subspace]
    seed_columns: np.ndarray
    neighborhood_size: int


@dataclass
class ClusterModel:
    """Final subspaces, per-column assignments (-1 for columns that could
    not be assigned), per-column fit residuals of the spherized values
    (NaN where unassigned), and the per-subspace refinement traces."""

    subspaces: list[Subspace]
    assignments: np.ndarray
    residuals: np.ndarray
    traces: list[RunTrace] | None = field(default=None, repr=False)


def _infer_ambient(columns, ambient_dim):
    if ambient_dim is not None:
        return int(ambient_dim)
    tops = [int(c.indices[-1]) for c in columns if c.indices.size]
    if not tops:
        raise TooFewColumns("no observed entries in any column")
    return max(tops) + 1


def seed_candidates(
    columns,
    q: int,
    d: int,
    rng: np.random.Generator,
    neighborhood_size: int | None = None,
    ambient_dim: int | None = None,
) -> CandidateSet:
    """Draw ``q`` candidate subspaces by probabilistic farthest insertion.

    Seed columns are picked one at a time, the first uniformly and the
    rest with probability proportional to the squared euclidean distance
    (on zero-filled spherized columns) to the nearest already chosen seed;
    exhausted distances fall back to a uniform pick, so ``q`` equal to the
    number of usable columns makes every column a seed.  Each candidate is
    the span of the top ``d`` left singular vectors of the seed and its
    ``neighborhood_size`` (default ``d + 3``) nearest neighbors.
    """
    nb = d + 3 if neighborhood_size is None else int(neighborhood_size)
    if q < 1 or d < 1 or nb < 1:
        raise InvalidSpec("q, d, neighborhood_size must be positive")
    usable = [
        j
        for j, c in enumerate(columns)
        if c.indices.size and float(np.linalg.norm(c.values)) >= NORM_TOL
    ]
    mu = len(usable)
    if q > mu or mu < d:
        raise TooFewColumns(f"{mu} usable columns for q={q}, d={d}")
    n = _infer_ambient(columns, ambient_dim)

    xz = np.zeros((n, mu))
    for pos, j in enumerate(usable):
        c = columns[j]
        xz[c.indices, pos] = c.values / np.linalg.norm(c.values)

    first = int(rng.integers(0, mu))
    chosen = [first]
    dist_rows = {}
    drow = ((xz - xz[:, [first]]) ** 2).sum(axis=0)
    dist_rows[first] = drow
    mind2 = drow.copy()
    mind2[first] = 0.0
    while len(chosen) < q:
        total = float(mind2.sum())
        if total > 0.0:
            u = rng.random() * total
            pick = int(np.searchsorted(np.cumsum(mind2), u, side="right"))
            if pick >= mu or mind2[pick] <= 0.0:
                pick = int(np.argmax(mind2))
        else:
            unchosen = np.setdiff1d(np.arange(mu), np.asarray(chosen))
            pick = int(unchosen[rng.integers(0, unchosen.size)])
        chosen.append(pick)
        drow = ((xz - xz[:, [pick]]) ** 2).sum(axis=0)
        dist_rows[pick] = drow
        np.minimum(mind2, drow, out=mind2)
        mind2[pick] = 0.0

    candidates = []
    for pos in chosen:
        order = np.argsort(dist_rows[pos], kind="stable")
        neigh = [i for i in order if i != pos][:nb]
        local = xz[:, [pos] + neigh]
        if local.shape[1] < d:
            raise TooFewColumns(
                f"neighborhood of size {local.shape[1]} cannot span rank {d}"
            )
        left, _, _ = np.linalg.svd(local, full_matrices=False)
        candidates.append(Subspace(left[:, :d]))
    seed_cols = np.asarray([usable[p] for p in chosen], dtype=np.int64)
    return CandidateSet(candidates, seed_cols, nb)


def column_residuals(S: Subspace, columns) -> np.ndarray:
    """Restricted least-squares residual norm of every spherized column
    against one subspace.

    Columns that cannot be fitted (fewer observed entries than the rank,
    zero norm, or a rank-deficient restriction) contribute their full
    spherized norm, 1.  Solves are batched over columns with equal
    observation counts through stacked thin-QR factorizations.
    """
    m = len(columns)
    out = np.ones(m)
    d = S.rank
    n = S.ambient_dim
    groups: dict[int, list[int]] = {}
    for pos, c in enumerate(columns):
        s = c.observed_count
        if s < d:
            continue
        if float(np.linalg.norm(c.values)) < NORM_TOL:
            continue
        groups.setdefault(s, []).append(pos)
    for s, positions in groups.items():
        g = len(positions)
        idx = np.empty((g, s), dtype=np.intp)
        vals = np.empty((g, s))
        for row, pos in enumerate(positions):
            c = columns[pos]
            idx[row] = c.indices
            vals[row] = c.values / np.linalg.norm(c.values)
        if idx.max() >= n:
            raise IndexOutOfRange(f"row index {idx.max()} for ambient {n}")
        A = S.basis[idx]
        qmat, rmat = np.linalg.qr(A)
        svals = np.linalg.svd(rmat, compute_uv=False)
        bad = svals[:, -1] <= RANK_TOL
        if bad.any():
            rmat = rmat.copy()
            rmat[bad] = np.eye(d)
        rhs = np.einsum("gsd,gs->gd", qmat, vals)
        w = np.linalg.solve(rmat, rhs[..., None])[..., 0]
        resid = vals - np.einsum("gsd,gd->gs", A, w)
        norms = np.linalg.norm(resid, axis=1)
        norms[bad] = 1.0
        out[positions] = norms
    return out


def candidate_loss(S: Subspace, columns) -> float:
    """Sum of ``column_residuals`` over all columns."""
    return float(column_residuals(S, columns).sum())


def greedy_select(cands, columns, k: int) -> list[Subspace]:
    """Keep the ``k`` candidates that greedily minimize the total of
    per-column best residuals (facility-location style).

    The first pick minimizes the summed residuals alone; each later pick
    minimizes the sum of column-wise minima against the chosen set.  Ties
    go to the lowest candidate index, and candidates are never re-picked.
    Accepts a ``CandidateSet`` or a plain list of subspaces.
    """
    candidates = list(cands.candidates if isinstance(cands, CandidateSet) else cands)
    qn = len(candidates)
    if not 1 <= k <= qn:
        raise InvalidSpec(f"need 1 <= k <= {qn} candidates, got k={k}")
    if k == qn:
        return candidates
    R = np.stack([column_residuals(c, columns) for c in candidates])
    chosen = [int(np.argmin(R.sum(axis=1)))]
    covered = R[chosen[0]].copy()
    while len(chosen) < k:
        scores = np.minimum(R, covered[None, :]).sum(axis=1)
        scores[chosen] = np.inf
        nxt = int(np.argmin(scores))
        chosen.append(nxt)
        np.minimum(covered, R[nxt], out=covered)
    return [candidates[i] for i in chosen]


def assign_vector(x: ObservedVector, subspaces) -> tuple[int, np.ndarray, float]:
    """Index, coefficients, and residual norm of the best-fitting subspace.

    Residuals are computed on the values as given.  Ties go to the lowest
    subspace index.

    Raises
    ------
    Underdetermined
        If the column has fewer observed entries than the largest rank.
    RankDeficient
        If every subspace's restriction is rank deficient.
    """
    if not subspaces:
        raise InvalidShape("no subspaces to assign to")
    max_rank = max(S.rank for S in subspaces)
    if x.observed_count < max_rank:
        raise Underdetermined(
            f"column {x.column_id}: {x.observed_count} observed entries "
            f"for max rank {max_rank}"
        )
    best_i = -1
    best_w = None
    best_rn = math.inf
    for i, S in enumerate(subspaces):
        try:
            w = least_squares_weights(S, x)
        except RankDeficient:
            continue
        A = restricted_basis(S, x.indices)
        rn = float(np.linalg.norm(x.values - A @ w))
        if rn < best_rn:
            best_i, best_w, best_rn = i, w, rn
    if best_i < 0:
        raise RankDeficient(
            f"column {x.column_id}: every subspace restriction is deficient"
        )
    return best_i, best_w, best_rn


def _assign_stacked(B: np.ndarray, indices, values) -> int:
    """Winner index over stacked same-rank bases, for the refinement loop.

    Uses stacked thin QR; exactly singular restrictions are excluded from
    the argmin instead of raising.  The winner's coefficients are always
    recomputed afterwards through the guarded single-subspace path.
    """
    A = B[:, indices, :]
    qmat, rmat = np.linalg.qr(A)
    diag = np.abs(np.diagonal(rmat, axis1=1, axis2=2))
    bad = diag.min(axis=1) <= RANK_TOL
    if bad.any():
        rmat = rmat.copy()
        rmat[bad] = np.eye(B.shape[2])
    rhs = np.einsum("ksd,s->kd", qmat, values)
    w = np.linalg.solve(rmat, rhs[..., None])[..., 0]
    resid = values[None, :] - np.einsum("ksd,kd->ks", A, w)
    norms = np.linalg.norm(resid, axis=1)
    if bad.any():
        norms[bad] = np.inf
    return int(np.argmin(norms))


def refine(
    subspaces,
    columns,
    max_iter: int,
    step_params: StepParams | None = None,
    rng=None,
) -> tuple[list[Subspace], list[RunTrace]]:
    """Stochastic refinement of a fixed number of subspaces.

    Each iteration draws one column uniformly at random, assigns it to the
    subspace with the smallest restricted residual, and applies one
    adaptive geodesic update to that subspace only; every subspace keeps
    its own step-size state.  With a single subspace this is exactly the
    recovery loop of ``gasg21.run`` (same draws, same trace).  Columns
    that cannot be assigned at all are dropped from the traces.
    """
    params = step_params if step_params is not None else StepParams()
    rng = np.random.default_rng(rng)
    k = len(subspaces)
    m = len(columns)
    if k == 0:
        raise InvalidShape("no subspaces to refine")
    if m == 0:
        raise TooFewColumns("no columns")
    bases = list(subspaces)
    states = [AdaptiveStepState.initial(params) for _ in range(k)]
    traces = [RunTrace() for _ in range(k)]
    cfg = RecoveryConfig(
        rank=bases[0].rank, step_rule="adaptive", step_params=params
    )
    ranks = [S.rank for S in bases]
    max_rank = max(ranks)
    stacked = k > 1 and len(set(ranks)) == 1
    if stacked:
        B = np.stack([S.basis for S in bases])
    if k > 1:
        usable = np.array(
            [
                c.observed_count >= max_rank
                and float(np.linalg.norm(c.values)) >= NORM_TOL
                for c in columns
            ]
        )
    for j in range(max_iter):
        idx = int(rng.integers(0, m))
        x = columns[idx]
        if k == 1:
            winner = 0
        else:
            if not usable[idx]:
                continue
            if stacked:
                winner = _assign_stacked(B, x.indices, x.values)
            else:
                try:
                    winner, _, _ = assign_vector(x, bases)
                except (Underdetermined, RankDeficient):
                    continue
        U2, st2, rec = process_vector(
            bases[winner], x, states[winner], cfg, iteration=j
        )
        bases[winner] = U2
        states[winner] = st2
        traces[winner].append(rec)
        if stacked and not rec.skipped:
            B[winner] = U2.basis
    return bases, traces


def cluster(
    columns,
    k: int,
    d: int,
    q: int,
    max_iter: int,
    rng,
    neighborhood_size: int | None = None,
    step_params: StepParams | None = None,
    ambient_dim: int | None = None,
) -> ClusterModel:
    """Full pipeline: seed ``q`` candidates, keep the best ``k``, refine,
    then assign every column to its nearest final subspace.

    ``rng`` may be a seed or a ``numpy.random.Generator``; a given seed
    fixes the whole pipeline.  Assignments of the returned model are a
    fixed point of ``assign_vector`` against the final subspaces.
    """
    if k < 1:
        raise InvalidSpec(f"k must be positive, got {k}")
    if q < k:
        raise InvalidSpec(f"need q >= k, got q={q}, k={k}")
    rng = np.random.default_rng(rng)
    n = _infer_ambient(columns, ambient_dim)
    cands = seed_candidates(
        columns, q, d, rng, neighborhood_size=neighborhood_size, ambient_dim=n
    )
    selected = greedy_select(cands, columns, k)
    finals, traces = refine(selected, columns, max_iter, step_params, rng)

    m = len(columns)
    assignments = np.full(m, -1, dtype=np.int64)
    residuals = np.full(m, np.nan)
    for j, c in enumerate(columns):
        try:
            xs = spherize(c)
            i, _, rn = assign_vector(xs, finals)
        except (ZeroVector, Underdetermined, RankDeficient):
            continue
        assignments[j] = i
        residuals[j] = rn
    return ClusterModel(
        subspaces=finals, assignments=assignments, residuals=residuals, traces=traces
    )
