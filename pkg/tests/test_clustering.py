"""Tests for candidate seeding, greedy selection, refinement, and the full
clustering pipeline."""

import itertools

import numpy as np
import pytest

from gasg21.clustering import (
    CandidateSet,
    assign_vector,
    candidate_loss,
    cluster,
    column_residuals,
    greedy_select,
    refine,
    seed_candidates,
)
from gasg21.errors import InvalidSpec, TooFewColumns, Underdetermined
from gasg21.geometry import ObservedVector, Subspace, fit_loss, principal_angle, spherize
from gasg21.metrics import segmentation_error
from gasg21.recovery import RecoveryConfig, init_subspace, run
from gasg21.synth import SyntheticSpec, gen_low_rank, gen_union


def full_vector(values, column_id=0):
    values = np.asarray(values, dtype=np.float64)
    return ObservedVector(column_id, np.arange(values.size), values)


def chosen_set_loss(subspaces, columns):
    R = np.stack([column_residuals(S, columns) for S in subspaces])
    return float(np.minimum.reduce(R).sum())


def test_seed_candidates_all_columns_become_seeds():
    cols, _ = gen_union(2, 2, 20, 10, 0.0, 1.0, rng=np.random.default_rng(0))
    cs = seed_candidates(cols, q=len(cols), d=2, rng=np.random.default_rng(1),
                         ambient_dim=20)
    assert sorted(cs.seed_columns) == list(range(len(cols)))
    assert cs.neighborhood_size == 5  # d + 3 default


def test_seed_candidates_exact_fit_single_subspace():
    """Outlier-free rank-d data, fully observed: every local fit recovers
    the true subspace."""
    spec = SyntheticSpec(n=30, m=40, d=3, outlier_fraction=0.0,
                         observe_fraction=1.0, rng_seed=2)
    cols, truth = gen_low_rank(spec)
    cs = seed_candidates(cols, q=10, d=3, rng=np.random.default_rng(3),
                         ambient_dim=30)
    # arccos resolves angles no finer than sqrt(eps) ~ 1.5e-8
    for cand in cs.candidates:
        assert principal_angle(cand, truth.subspaces[0]) <= 1e-7


def test_seed_candidates_spread_across_tight_clusters():
    """Two tight, well-separated clusters: squared-distance insertion puts
    the two seeds in different clusters nearly always (98/100 measured)."""
    n = 20
    rng = np.random.default_rng(42)
    cols = []
    for j in range(60):
        v = np.zeros(n)
        v[0 if j < 30 else 1] = 1.0
        v += 0.03 * rng.standard_normal(n)
        cols.append(ObservedVector(j, np.arange(n), v))
    hits = 0
    for t in range(100):
        cs = seed_candidates(cols, q=2, d=1, rng=np.random.default_rng(t),
                             ambient_dim=n)
        a, b = cs.seed_columns
        if (a < 30) != (b < 30):
            hits += 1
    assert hits >= 95


def test_seed_candidates_too_few_columns():
    cols = [full_vector([1.0, 0.0, 0.0], j) for j in range(3)]
    with pytest.raises(TooFewColumns):
        seed_candidates(cols, q=4, d=1, rng=np.random.default_rng(0))
    with pytest.raises(InvalidSpec):
        seed_candidates(cols, q=0, d=1, rng=np.random.default_rng(0))


def test_column_residuals_matches_per_column_oracle():
    """Batched residuals equal the one-column solves, including columns
    with different observation counts and unusable columns."""
    rng = np.random.default_rng(4)
    S = Subspace(np.linalg.qr(rng.standard_normal((25, 3)))[0])
    cols = []
    for j in range(30):
        size = int(rng.integers(2, 25))
        idx = np.sort(rng.choice(25, size=size, replace=False))
        cols.append(ObservedVector(j, idx, rng.standard_normal(size)))
    cols.append(ObservedVector(30, np.arange(25), np.zeros(25)))
    got = column_residuals(S, cols)
    for j, c in enumerate(cols):
        if c.observed_count < 3 or np.linalg.norm(c.values) < 1e-14:
            assert got[j] == 1.0
        else:
            assert abs(got[j] - fit_loss(S, spherize(c))) <= 1e-12


def test_candidate_loss_spanned_and_orthogonal():
    S = Subspace(np.eye(6)[:, :2])
    inside = [full_vector(S.basis @ np.random.default_rng(j).standard_normal(2), j)
              for j in range(5)]
    assert candidate_loss(S, inside) <= 1e-12
    ortho = [full_vector(np.eye(6)[:, 3], j) for j in range(4)]
    assert abs(candidate_loss(S, ortho) - 4.0) <= 1e-12


def test_greedy_select_k_equals_q_returns_everything():
    rng = np.random.default_rng(5)
    cands = [Subspace(np.linalg.qr(rng.standard_normal((10, 2)))[0])
             for _ in range(4)]
    cols, _ = gen_union(2, 2, 10, 8, 0.0, 1.0, rng=np.random.default_rng(6))
    out = greedy_select(cands, cols, 4)
    assert out == cands


def test_greedy_select_finds_true_pair_among_junk():
    cols, truth = gen_union(2, 2, 15, 12, 0.0, 1.0,
                            rng=np.random.default_rng(7))
    rng = np.random.default_rng(8)
    junk = Subspace(np.linalg.qr(rng.standard_normal((15, 2)))[0])
    cands = [junk, truth.subspaces[0], truth.subspaces[1]]
    out = greedy_select(cands, cols, 2)
    assert truth.subspaces[0] in out
    assert truth.subspaces[1] in out


def test_greedy_select_tie_goes_to_lowest_index():
    rng = np.random.default_rng(9)
    S = Subspace(np.linalg.qr(rng.standard_normal((8, 2)))[0])
    twin = Subspace(S.basis.copy())
    cols = [full_vector(rng.standard_normal(8), j) for j in range(6)]
    out = greedy_select([S, twin], cols, 1)
    assert out[0] is S


def test_greedy_select_within_ten_percent_of_exhaustive():
    """Greedy facility-location selection against the C(8,3) = 56 subset
    brute force; the measured gap on this family is zero."""
    for s in range(20):
        cols, _ = gen_union(3, 2, 30, 15, 0.2, 1.0,
                            rng=np.random.default_rng(1000 + s))
        cs = seed_candidates(cols, q=8, d=2, rng=np.random.default_rng(s),
                             ambient_dim=30)
        R = np.stack([column_residuals(c, cols) for c in cs.candidates])
        best = min(
            np.minimum.reduce(R[list(combo)]).sum()
            for combo in itertools.combinations(range(8), 3)
        )
        got = chosen_set_loss(greedy_select(cs, cols, 3), cols)
        assert got <= 1.1 * best


def test_greedy_select_loss_non_increasing_in_k():
    cols, _ = gen_union(3, 2, 30, 15, 0.2, 1.0, rng=np.random.default_rng(10))
    cs = seed_candidates(cols, q=6, d=2, rng=np.random.default_rng(11),
                         ambient_dim=30)
    losses = [chosen_set_loss(greedy_select(cs, cols, k), cols)
              for k in (1, 2, 3, 4)]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_assign_vector_picks_containing_subspace():
    A = Subspace(np.eye(6)[:, :2])
    B = Subspace(np.eye(6)[:, 2:4])
    x = full_vector(B.basis @ np.array([1.0, 2.0]))
    i, w, rn = assign_vector(x, [A, B])
    assert i == 1
    assert rn <= 1e-12
    assert np.allclose(w, [1.0, 2.0], atol=1e-12)


def test_assign_vector_tie_lowest_index():
    A = Subspace(np.eye(2)[:, :1])
    B = Subspace(np.eye(2)[:, 1:])
    x = full_vector([1.0, 1.0])
    i, _, _ = assign_vector(x, [A, B])
    assert i == 0


def test_assign_vector_matches_brute_force():
    rng = np.random.default_rng(12)
    subs = [Subspace(np.linalg.qr(rng.standard_normal((12, 2)))[0])
            for _ in range(4)]
    for _ in range(20):
        idx = np.sort(rng.choice(12, size=7, replace=False))
        x = ObservedVector(0, idx, rng.standard_normal(7))
        i, _, rn = assign_vector(x, subs)
        oracle = [fit_loss(S, x) for S in subs]
        assert i == int(np.argmin(oracle))
        assert abs(rn - min(oracle)) <= 1e-12


def test_assign_vector_underdetermined():
    rng = np.random.default_rng(13)
    subs = [Subspace(np.linalg.qr(rng.standard_normal((10, 3)))[0])]
    x = ObservedVector(0, np.array([0, 4]), np.array([1.0, 1.0]))
    with pytest.raises(Underdetermined):
        assign_vector(x, subs)


def test_refine_single_subspace_equals_recovery_run():
    """With one subspace the refinement loop is the recovery loop: same
    draws, same trace, same final basis, bit for bit."""
    spec = SyntheticSpec(n=40, m=50, d=3, outlier_fraction=0.2,
                         observe_fraction=0.8, rng_seed=14)
    cols, _ = gen_low_rank(spec)
    U0 = init_subspace(40, 3, np.random.default_rng(15))

    bases, traces = refine([U0], cols, max_iter=200, rng=7)
    cfg = RecoveryConfig(rank=3, max_iterations=200, rng_seed=7, initial=U0)
    U_run, trace_run = run(cols, cfg)

    assert np.array_equal(bases[0].basis, U_run.basis)
    assert len(traces[0]) == len(trace_run)
    for a, b in zip(traces[0], trace_run):
        assert a.iteration == b.iteration
        assert a.column_id == b.column_id
        assert a.eta == b.eta
        assert a.mu == b.mu
        assert a.level == b.level
        assert a.skipped == b.skipped
        assert np.array_equal(
            np.array([a.residual_norm]), np.array([b.residual_norm]),
            equal_nan=True,
        )


def test_refine_updates_only_the_winner():
    """Columns near subspace A never touch subspace B."""
    rng = np.random.default_rng(16)
    A = Subspace(np.eye(12)[:, :2])
    B = Subspace(np.eye(12)[:, 2:4])
    cols = []
    for j in range(10):
        v = A.basis @ rng.standard_normal(2)
        v += 0.01 * rng.standard_normal(12)  # off-subspace but still nearest to A
        cols.append(full_vector(v, j))
    bases, traces = refine([A, B], cols, max_iter=60, rng=17)
    assert np.array_equal(bases[1].basis, B.basis)
    assert len(traces[1]) == 0
    assert len(traces[0]) == 60
    assert not np.array_equal(bases[0].basis, A.basis)


def test_cluster_assignments_are_fixed_point():
    cols, truth = gen_union(3, 2, 25, 15, 0.2, 0.9,
                            rng=np.random.default_rng(18))
    model = cluster(cols, k=3, d=2, q=9, max_iter=2000, rng=19,
                    ambient_dim=25)
    for j, c in enumerate(cols):
        if model.assignments[j] < 0:
            continue
        i, _, rn = assign_vector(spherize(c), model.subspaces)
        assert i == model.assignments[j]
        assert rn == model.residuals[j]


def test_cluster_separable_union_zero_error():
    """Outlier-free, fully observed, far-apart subspaces with Q = K: the
    pipeline recovers the partition exactly on these seeds."""
    for s in range(4):
        cols, truth = gen_union(2, 2, 20, 30, 0.0, 1.0,
                                rng=np.random.default_rng(s))
        model = cluster(cols, k=2, d=2, q=2, max_iter=600, rng=s,
                        ambient_dim=20)
        err = segmentation_error(truth.labels, model.assignments,
                                 truth.outlier_mask)
        assert err == 0.0


def test_cluster_validation():
    cols, _ = gen_union(2, 2, 15, 10, 0.0, 1.0, rng=np.random.default_rng(20))
    with pytest.raises(InvalidSpec):
        cluster(cols, k=0, d=2, q=4, max_iter=10, rng=0)
    with pytest.raises(InvalidSpec):
        cluster(cols, k=3, d=2, q=2, max_iter=10, rng=0)


def test_candidate_set_fields():
    cols, _ = gen_union(2, 2, 15, 10, 0.0, 1.0, rng=np.random.default_rng(21))
    cs = seed_candidates(cols, q=3, d=2, rng=np.random.default_rng(22),
                         neighborhood_size=7, ambient_dim=15)
    assert isinstance(cs, CandidateSet)
    assert cs.neighborhood_size == 7
    assert len(cs.candidates) == 3
    assert cs.seed_columns.shape == (3,)
    for cand in cs.candidates:
        assert cand.orthonormality_defect() <= 1e-10
