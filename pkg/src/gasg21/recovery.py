"""Streaming robust subspace recovery driver.

Processes one column per iteration: spherize, solve the restricted least
squares, form the rank-one gradient, pick a step size, and move along the
geodesic.  Columns that cannot contribute (too few observed entries, zero
norm, rank-deficient restriction, or residual already at the noise floor)
are skipped and counted, never fatal unless a whole pass is skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllColumnsUnusable,
    InvalidShape,
    RankDeficient,
    ShapeMismatch,
    ZeroVector,
)
from .geometry import (
    NORM_TOL,
    ObservedVector,
    Subspace,
    geodesic_step,
    least_squares_weights,
    principal_angle,
    residual_gradient,
    spherize,
)
from .stepsize import AdaptiveStepState, StepParams, adapt, diminishing

STEP_RULES = ("adaptive", "diminishing", "constant", "grouse")
ORDERS = ("random", "cyclic")


@dataclass
class RecoveryConfig:
    """Everything a recovery run needs besides the data itself.

    ``step_rule`` selects how the per-iteration step size is chosen:
    ``adaptive`` (level-halving controller), ``diminishing``
    (``dim_scale / (1 + j)``), ``constant`` (``constant_eta``), or
    ``grouse`` (constant step with the angle scale ``norm(r) * norm(w)``
    instead of ``norm(w)`` inside the rotation).

    ``order`` picks columns uniformly with replacement (``random``) or in
    reshuffled full passes (``cyclic``).  ``truth`` enables per-iteration
    angle tracking and, together with ``angle_tolerance``, early stopping.
    ``ambient_dim`` is only needed when neither ``truth`` nor ``initial``
    is given and the row count cannot be trusted to the observed indices.
    """

    rank: int
    step_rule: str = "adaptive"
    step_params: StepParams = field(default_factory=StepParams)
    dim_scale: float = 1.0
    constant_eta: float = 1.0
    max_iterations: int = 1000
    rng_seed: int = 0
    order: str = "random"
    ambient_dim: int | None = None
    initial: Subspace | None = None
    truth: Subspace | None = None
    angle_tolerance: float | None = None

    def __post_init__(self):
        if self.rank < 1:
            raise InvalidShape(f"rank must be positive, got {self.rank}")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")


@dataclass
class TraceRecord:
    """State of the run right after one iteration."""

    iteration: int
    column_id: int
    eta: float
    mu: float
    level: int
    residual_norm: float
    angle: float
    skipped: bool


class RunTrace:
    """Append-only sequence of per-iteration records."""

    def __init__(self):
        self.records: list[TraceRecord] = []

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def _field(self, name, dtype) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=dtype)

    def iterations(self) -> np.ndarray:
        return self._field("iteration", np.int64)

    def column_ids(self) -> np.ndarray:
        return self._field("column_id", np.int64)

    def etas(self) -> np.ndarray:
        return self._field("eta", np.float64)

    def mus(self) -> np.ndarray:
        return self._field("mu", np.float64)

    def levels(self) -> np.ndarray:
        return self._field("level", np.int64)

    def residuals(self) -> np.ndarray:
        return self._field("residual_norm", np.float64)

    def angles(self) -> np.ndarray:
        """Per-iteration largest principal angle to the truth, NaN when
        no truth was available."""
        return self._field("angle", np.float64)

    def skips(self) -> np.ndarray:
        return self._field("skipped", bool)

    def final_angle(self) -> float:
        """Angle of the last record, NaN if the trace is empty or untracked."""
        if not self.records:
            return math.nan
        return self.records[-1].angle


def init_subspace(n: int, d: int, rng: np.random.Generator) -> Subspace:
    """Random point on the Grassmannian: thin QR of an i.i.d. standard
    normal ``n x d`` matrix."""
    if not 1 <= d <= n:
        raise InvalidShape(f"need 1 <= d <= n, got d={d}, n={n}")
    q, _ = np.linalg.qr(rng.standard_normal((n, d)))
    return Subspace(q)


def process_vector(
    U: Subspace,
    x: ObservedVector,
    state: AdaptiveStepState,
    cfg: RecoveryConfig,
    iteration: int = 0,
) -> tuple[Subspace, AdaptiveStepState, TraceRecord]:
    """One stochastic update from a single column.

    Returns the updated basis, the updated controller state, and a trace
    record.  Skips (returning the inputs unchanged, with ``skipped=True``)
    when the column has fewer observed entries than the rank, has zero
    norm, yields a rank-deficient restricted basis, or fits the current
    subspace to within the residual tolerance.  Data-quality skips record
    ``residual_norm`` as NaN; perfect-fit and vanishing-weight skips record
    the actual residual, so callers can tell the two classes apart.
    """

    def skip(residual=math.nan):
        rec = TraceRecord(
            iteration=iteration,
            column_id=x.column_id,
            eta=state.eta,
            mu=state.mu,
            level=state.level,
            residual_norm=residual,
            angle=math.nan,
            skipped=True,
        )
        return U, state, rec

    if x.observed_count < U.rank:
        return skip()
    try:
        xs = spherize(x)
    except ZeroVector:
        return skip()
    try:
        w = least_squares_weights(U, xs)
    except RankDeficient:
        return skip()
    g = residual_gradient(U, xs, w)
    if g.degenerate:
        return skip(residual=g.residual_norm)
    if g.sigma < NORM_TOL:
        return skip(residual=g.residual_norm)

    if cfg.step_rule == "adaptive":
        new_state = adapt(state, g, cfg.step_params)
        eta = new_state.eta
        scale = None
    elif cfg.step_rule == "diminishing":
        new_state = state
        eta = diminishing(iteration, cfg.dim_scale)
        scale = None
    elif cfg.step_rule == "constant":
        new_state = state
        eta = cfg.constant_eta
        scale = None
    else:  # grouse
        new_state = state
        eta = cfg.constant_eta
        scale = g.residual_norm * g.sigma

    U_next = geodesic_step(U, g, eta, sigma=scale)
    rec = TraceRecord(
        iteration=iteration,
        column_id=x.column_id,
        eta=eta,
        mu=new_state.mu,
        level=new_state.level,
        residual_norm=g.residual_norm,
        angle=math.nan,
        skipped=False,
    )
    return U_next, new_state, rec


def _resolve_ambient(columns, cfg: RecoveryConfig) -> int:
    candidates = []
    if cfg.ambient_dim is not None:
        candidates.append(cfg.ambient_dim)
    if cfg.initial is not None:
        candidates.append(cfg.initial.ambient_dim)
    if cfg.truth is not None:
        candidates.append(cfg.truth.ambient_dim)
    if candidates:
        if any(c != candidates[0] for c in candidates):
            raise ShapeMismatch(f"inconsistent ambient dimensions: {candidates}")
        return candidates[0]
    observed = [int(c.indices[-1]) for c in columns if c.indices.size]
    if not observed:
        raise AllColumnsUnusable("no observed entries in any column")
    return max(observed) + 1


def run(columns, cfg: RecoveryConfig) -> tuple[Subspace, RunTrace]:
    """Full stochastic recovery over a list of ``ObservedVector`` columns.

    Deterministic: the same columns, config, and seed give bitwise-equal
    traces and final bases.  Raises ``AllColumnsUnusable`` when no column
    has enough observed entries to start, or when a full pass worth of
    consecutive draws was rejected for data reasons (too few entries, zero
    norm, rank-deficient restriction).  Skips caused by an already-perfect
    fit are benign and do not count: a converged subspace that explains
    every column to within the residual tolerance is a success, not a
    failure.
    """
    m = len(columns)
    if m == 0 or not any(c.observed_count >= cfg.rank for c in columns):
        raise AllColumnsUnusable(
            f"no column has at least rank={cfg.rank} observed entries"
        )
    rng = np.random.default_rng(cfg.rng_seed)
    n = _resolve_ambient(columns, cfg)
    if cfg.initial is not None:
        if cfg.initial.rank != cfg.rank:
            raise ShapeMismatch(
                f"initial basis rank {cfg.initial.rank} != config rank {cfg.rank}"
            )
        U = cfg.initial
    else:
        U = init_subspace(n, cfg.rank, rng)
    if cfg.truth is not None and (
        cfg.truth.ambient_dim != n or cfg.truth.rank != cfg.rank
    ):
        raise ShapeMismatch("truth shape does not match the run")

    state = AdaptiveStepState.initial(cfg.step_params)
    trace = RunTrace()
    consecutive_skips = 0
    perm = None
    pos = 0
    for j in range(cfg.max_iterations):
        if cfg.order == "random":
            idx = int(rng.integers(0, m))
        else:
            if perm is None or pos == m:
                perm = rng.permutation(m)
                pos = 0
            idx = int(perm[pos])
            pos += 1
        U, state, rec = process_vector(U, columns[idx], state, cfg, iteration=j)
        if cfg.truth is not None:
            rec.angle = principal_angle(U, cfg.truth)
        trace.append(rec)
        if rec.skipped and math.isnan(rec.residual_norm):
            consecutive_skips += 1
            if consecutive_skips >= m:
                raise AllColumnsUnusable(
                    f"all of the last {m} draws were unusable at iteration {j}"
                )
        else:
            consecutive_skips = 0
        if (
            cfg.angle_tolerance is not None
            and cfg.truth is not None
            and rec.angle <= cfg.angle_tolerance
        ):
            break
    return U, trace
