"""Step-size schedules for the stochastic geodesic updates.

The adaptive controller keeps a scalar accumulator ``mu`` and an integer
``level``.  Anti-aligned consecutive gradients (a sign of overshooting)
push ``mu`` up through a sigmoid of the gradient inner product; when it
crosses ``mu_max`` the level increments and the step size halves.  Aligned
gradients pull ``mu`` down; hitting ``mu_min`` decrements the level and the
step size doubles.  After either crossing, ``mu`` resets to the midpoint of
its range.  The step size is always ``eta0 * 2**(-level)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ShapeMismatch
from .geometry import RankOneGradient

# Exponent clamp so the sigmoid saturates instead of overflowing.
_EXP_MAX = 700.0


@dataclass
class StepParams:
    """Constants of the adaptive step-size controller.

    ``f_max`` and ``f_min`` bound the per-iteration change of ``mu``
    (``f_min < 0 < f_max``), ``omega`` sets the sensitivity of the sigmoid,
    ``mu_min``/``mu_max`` bound the accumulator, and ``eta0`` is the base
    step size at level zero.
    """

    f_max: float = 0.5
    f_min: float = -1.0
    omega: float = 0.1
    mu_min: float = 0.0
    mu_max: float = 15.0
    eta0: float = 1.0

    def __post_init__(self):
        if not self.f_min < 0.0 < self.f_max:
            raise ValueError("need f_min < 0 < f_max")
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        if not self.mu_min < self.mu_max:
            raise ValueError("need mu_min < mu_max")
        if self.eta0 <= 0.0:
            raise ValueError("eta0 must be positive")

    @property
    def mu_init(self) -> float:
        """Reset value of the accumulator, midway between its bounds."""
        return 0.5 * (self.mu_min + self.mu_max)


@dataclass
class AdaptiveStepState:
    """Mutable part of the controller: accumulator, level, step size, and
    the factors of the previous gradient (``None`` before the first one)."""

    mu: float
    level: int
    eta: float
    prev_e: np.ndarray | None = field(default=None, repr=False)
    prev_w: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def initial(cls, params: StepParams) -> "AdaptiveStepState":
        return cls(mu=params.mu_init, level=0, eta=params.eta0)


def sigmoid(x: float, params: StepParams) -> float:
    """Monotone map from the real line onto ``(f_min, f_max)`` with value
    exactly zero at ``x = 0``."""
    t = -x / params.omega
    if t > _EXP_MAX:
        t = _EXP_MAX
    q = params.f_max / params.f_min
    return params.f_min + (params.f_max - params.f_min) / (1.0 - q * math.exp(t))


def gradient_inner_product(g_prev: RankOneGradient, g_cur: RankOneGradient) -> float:
    """Frobenius inner product of two rank-one gradients.

    Computed from the factors as ``(e1 . e2) * (w1 . w2)`` in O(n + d); the
    two leading minus signs of the gradients cancel.
    """
    if g_prev.e.shape != g_cur.e.shape or g_prev.w.shape != g_cur.w.shape:
        raise ShapeMismatch(
            f"gradient factor shapes differ: ({g_prev.e.shape}, {g_prev.w.shape}) "
            f"vs ({g_cur.e.shape}, {g_cur.w.shape})"
        )
    return float(g_prev.e @ g_cur.e) * float(g_prev.w @ g_cur.w)


def adapt(
    state: AdaptiveStepState, grad: RankOneGradient, params: StepParams
) -> AdaptiveStepState:
    """One controller update, returning a new state.

    On the first call (no stored previous gradient) the accumulator and
    level are left unchanged and the gradient factors are stored.  Otherwise
    ``mu`` moves by ``sigmoid(-<g_prev, g_cur>)``, is floored at ``mu_min``,
    and a boundary crossing changes the level and resets ``mu``.
    """
    if state.prev_e is None:
        return replace(state, prev_e=grad.e, prev_w=grad.w)
    ip = float(state.prev_e @ grad.e) * float(state.prev_w @ grad.w)
    mu = max(state.mu + sigmoid(-ip, params), params.mu_min)
    level = state.level
    if mu >= params.mu_max:
        level += 1
        mu = params.mu_init
    elif mu <= params.mu_min:
        level -= 1
        mu = params.mu_init
    eta = params.eta0 * 2.0 ** (-level)
    return AdaptiveStepState(mu=mu, level=level, eta=eta, prev_e=grad.e, prev_w=grad.w)


def diminishing(iteration: int, scale: float) -> float:
    """Classic decaying schedule ``scale / (1 + iteration)``."""
    return scale / (1.0 + iteration)
