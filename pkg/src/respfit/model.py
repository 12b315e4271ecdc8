"""Two-gas blood regulation model with delayed ventilatory feedback.

The state pair (x, y) tracks the blood levels of the two regulated gases
(x is the CO2-like quantity, y the O2-like quantity). Both are produced at
unit rate and cleared in proportion to the ventilation drive V, which the
controller computes from the state one transport delay tau in the past:

    dx/dt = 1 - alpha * V(x(t - tau), y(t - tau)) * x(t)
    dy/dt = 1 - beta  * V(x(t - tau), y(t - tau)) * y(t)

    V(xd, yd) = vent_gain * exp(-vent_rate * (vent_offset - yd)) * xd

alpha and beta are the clearance gains (the quantities the fitting layer
recovers); tau and the three ventilation constants are treated as known.

Everything here is a pure function of immutable inputs and safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoRootError

# Fixed search bracket for the equilibrium root (in x); generous on both
# sides of any physically plausible operating point.
EQUILIBRIUM_BRACKET = (1e-6, 1e3)


def _exp(z: float) -> float:
    # math.exp raises OverflowError instead of returning inf; the model is
    # total on finite inputs, so saturate the way C's exp() does.
    try:
        return math.exp(z)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class ModelParams:
    """Clearance gains, transport delay, and ventilation constants."""

    alpha: float
    beta: float
    tau: float = 1.0
    vent_gain: float = 0.14
    vent_rate: float = 0.05
    vent_offset: float = 100.0

    def __post_init__(self):
        for name in ("alpha", "beta", "tau", "vent_gain", "vent_rate", "vent_offset"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        for name in ("alpha", "beta", "tau", "vent_gain", "vent_rate"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class State:
    """Instantaneous (x, y) gas levels."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"state components must be finite, got ({self.x!r}, {self.y!r})")


@dataclass(frozen=True)
class EquilibriumPoint:
    """Constant solution (x*, y*) and the verified algebraic residual."""

    x_star: float
    y_star: float
    residual_norm: float


def ventilation(x_delayed: float, y_delayed: float, params: ModelParams) -> float:
    """Ventilation drive V for the given delayed state."""
    return params.vent_gain * _exp(-params.vent_rate * (params.vent_offset - y_delayed)) * x_delayed


def rhs(current: State, delayed: State, params: ModelParams) -> tuple[float, float]:
    """Time derivative (dx/dt, dy/dt) given the current and delayed states."""
    v = ventilation(delayed.x, delayed.y, params)
    return (1.0 - params.alpha * v * current.x, 1.0 - params.beta * v * current.y)


def _log_equilibrium_residual(x: float, params: ModelParams) -> float:
    # At equilibrium both derivatives vanish, which forces y* = (alpha/beta) x*
    # and  alpha * vent_gain * x*^2 * exp(-vent_rate*(vent_offset - y*)) = 1.
    # The log of the left-hand side is monotone in x and overflow-free over the
    # whole bracket, unlike the raw product.
    ratio = params.alpha / params.beta
    return (
        math.log(params.alpha * params.vent_gain)
        + 2.0 * math.log(x)
        - params.vent_rate * params.vent_offset
        + params.vent_rate * ratio * x
    )


def equilibrium_solve(
    params: ModelParams,
    bracket: tuple[float, float] = EQUILIBRIUM_BRACKET,
) -> EquilibriumPoint:
    """Solve for the unique positive equilibrium (x*, y*).

    Bisection on the log-residual down to a narrow interval, then a Newton
    polish; accepts when the linear-space residual |1 - alpha*V*x*| is at or
    below 1e-12. Raises NoRootError when the bracket shows no sign change
    (nonphysical parameters push the equilibrium outside the bracket).
    """
    lo, hi = bracket
    if not (0.0 < lo < hi):
        raise ValueError(f"bracket must satisfy 0 < lo < hi, got {bracket!r}")
    g_lo = _log_equilibrium_residual(lo, params)
    g_hi = _log_equilibrium_residual(hi, params)
    if g_lo > 0.0 or g_hi < 0.0:
        raise NoRootError(
            f"no equilibrium in x bracket [{lo:g}, {hi:g}] for "
            f"alpha={params.alpha:g}, beta={params.beta:g}"
        )

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-9 * max(1.0, mid):
            break
        if _log_equilibrium_residual(mid, params) > 0.0:
            hi = mid
        else:
            lo = mid

    ratio = params.alpha / params.beta
    x = 0.5 * (lo + hi)
    for _ in range(20):
        g = _log_equilibrium_residual(x, params)
        if abs(math.expm1(g)) <= 1e-12:
            break
        x -= g / (2.0 / x + params.vent_rate * ratio)

    y = ratio * x
    v = ventilation(x, y, params)
    residual = max(abs(1.0 - params.alpha * v * x), abs(1.0 - params.beta * v * y))
    return EquilibriumPoint(x_star=x, y_star=y, residual_norm=residual)
