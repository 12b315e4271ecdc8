"""Fixed-step method-of-steps integrator for the delayed two-gas system.

The delay tau is constant, so the system is integrated with classical RK4 on
a grid whose step h divides tau exactly (h = tau / steps_per_delay). Delayed
full-step samples then always land on already-computed grid nodes, the
derivative kinks at multiples of tau sit on step boundaries, and only the
half-step stage times need interpolation, done with cubic Hermite using the
stored node derivatives. That combination keeps the classical 4th-order
accuracy of the scheme.

A Trajectory is immutable after construction and evaluable anywhere on
[t0 - tau, t_end]: exact history below t0, stored node values on the grid,
cubic Hermite in between.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import InvalidGridError, NonFiniteError, OutOfDomainError
from .model import ModelParams, State

# Relative slack for time-domain boundary checks; absorbs float noise in
# externally constructed sample times (e.g. linspace endpoints).
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class ConstantHistory:
    """History that holds one fixed state on the whole initial interval."""

    state: State

    def __call__(self, t: float) -> State:
        return self.state

    def sample(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = len(times)
        return np.full(n, self.state.x), np.full(n, self.state.y)

    def span(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def describe(self) -> dict:
        return {"kind": "constant", "x": self.state.x, "y": self.state.y}


@dataclass(frozen=True)
class TabulatedHistory:
    """History given at discrete times, linearly interpolated between them."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise ValueError("tabulated history needs at least two nodes")
        if len(x) != len(times) or len(y) != len(times):
            raise ValueError("tabulated history arrays must have equal length")
        if not np.all(np.diff(times) > 0.0):
            raise ValueError("tabulated history times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("tabulated history values must be finite")
        for name, arr in (("times", times), ("x", x), ("y", y)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __call__(self, t: float) -> State:
        xs, ys = self.sample(np.array([t]))
        return State(float(xs[0]), float(ys[0]))

    def sample(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        times = np.asarray(times, dtype=float)
        lo, hi = self.times[0], self.times[-1]
        tol = _EDGE_TOL * max(1.0, abs(lo), abs(hi))
        if np.any(times < lo - tol) or np.any(times > hi + tol):
            raise OutOfDomainError(
                f"history evaluated outside [{lo:g}, {hi:g}]"
            )
        return np.interp(times, self.times, self.x), np.interp(times, self.times, self.y)

    def span(self) -> tuple[float, float]:
        return (float(self.times[0]), float(self.times[-1]))

    def describe(self) -> dict:
        return {
            "kind": "tabulated",
            "times": self.times.tolist(),
            "x": self.x.tolist(),
            "y": self.y.tolist(),
        }


HistoryFunction = ConstantHistory | TabulatedHistory


def history_from_description(desc: dict) -> HistoryFunction:
    """Inverse of HistoryFunction.describe()."""
    kind = desc.get("kind")
    if kind == "constant":
        return ConstantHistory(State(float(desc["x"]), float(desc["y"])))
    if kind == "tabulated":
        return TabulatedHistory(
            np.asarray(desc["times"], dtype=float),
            np.asarray(desc["x"], dtype=float),
            np.asarray(desc["y"], dtype=float),
        )
    raise ValueError(f"unknown history kind {kind!r}")


@dataclass(frozen=True)
class Trajectory:
    """Dense numerical solution on [t0, t_end] plus its history.

    Node arrays (times, x, y) live on the arithmetic grid t0 + k*h; dx, dy
    hold the exact node derivatives used for Hermite interpolation.
    """

    t0: float
    t_end: float
    step: float
    tau: float
    steps_per_delay: int
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray = field(repr=False)
    dy: np.ndarray = field(repr=False)
    history: HistoryFunction = field(repr=False)

    def eval(self, t: float) -> State:
        """State at a single time in [t0 - tau, t_end]."""
        xs, ys = self.eval_many(np.array([float(t)]))
        return State(float(xs[0]), float(ys[0]))

    def eval_many(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized evaluation at arbitrary times in [t0 - tau, t_end].

        History value for t <= t0, stored node value on grid nodes, cubic
        Hermite between adjacent nodes otherwise.
        """
        ts = np.asarray(times, dtype=float)
        lo = self.t0 - self.tau
        tol = _EDGE_TOL * max(1.0, abs(lo), abs(self.t_end))
        if np.any(ts < lo - tol) or np.any(ts > self.t_end + tol):
            raise OutOfDomainError(
                f"evaluation time outside [{lo:g}, {self.t_end:g}]"
            )

        xs = np.empty_like(ts)
        ys = np.empty_like(ts)
        in_history = ts <= self.t0
        if np.any(in_history):
            hx, hy = self.history.sample(ts[in_history])
            xs[in_history] = hx
            ys[in_history] = hy

        on_grid = ~in_history
        if np.any(on_grid):
            tq = np.minimum(ts[on_grid], self.times[-1])
            # side='right' makes an exact node time fall in the interval whose
            # left endpoint it is (s = 0), so node values are returned bit-exact.
            j = np.searchsorted(self.times, tq, side="right") - 1
            j = np.clip(j, 0, len(self.times) - 2)
            s = (tq - self.times[j]) / self.step
            h00 = (2.0 * s - 3.0) * s * s + 1.0
            h10 = ((s - 2.0) * s + 1.0) * s
            h01 = (3.0 - 2.0 * s) * s * s
            h11 = (s - 1.0) * s * s
            xs[on_grid] = (
                h00 * self.x[j]
                + h10 * self.step * self.dx[j]
                + h01 * self.x[j + 1]
                + h11 * self.step * self.dx[j + 1]
            )
            ys[on_grid] = (
                h00 * self.y[j]
                + h10 * self.step * self.dy[j]
                + h01 * self.y[j + 1]
                + h11 * self.step * self.dy[j + 1]
            )
        return xs, ys

    def to_csv(self, path) -> None:
        """Write the node grid as CSV (t,x,y) at full double precision."""
        with open(path, "w", newline="") as fh:
            fh.write("t,x,y\n")
            for t, x, y in zip(self.times, self.x, self.y):
                fh.write(f"{t:.17g},{x:.17g},{y:.17g}\n")


def solve_dde_raw(
    alpha: float,
    beta: float,
    tau: float,
    vent_gain: float,
    vent_rate: float,
    vent_offset: float,
    history: HistoryFunction,
    t0: float,
    t_end: float,
    steps_per_delay: int = 50,
) -> Trajectory:
    """Integrate with raw coefficients, without sign validation on alpha/beta.

    The fitting layer explores the unconstrained (alpha, beta) plane, so this
    entry point accepts any finite gains; blow-ups surface as NonFiniteError.
    Use solve_dde for validated ModelParams.
    """
    if not (t_end > t0):
        raise ValueError(f"t_end must exceed t0, got [{t0!r}, {t_end!r}]")
    if steps_per_delay != int(steps_per_delay) or int(steps_per_delay) < 2:
        raise ValueError(f"steps_per_delay must be an integer >= 2, got {steps_per_delay!r}")
    if not (tau > 0.0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive and finite, got {tau!r}")
    steps_per_delay = int(steps_per_delay)

    h = tau / steps_per_delay
    n_float = (t_end - t0) / h
    n = int(round(n_float))
    if n < 1 or abs(n_float - n) > _EDGE_TOL * max(1.0, n_float):
        raise InvalidGridError(
            f"interval [{t0:g}, {t_end:g}] is not an integer number of steps "
            f"h = tau/steps_per_delay = {h:g}"
        )

    lo_h, hi_h = history.span()
    tol = _EDGE_TOL * max(1.0, abs(t0), tau)
    if lo_h > t0 - tau + tol or hi_h < t0 - tol:
        raise ValueError(
            f"history covers [{lo_h:g}, {hi_h:g}] but must cover [{t0 - tau:g}, {t0:g}]"
        )

    nd = steps_per_delay
    hist_start = t0 - tau
    node_times = hist_start + h * np.arange(nd + 1)
    mid_times = hist_start + h * (np.arange(nd) + 0.5)
    hist_x, hist_y = history.sample(node_times)
    hist_mid_x, hist_mid_y = history.sample(mid_times)

    x = np.empty(n + 1)
    y = np.empty(n + 1)
    dx = np.empty(n + 1)
    dy = np.empty(n + 1)
    x[0] = hist_x[nd]
    y[0] = hist_y[nd]

    status = backend.active.integrate(
        float(alpha),
        float(beta),
        float(vent_gain),
        float(vent_rate),
        float(vent_offset),
        h,
        n,
        nd,
        np.ascontiguousarray(hist_x),
        np.ascontiguousarray(hist_y),
        np.ascontiguousarray(hist_mid_x),
        np.ascontiguousarray(hist_mid_y),
        x,
        y,
        dx,
        dy,
    )
    if status:
        raise NonFiniteError(
            f"state became non-finite at t = {t0 + status * h:.6g} "
            f"(alpha={alpha:g}, beta={beta:g})"
        )

    times = t0 + h * np.arange(n + 1)
    for arr in (times, x, y, dx, dy):
        arr.flags.writeable = False
    return Trajectory(
        t0=t0,
        t_end=float(times[-1]),
        step=h,
        tau=tau,
        steps_per_delay=steps_per_delay,
        times=times,
        x=x,
        y=y,
        dx=dx,
        dy=dy,
        history=history,
    )


def solve_dde(
    params: ModelParams,
    history: HistoryFunction,
    t0: float,
    t_end: float,
    steps_per_delay: int = 50,
) -> Trajectory:
    """Integrate the system for validated model parameters."""
    return solve_dde_raw(
        params.alpha,
        params.beta,
        params.tau,
        params.vent_gain,
        params.vent_rate,
        params.vent_offset,
        history,
        t0,
        t_end,
        steps_per_delay,
    )
