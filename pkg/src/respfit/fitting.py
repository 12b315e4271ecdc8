"""Nonlinear least squares recovery of the gas exchange rates (alpha, beta).

The objective is the squared 2-norm of the stacked residual vector

    r(p) = [x(t_i; p) - X_i]_{i=1..M} ++ [y(t_i; p) - Y_i]_{i=1..M}

with the delay tau and the ventilation constants held fixed. Jacobians come
from forward differences (no sensitivity equations), which costs one residual
evaluation per parameter: together with the base point that gives the
familiar 3-evaluations-per-iteration bookkeeping for a two-parameter fit.

Two minimizers are provided, both from scratch:

* solve_lm: Levenberg-Marquardt with multiplicative damping on diag(JtJ)
  (Marquardt scaling, so damping is invariant under parameter rescaling).
* solve_trust_region: Gauss-Newton model minimized over a dogleg path inside
  a spherical trust region, with the standard 0.25/0.75 radius update and
  acceptance threshold 1e-4.

Both record a per-iteration trace (one row per accepted step plus the start
row) that can be exported as CSV via write_trace_csv. The search is
unconstrained: nothing stops iterates from visiting negative alpha or beta,
and if the model blows up there the trial is treated as a rejected step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import NonFiniteError, SingularNormalEquationsError
from .solver import HistoryFunction, solve_dde_raw

_SQRT_EPS = math.sqrt(np.finfo(float).eps)


@dataclass(frozen=True)
class ResidualProblem:
    """Measurement set plus everything held fixed during the fit."""

    dataset: Dataset
    history: HistoryFunction
    tau: float = 1.0
    t0: float = 0.0
    t_end: float = 5.0
    steps_per_delay: int = 50
    vent_gain: float = 0.14
    vent_rate: float = 0.05
    vent_offset: float = 100.0

    @classmethod
    def from_dataset(
        cls,
        dataset: Dataset,
        history: HistoryFunction,
        *,
        tau: float = 1.0,
        t0: float | None = None,
        t_end: float | None = None,
        steps_per_delay: int = 50,
        vent_gain: float = 0.14,
        vent_rate: float = 0.05,
        vent_offset: float = 100.0,
    ) -> "ResidualProblem":
        """Build a problem whose integration window covers the measurements."""
        if t0 is None:
            t0 = float(dataset.times[0])
        if t_end is None:
            t_end = float(dataset.times[-1])
        return cls(
            dataset=dataset,
            history=history,
            tau=tau,
            t0=t0,
            t_end=t_end,
            steps_per_delay=steps_per_delay,
            vent_gain=vent_gain,
            vent_rate=vent_rate,
            vent_offset=vent_offset,
        )

    def residuals(self, p) -> np.ndarray:
        """Stacked residual vector of length 2M at p = (alpha, beta)."""
        alpha, beta = float(p[0]), float(p[1])
        traj = solve_dde_raw(
            alpha,
            beta,
            self.tau,
            self.vent_gain,
            self.vent_rate,
            self.vent_offset,
            self.history,
            self.t0,
            self.t_end,
            self.steps_per_delay,
        )
        xs, ys = traj.eval_many(self.dataset.times)
        return np.concatenate([xs - self.dataset.x_obs, ys - self.dataset.y_obs])

    def objective(self, p) -> float:
        r = self.residuals(p)
        return float(r @ r)


def fd_jacobian(problem, p, base_residual: np.ndarray | None = None):
    """Forward-difference Jacobian of problem.residuals at p.

    Returns (J, n_evals) where n_evals counts residual evaluations performed
    here: one per parameter, plus one more if base_residual was not supplied.
    Step delta_k = sqrt(eps) * max(|p_k|, 1).
    """
    p = np.asarray(p, dtype=float)
    n_evals = 0
    if base_residual is None:
        base_residual = problem.residuals(p)
        n_evals += 1
    J = np.empty((len(base_residual), len(p)))
    for k in range(len(p)):
        delta = _SQRT_EPS * max(abs(p[k]), 1.0)
        pk = p.copy()
        pk[k] += delta
        J[:, k] = (problem.residuals(pk) - base_residual) / delta
        n_evals += 1
    return J, n_evals


class Termination(enum.Enum):
    STEP_TOLERANCE = "StepTolerance"
    FUNCTION_TOLERANCE = "FunctionTolerance"
    GRADIENT_TOLERANCE = "GradientTolerance"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class IterationRecord:
    """One accepted iteration (or the starting point, iteration 0)."""

    iteration: int
    function_count: int
    residual: float
    first_order_opt: float
    step_norm: float | None = None  # absent at iteration 0
    lam: float | None = None  # LM damping after the update; absent for TR
    trust_radius: float | None = None  # TR radius after the update; absent for LM


@dataclass(frozen=True)
class SolverOptions:
    step_tol: float = 1e-6
    fun_tol: float = 1e-6
    grad_tol: float = 1e-10
    max_iter: int = 100
    lambda0: float = 0.01
    lambda_max: float = 1e10
    radius0: float = 1.0
    radius_max: float = 100.0


@dataclass(frozen=True)
class FitResult:
    best_fit: tuple[float, float]
    final_residual: float
    termination: Termination
    trace: tuple[IterationRecord, ...]
    algorithm: str  # "LM" or "TrustRegion"

    @property
    def function_count(self) -> int:
        return self.trace[-1].function_count


def _grad_inf(J: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, float]:
    """Gradient of the squared-norm objective, 2*Jt*r, and its inf-norm."""
    grad = 2.0 * (J.T @ r)
    return grad, float(np.max(np.abs(grad)))


def _rel_step(step_norm: float, p: np.ndarray) -> float:
    return step_norm / max(float(np.linalg.norm(p)), 1.0)


def solve_lm(problem, p0, opts: SolverOptions | None = None) -> FitResult:
    """Levenberg-Marquardt with diag(JtJ) damping.

    Starts at lambda = opts.lambda0; an accepted step divides lambda by 10,
    a rejected one multiplies it by 10 and retries without recording an
    iteration. Raises SingularNormalEquationsError if the damped normal
    equations stay singular all the way up to lambda_max (an unidentifiable
    parameter direction).
    """
    opts = opts or SolverOptions()
    p = np.array(p0, dtype=float)
    r = problem.residuals(p)
    n_evals = 1
    J, k_evals = fd_jacobian(problem, p, base_residual=r)
    n_evals += k_evals
    cost = float(r @ r)
    grad, opt = _grad_inf(J, r)
    lam = opts.lambda0

    trace = [IterationRecord(0, n_evals, cost, opt, lam=lam)]
    if opt < opts.grad_tol:
        return FitResult((float(p[0]), float(p[1])), cost, Termination.GRADIENT_TOLERANCE, tuple(trace), "LM")

    termination = Termination.MAX_ITERATIONS
    for iteration in range(1, opts.max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        accepted = False
        while True:
            damped = A + lam * np.diag(np.diag(A))
            try:
                step = np.linalg.solve(damped, -g)
                solvable = np.all(np.isfinite(step))
            except np.linalg.LinAlgError:
                solvable = False
            if not solvable:
                if lam >= opts.lambda_max:
                    raise SingularNormalEquationsError(
                        f"damped normal equations singular at lambda={lam:g}; "
                        "a parameter direction leaves the residual unchanged"
                    )
                lam *= 10.0
                continue

            step_norm = float(np.linalg.norm(step))
            trial = p + step
            try:
                r_trial = problem.residuals(trial)
                n_evals += 1
                cost_trial = float(r_trial @ r_trial)
            except NonFiniteError:
                n_evals += 1
                cost_trial = math.inf

            if cost_trial < cost:
                lam /= 10.0
                p, r, cost = trial, r_trial, cost_trial
                accepted = True
                break
            lam *= 10.0
            # ever-larger damping only shortens the step; once it is
            # negligible relative to p, no meaningful move remains
            if _rel_step(step_norm, p) < opts.step_tol:
                termination = Termination.STEP_TOLERANCE
                break

        if not accepted:
            break

        J, k_evals = fd_jacobian(problem, p, base_residual=r)
        n_evals += k_evals
        grad, opt = _grad_inf(J, r)
        trace.append(
            IterationRecord(iteration, n_evals, cost, opt, step_norm=step_norm, lam=lam)
        )
        if _rel_step(step_norm, p) < opts.step_tol:
            termination = Termination.STEP_TOLERANCE
            break
        if opt < opts.grad_tol:
            termination = Termination.GRADIENT_TOLERANCE
            break

    return FitResult((float(p[0]), float(p[1])), cost, termination, tuple(trace), "LM")


def _dogleg(J: np.ndarray, r: np.ndarray, g: np.ndarray, radius: float):
    """Dogleg minimizer of ||r + J step||^2 over ||step|| <= radius.

    Returns (step, hit_boundary). g must be Jt r (half the objective
    gradient); the Gauss-Newton step comes from a least-squares solve so
    rank-deficient J degrades gracefully to the minimum-norm solution.
    """
    gn, *_ = np.linalg.lstsq(J, -r, rcond=None)
    if float(np.linalg.norm(gn)) <= radius:
        return gn, False

    Jg = J @ g
    denom = float(Jg @ Jg)
    gg = float(g @ g)
    cauchy = -(gg / denom) * g
    cauchy_norm = float(np.linalg.norm(cauchy))
    if cauchy_norm >= radius:
        return (-radius / math.sqrt(gg)) * g, True

    # walk from the Cauchy point toward the Gauss-Newton point until the
    # sphere is crossed: ||cauchy + s*d||^2 = radius^2 with s in (0, 1]
    d = gn - cauchy
    a = float(d @ d)
    b = 2.0 * float(cauchy @ d)
    c = cauchy_norm**2 - radius**2
    s = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return cauchy + s * d, True


def solve_trust_region(problem, p0, opts: SolverOptions | None = None) -> FitResult:
    """Dogleg trust-region Gauss-Newton.

    Acceptance ratio rho compares the actual residual decrease with the one
    the linear model promised; steps with rho > 1e-4 are taken. The radius
    shrinks by 4 when rho < 0.25 and doubles (capped at radius_max) when
    rho > 0.75 with the step on the boundary.
    """
    opts = opts or SolverOptions()
    p = np.array(p0, dtype=float)
    r = problem.residuals(p)
    n_evals = 1
    J, k_evals = fd_jacobian(problem, p, base_residual=r)
    n_evals += k_evals
    cost = float(r @ r)
    grad, opt = _grad_inf(J, r)
    radius = opts.radius0

    trace = [IterationRecord(0, n_evals, cost, opt, trust_radius=radius)]
    if opt < opts.grad_tol:
        return FitResult(
            (float(p[0]), float(p[1])),
            cost,
            Termination.GRADIENT_TOLERANCE,
            tuple(trace),
            "TrustRegion",
        )

    termination = Termination.MAX_ITERATIONS
    for iteration in range(1, opts.max_iter + 1):
        g = J.T @ r
        accepted = False
        while True:
            step, hit_boundary = _dogleg(J, r, g, radius)
            step_norm = float(np.linalg.norm(step))
            trial = p + step
            try:
                r_trial = problem.residuals(trial)
                n_evals += 1
                cost_trial = float(r_trial @ r_trial)
            except NonFiniteError:
                n_evals += 1
                cost_trial = math.inf

            model = r + J @ step
            predicted = cost - float(model @ model)
            rho = (cost - cost_trial) / predicted if predicted > 0.0 else -math.inf

            if rho < 0.25:
                radius /= 4.0
            elif rho > 0.75 and hit_boundary:
                radius = min(2.0 * radius, opts.radius_max)

            if rho > 1e-4:
                prev_cost = cost
                p, r, cost = trial, r_trial, cost_trial
                accepted = True
                break
            # rejected; once the region forces negligible steps, stop
            if _rel_step(step_norm, p) < opts.step_tol:
                termination = Termination.STEP_TOLERANCE
                break

        if not accepted:
            break

        J, k_evals = fd_jacobian(problem, p, base_residual=r)
        n_evals += k_evals
        grad, opt = _grad_inf(J, r)
        trace.append(
            IterationRecord(
                iteration, n_evals, cost, opt, step_norm=step_norm, trust_radius=radius
            )
        )
        if abs(prev_cost - cost) / max(prev_cost, 1.0) < opts.fun_tol:
            termination = Termination.FUNCTION_TOLERANCE
            break
        if _rel_step(step_norm, p) < opts.step_tol:
            termination = Termination.STEP_TOLERANCE
            break
        if opt < opts.grad_tol:
            termination = Termination.GRADIENT_TOLERANCE
            break

    return FitResult((float(p[0]), float(p[1])), cost, termination, tuple(trace), "TrustRegion")


def write_trace_csv(result: FitResult, path) -> None:
    """Export the iteration trace with the table layout of its algorithm.

    LM:  iter,fcount,residual,first_order_opt,lambda,step_norm
    TR:  iter,fcount,residual,step_norm,first_order_opt,trust_radius
    step_norm is empty on the iteration-0 row.
    """

    def fmt(v: float | None) -> str:
        return "" if v is None else f"{v:.17g}"

    path = Path(path)
    with open(path, "w", newline="") as fh:
        if result.algorithm == "LM":
            fh.write("iter,fcount,residual,first_order_opt,lambda,step_norm\n")
            for rec in result.trace:
                fh.write(
                    f"{rec.iteration},{rec.function_count},{fmt(rec.residual)},"
                    f"{fmt(rec.first_order_opt)},{fmt(rec.lam)},{fmt(rec.step_norm)}\n"
                )
        else:
            fh.write("iter,fcount,residual,step_norm,first_order_opt,trust_radius\n")
            for rec in result.trace:
                fh.write(
                    f"{rec.iteration},{rec.function_count},{fmt(rec.residual)},"
                    f"{fmt(rec.step_norm)},{fmt(rec.first_order_opt)},{fmt(rec.trust_radius)}\n"
                )
