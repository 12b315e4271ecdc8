"""End-to-end experiment harness: generate data, fit, and write artifacts.

Five preset configurations (ex1..ex5) cover the combinations of starting
point, noise level, and history that the toolkit is built to study:

    ex1  p0=(0.3, 0.5)    sigma=0.20  constant history (35, 35)
    ex2  p0=(0.01, 0.01)  sigma=0.20  constant history (35, 35)
    ex3  p0=(0.3, 0.5)    sigma=0.40  constant history (35, 35)
    ex4  p0=(0.01, 0.01)  sigma=0.40  constant history (35, 35)
    ex5  p0=(0.01, 0.01)  sigma=0.20  history held at the equilibrium point

Each run writes, into its output directory: the dataset CSV and its JSON
sidecar, one iteration-trace CSV per algorithm, the fitted trajectory at the
best fit, residual histograms for x and y, and a summary.json record. All
files are written deterministically (fixed key order, 17-significant-digit
floats, no timestamps), so identical invocations produce identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import generate_dataset, save_dataset
from .errors import ConfigError, SolverError
from .fitting import FitResult, ResidualProblem, solve_lm, solve_trust_region, write_trace_csv
from .model import ModelParams, State, equilibrium_solve
from .solver import ConstantHistory, HistoryFunction, solve_dde_raw

ALGORITHMS = ("lm", "tr")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a single experiment needs, validated up front."""

    truth: ModelParams
    p0: tuple[float, float]
    sigma: float
    seed: int
    n_points: int = 51
    history_spec: str = "constant:35,35"
    t0: float = 0.0
    t_end: float = 5.0
    steps_per_delay: int = 50
    algorithms: tuple[str, ...] = ALGORITHMS
    name: str = "custom"
    out_dir: str | None = None

    def validate(self) -> None:
        if not (math.isfinite(self.t0) and math.isfinite(self.t_end) and self.t_end > self.t0):
            raise ConfigError(f"t_end: must exceed t0, got [{self.t0!r}, {self.t_end!r}]")
        if self.n_points < 2:
            raise ConfigError(f"n_points: must be at least 2, got {self.n_points}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ConfigError(f"sigma: must be nonnegative, got {self.sigma!r}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {self.seed}")
        if self.steps_per_delay < 2:
            raise ConfigError(f"steps_per_delay: must be at least 2, got {self.steps_per_delay}")
        if len(self.p0) != 2 or not all(math.isfinite(v) for v in self.p0):
            raise ConfigError(f"p0: must be two finite numbers, got {self.p0!r}")
        if not self.algorithms:
            raise ConfigError("algorithms: at least one of lm, tr required")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"algorithms: unknown algorithm {a!r}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError(f"algorithms: duplicate entries in {self.algorithms!r}")
        resolve_history(self.history_spec, self.truth)  # raises ConfigError if malformed


def resolve_history(spec: str, truth: ModelParams) -> HistoryFunction:
    """Turn a history spec string into a history function.

    ``constant:X,Y`` holds the state (X, Y) before t0; ``equilibrium`` holds
    the equilibrium point of the truth parameters, computed on the spot.
    """
    spec = spec.strip()
    if spec == "equilibrium":
        eq = equilibrium_solve(truth)
        return ConstantHistory(State(eq.x_star, eq.y_star))
    if spec.startswith("constant:"):
        parts = spec[len("constant:") :].split(",")
        if len(parts) != 2:
            raise ConfigError(f"history: expected constant:X,Y, got {spec!r}")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError(f"history: non-numeric constant values in {spec!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ConfigError(f"history: constant values must be finite, got {spec!r}")
        return ConstantHistory(State(x, y))
    raise ConfigError(f"history: unknown spec {spec!r} (use constant:X,Y or equilibrium)")


PRESETS: dict[str, ExperimentConfig] = {
    "ex1": ExperimentConfig(
        truth=ModelParams(alpha=0.5, beta=0.8),
        p0=(0.3, 0.5),
        sigma=0.20,
        seed=1,
        name="ex1",
    ),
    "ex2": ExperimentConfig(
        truth=ModelParams(alpha=0.5, beta=0.8),
        p0=(0.01, 0.01),
        sigma=0.20,
        seed=1,
        name="ex2",
    ),
    "ex3": ExperimentConfig(
        truth=ModelParams(alpha=0.5, beta=0.8),
        p0=(0.3, 0.5),
        sigma=0.40,
        seed=1,
        name="ex3",
    ),
    "ex4": ExperimentConfig(
        truth=ModelParams(alpha=0.5, beta=0.8),
        p0=(0.01, 0.01),
        sigma=0.40,
        seed=1,
        name="ex4",
    ),
    "ex5": ExperimentConfig(
        truth=ModelParams(alpha=0.5, beta=0.8),
        p0=(0.01, 0.01),
        sigma=0.20,
        seed=1,
        history_spec="equilibrium",
        name="ex5",
    ),
}


@dataclass(frozen=True)
class SummaryRow:
    """Per-run digest: fits, iteration counts, and relative errors in percent."""

    example: str
    seed: int
    sigma: float
    p0: tuple[float, float]
    truth: tuple[float, float]
    lm_fit: tuple[float, float] | None = None
    tr_fit: tuple[float, float] | None = None
    lm_iterations: int | None = None
    tr_iterations: int | None = None
    lm_rel_err_pct: tuple[float, float] | None = None
    tr_rel_err_pct: tuple[float, float] | None = None


def _rel_err_pct(fit: tuple[float, float], truth: ModelParams) -> tuple[float, float]:
    return (
        abs(fit[0] - truth.alpha) / truth.alpha * 100.0,
        abs(fit[1] - truth.beta) / truth.beta * 100.0,
    )


def _histogram(errors: np.ndarray, sigma: float, n_bins: int = 10):
    """Equal-width bins on [-4 sigma, 4 sigma]; outliers land in the edge bins.

    With sigma = 0 the span degenerates, so it falls back to the error range
    itself (floored at 1e-12 so the edges stay distinct).
    """
    half = 4.0 * sigma if sigma > 0.0 else max(float(np.max(np.abs(errors))), 1e-12)
    edges = np.linspace(-half, half, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, errors, side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return edges, counts


def _write_histogram(path: Path, edges: np.ndarray, counts: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("bin_lo,bin_hi,count\n")
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            fh.write(f"{lo:.17g},{hi:.17g},{int(c)}\n")


def _staged(stage: str, exc: SolverError) -> SolverError:
    wrapped = type(exc)(f"{stage}: {exc}")
    wrapped.__cause__ = exc
    return wrapped


def run_config(config: ExperimentConfig, out_dir=None) -> SummaryRow:
    """Run one experiment end to end and write its artifacts.

    out_dir overrides config.out_dir; one of the two must be set. Returns the
    SummaryRow that also lands in summary.json.
    """
    config.validate()
    if out_dir is None:
        out_dir = config.out_dir
    if out_dir is None:
        raise ConfigError("out_dir: no output directory given")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    history = resolve_history(config.history_spec, config.truth)
    solver_settings = {
        "t0": config.t0,
        "t_end": config.t_end,
        "steps_per_delay": config.steps_per_delay,
        "tau": config.truth.tau,
    }
    try:
        dataset = generate_dataset(
            config.truth,
            history,
            config.t0,
            config.t_end,
            config.n_points,
            config.sigma,
            config.seed,
            config.steps_per_delay,
        )
    except SolverError as exc:
        raise _staged("generate_dataset", exc) from exc
    save_dataset(dataset, out / "dataset.csv", history=history, solver_settings=solver_settings)

    problem = ResidualProblem.from_dataset(
        dataset,
        history,
        tau=config.truth.tau,
        t0=config.t0,
        t_end=config.t_end,
        steps_per_delay=config.steps_per_delay,
        vent_gain=config.truth.vent_gain,
        vent_rate=config.truth.vent_rate,
        vent_offset=config.truth.vent_offset,
    )

    fits: dict[str, FitResult] = {}
    for algo in config.algorithms:
        solver = solve_lm if algo == "lm" else solve_trust_region
        try:
            fits[algo] = solver(problem, config.p0)
        except SolverError as exc:
            raise _staged(f"fit_{algo}", exc) from exc

    summary: dict = {
        "example": config.name,
        "seed": config.seed,
        "sigma": config.sigma,
        "n_points": config.n_points,
        "p0": list(config.p0),
        "truth": {"alpha": config.truth.alpha, "beta": config.truth.beta},
        "tau": config.truth.tau,
        "history": history.describe(),
        "t0": config.t0,
        "t_end": config.t_end,
        "steps_per_delay": config.steps_per_delay,
        "algorithms": list(config.algorithms),
    }
    row_kwargs: dict = {}

    for algo, result in fits.items():
        write_trace_csv(result, out / f"trace_{algo}.csv")
        try:
            fitted = solve_dde_raw(
                result.best_fit[0],
                result.best_fit[1],
                config.truth.tau,
                config.truth.vent_gain,
                config.truth.vent_rate,
                config.truth.vent_offset,
                history,
                config.t0,
                config.t_end,
                config.steps_per_delay,
            )
        except SolverError as exc:
            raise _staged(f"refit_trajectory_{algo}", exc) from exc
        fitted.to_csv(out / f"fit_{algo}.csv")

        fx, fy = fitted.eval_many(dataset.times)
        edges_x, counts_x = _histogram(dataset.x_obs - fx, config.sigma)
        edges_y, counts_y = _histogram(dataset.y_obs - fy, config.sigma)
        _write_histogram(out / f"hist_{algo}_x.csv", edges_x, counts_x)
        _write_histogram(out / f"hist_{algo}_y.csv", edges_y, counts_y)

        rel = _rel_err_pct(result.best_fit, config.truth)
        iters = result.trace[-1].iteration
        summary[algo] = {
            "best_fit": {"alpha": result.best_fit[0], "beta": result.best_fit[1]},
            "final_residual": result.final_residual,
            "iterations": iters,
            "function_count": result.function_count,
            "termination": result.termination.value,
            "rel_err_pct": {"alpha": rel[0], "beta": rel[1]},
        }
        row_kwargs[f"{algo}_fit"] = result.best_fit
        row_kwargs[f"{algo}_iterations"] = iters
        row_kwargs[f"{algo}_rel_err_pct"] = rel

    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return SummaryRow(
        example=config.name,
        seed=config.seed,
        sigma=config.sigma,
        p0=config.p0,
        truth=(config.truth.alpha, config.truth.beta),
        **row_kwargs,
    )


def run_example(
    name: str,
    seed: int | None = None,
    sigma: float | None = None,
    out_dir=None,
) -> SummaryRow:
    """Run a preset, optionally overriding its seed, noise level, and out_dir."""
    if name not in PRESETS:
        raise ConfigError(f"example: unknown name {name!r} (choose from {sorted(PRESETS)})")
    config = PRESETS[name]
    if seed is not None:
        config = replace(config, seed=int(seed))
    if sigma is not None:
        config = replace(config, sigma=float(sigma))
    if out_dir is None:
        out_dir = config.out_dir or f"out_{name}"
    return run_config(config, out_dir=out_dir)


# Column order for the machine-readable aggregate table.
_AGG_FIELDS = (
    "example",
    "n_seeds",
    "sigma",
    "lm_mean_alpha_pct",
    "lm_max_alpha_pct",
    "lm_mean_beta_pct",
    "lm_max_beta_pct",
    "tr_mean_alpha_pct",
    "tr_max_alpha_pct",
    "tr_mean_beta_pct",
    "tr_max_beta_pct",
)


def run_summary(seeds, out_dir) -> list[dict]:
    """Replay every preset for every seed and aggregate the relative errors.

    Writes seed_<s>/<example>/ run directories plus summary.csv (machine
    readable) and summary.txt (aligned table) under out_dir. Returns the
    aggregate rows.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("seeds: at least one seed required")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows: dict[str, list[SummaryRow]] = {name: [] for name in PRESETS}
    for seed in seeds:
        for name in PRESETS:
            row = run_example(name, seed=seed, out_dir=out / f"seed_{seed}" / name)
            rows[name].append(row)

    aggregates = []
    for name, runs in rows.items():
        lm_a = [r.lm_rel_err_pct[0] for r in runs]
        lm_b = [r.lm_rel_err_pct[1] for r in runs]
        tr_a = [r.tr_rel_err_pct[0] for r in runs]
        tr_b = [r.tr_rel_err_pct[1] for r in runs]
        aggregates.append(
            {
                "example": name,
                "n_seeds": len(runs),
                "sigma": runs[0].sigma,
                "lm_mean_alpha_pct": sum(lm_a) / len(lm_a),
                "lm_max_alpha_pct": max(lm_a),
                "lm_mean_beta_pct": sum(lm_b) / len(lm_b),
                "lm_max_beta_pct": max(lm_b),
                "tr_mean_alpha_pct": sum(tr_a) / len(tr_a),
                "tr_max_alpha_pct": max(tr_a),
                "tr_mean_beta_pct": sum(tr_b) / len(tr_b),
                "tr_max_beta_pct": max(tr_b),
            }
        )

    with open(out / "summary.csv", "w", newline="") as fh:
        fh.write(",".join(_AGG_FIELDS) + "\n")
        for agg in aggregates:
            cells = []
            for key in _AGG_FIELDS:
                v = agg[key]
                cells.append(f"{v:.17g}" if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")

    _write_text_table(out / "summary.txt", aggregates)
    return aggregates


def _write_text_table(path: Path, aggregates: list[dict]) -> None:
    headers = (
        "example",
        "seeds",
        "sigma",
        "LM mean a%",
        "LM max a%",
        "LM mean b%",
        "LM max b%",
        "TR mean a%",
        "TR max a%",
        "TR mean b%",
        "TR max b%",
    )
    table = [headers]
    for agg in aggregates:
        table.append(
            (
                agg["example"],
                str(agg["n_seeds"]),
                f"{agg['sigma']:.2f}",
                f"{agg['lm_mean_alpha_pct']:.4f}",
                f"{agg['lm_max_alpha_pct']:.4f}",
                f"{agg['lm_mean_beta_pct']:.4f}",
                f"{agg['lm_max_beta_pct']:.4f}",
                f"{agg['tr_mean_alpha_pct']:.4f}",
                f"{agg['tr_max_alpha_pct']:.4f}",
                f"{agg['tr_mean_beta_pct']:.4f}",
                f"{agg['tr_max_beta_pct']:.4f}",
            )
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    with open(path, "w") as fh:
        for r, row in enumerate(table):
            fh.write("  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip() + "\n")
            if r == 0:
                fh.write("  ".join("-" * w for w in widths) + "\n")


# Keys accepted in a flat config file, with their coercions.
_CONFIG_COERCIONS = {
    "name": str,
    "alpha": float,
    "beta": float,
    "tau": float,
    "vent_gain": float,
    "vent_rate": float,
    "vent_offset": float,
    "p0_alpha": float,
    "p0_beta": float,
    "sigma": float,
    "seed": int,
    "n_points": int,
    "history": str,
    "t0": float,
    "t_end": float,
    "steps_per_delay": int,
    "algorithms": str,
    "out_dir": str,
}

_REQUIRED_CONFIG_KEYS = ("alpha", "beta", "p0_alpha", "p0_beta", "sigma", "seed")


def parse_config_file(path) -> ExperimentConfig:
    """Parse a flat ``key = value`` experiment file.

    Blank lines and ``#`` comments are ignored; unknown or duplicate keys are
    configuration errors. See README for the key list.
    """
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None

    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_COERCIONS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    for key in _REQUIRED_CONFIG_KEYS:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    values: dict = {}
    for key, text_value in raw.items():
        try:
            values[key] = _CONFIG_COERCIONS[key](text_value)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {text_value!r}") from None

    try:
        truth = ModelParams(
            alpha=values["alpha"],
            beta=values["beta"],
            tau=values.get("tau", 1.0),
            vent_gain=values.get("vent_gain", 0.14),
            vent_rate=values.get("vent_rate", 0.05),
            vent_offset=values.get("vent_offset", 100.0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    algorithms = ALGORITHMS
    if "algorithms" in values:
        algorithms = tuple(a.strip().lower() for a in values["algorithms"].split(",") if a.strip())

    config = ExperimentConfig(
        truth=truth,
        p0=(values["p0_alpha"], values["p0_beta"]),
        sigma=values["sigma"],
        seed=values["seed"],
        n_points=values.get("n_points", 51),
        history_spec=values.get("history", "constant:35,35"),
        t0=values.get("t0", 0.0),
        t_end=values.get("t_end", 5.0),
        steps_per_delay=values.get("steps_per_delay", 50),
        algorithms=algorithms,
        name=values.get("name", "custom"),
        out_dir=values.get("out_dir"),
    )
    config.validate()
    return config
