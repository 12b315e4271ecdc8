"""Timing and equivalence comparison of the two stepper backends.

Runs representative workloads (single trajectory solves and a complete LM
fit) against the compiled extension and the pure-Python twin, reports best
wall times and the speedup, and confirms the outputs are bit-identical.

    python3 benchmarks/bench_backends.py [--repeat N]
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from respfit import ConstantHistory, ModelParams, State, backend, generate_dataset, solve_dde
from respfit.fitting import ResidualProblem, solve_lm

TRUTH = ModelParams(alpha=0.5, beta=0.8)
HIST = ConstantHistory(State(35.0, 35.0))


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def _workloads():
    dataset = generate_dataset(TRUTH, HIST, 0.0, 5.0, 51, 0.20, 1)
    problem = ResidualProblem.from_dataset(dataset, HIST)
    return [
        ("solve spd=50 [0,5]", lambda: solve_dde(TRUTH, HIST, 0.0, 5.0)),
        ("solve spd=400 [0,20]", lambda: solve_dde(TRUTH, HIST, 0.0, 20.0, steps_per_delay=400)),
        ("LM fit (51 pts, sigma=0.2)", lambda: solve_lm(problem, (0.3, 0.5))),
    ]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=7, help="timing repetitions (best-of)")
    args = parser.parse_args(argv)

    names = backend.available()
    if "compiled" not in names:
        print("compiled backend is not built; nothing to compare", file=sys.stderr)
        return 1

    rows = []
    for label, fn in _workloads():
        timings = {}
        for name in ("compiled", "python"):
            backend.select(name)
            timings[name] = _best(fn, args.repeat)
        rows.append((label, timings["compiled"], timings["python"]))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload'.ljust(width)}  {'compiled':>12}  {'python':>12}  {'speedup':>8}")
    for label, tc, tp in rows:
        print(f"{label.ljust(width)}  {tc * 1e3:>10.3f}ms  {tp * 1e3:>10.3f}ms  {tp / tc:>7.1f}x")

    backend.select("compiled")
    a = solve_dde(TRUTH, HIST, 0.0, 20.0, steps_per_delay=400)
    backend.select("python")
    b = solve_dde(TRUTH, HIST, 0.0, 20.0, steps_per_delay=400)
    backend.select("compiled")
    dev = max(
        float(np.max(np.abs(a.x - b.x))),
        float(np.max(np.abs(a.y - b.y))),
        float(np.max(np.abs(a.dx - b.dx))),
        float(np.max(np.abs(a.dy - b.dy))),
    )
    print(f"\nmax state deviation between backends: {dev:.1e}"
          + ("  (bit-identical)" if dev == 0.0 else "  (MISMATCH)"))
    return 0 if dev == 0.0 else 2


if __name__ == "__main__":
    sys.exit(main())
