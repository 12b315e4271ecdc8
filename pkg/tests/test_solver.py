import math

import numpy as np
import pytest

from respfit import (
    ConstantHistory,
    InvalidGridError,
    ModelParams,
    NonFiniteError,
    OutOfDomainError,
    State,
    TabulatedHistory,
    Trajectory,
    history_from_description,
    solve_dde,
    solve_dde_raw,
)

HIST = ConstantHistory(State(35.0, 35.0))


def _first_interval_exact(alpha, beta, x0, y0, t):
    """Closed-form solution on [0, tau] with a constant history.

    The delayed state is frozen there, so the ventilation term is a constant
    and each component solves u' = 1 - c*u.
    """
    v = 0.14 * math.exp(-0.05 * (100.0 - y0)) * x0
    cx = alpha * v
    cy = beta * v
    x = 1.0 / cx + (x0 - 1.0 / cx) * math.exp(-cx * t)
    y = 1.0 / cy + (y0 - 1.0 / cy) * math.exp(-cy * t)
    return x, y


def test_first_delay_interval_matches_closed_form():
    p = ModelParams(alpha=0.5, beta=0.8)
    traj = solve_dde(p, HIST, 0.0, 5.0)
    # 0.77 sits strictly between grid nodes, exercising the Hermite evaluator
    for t in (0.25, 0.5, 0.77, 1.0):
        want_x, want_y = _first_interval_exact(0.5, 0.8, 35.0, 35.0, t)
        got = traj.eval(t)
        assert got.x == pytest.approx(want_x, abs=1e-9)
        assert got.y == pytest.approx(want_y, abs=1e-9)


def test_grid_refinement_is_fourth_order():
    p = ModelParams(alpha=0.5, beta=0.8)
    ref = solve_dde(p, HIST, 0.0, 5.0, steps_per_delay=800)
    errs = []
    for spd in (10, 20, 40):
        t = solve_dde(p, HIST, 0.0, 5.0, steps_per_delay=spd)
        rx, ry = ref.eval_many(t.times)
        errs.append(max(np.max(np.abs(t.x - rx)), np.max(np.abs(t.y - ry))))
    assert math.log2(errs[0] / errs[1]) > 3.5
    assert math.log2(errs[1] / errs[2]) > 3.5


def test_eval_is_exact_on_grid_nodes():
    p = ModelParams(alpha=0.5, beta=0.8)
    traj = solve_dde(p, HIST, 0.0, 5.0)
    for k in (0, 1, 37, 125, 250):
        got = traj.eval(traj.times[k])
        assert got.x == traj.x[k]
        assert got.y == traj.y[k]


def test_eval_many_matches_eval():
    p = ModelParams(alpha=1.0, beta=0.4)
    traj = solve_dde(p, HIST, 0.0, 5.0)
    ts = np.linspace(-1.0, 5.0, 173)
    xs, ys = traj.eval_many(ts)
    for t, x, y in zip(ts, xs, ys):
        s = traj.eval(t)
        assert s.x == x
        assert s.y == y


def test_eval_in_history_segment():
    p = ModelParams(alpha=0.5, beta=0.8)
    traj = solve_dde(p, HIST, 0.0, 5.0)
    s = traj.eval(-0.3)
    assert (s.x, s.y) == (35.0, 35.0)
    assert traj.eval(0.0).x == traj.x[0]


def test_eval_outside_domain_raises():
    traj = solve_dde(ModelParams(alpha=0.5, beta=0.8), HIST, 0.0, 5.0)
    with pytest.raises(OutOfDomainError):
        traj.eval(5.001)
    with pytest.raises(OutOfDomainError):
        traj.eval(-1.001)


def test_endpoint_roundoff_is_tolerated():
    traj = solve_dde(ModelParams(alpha=0.5, beta=0.8), HIST, 0.0, 5.0)
    ts = np.linspace(0.0, 5.0, 51)  # linspace endpoints carry float noise
    xs, _ = traj.eval_many(ts)
    assert xs[-1] == traj.x[-1]


def test_time_shift_invariance():
    # the system is autonomous, so shifting t0 must reproduce the same states
    p = ModelParams(alpha=0.8, beta=0.5)
    a = solve_dde(p, HIST, 0.0, 5.0)
    b = solve_dde(p, HIST, 2.0, 7.0)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.y, b.y)


def test_interval_must_be_whole_number_of_steps():
    with pytest.raises(InvalidGridError):
        solve_dde(ModelParams(alpha=0.5, beta=0.8), HIST, 0.0, 5.013)


def test_interval_validation():
    p = ModelParams(alpha=0.5, beta=0.8)
    with pytest.raises(ValueError):
        solve_dde(p, HIST, 5.0, 5.0)
    with pytest.raises(ValueError):
        solve_dde(p, HIST, 0.0, 5.0, steps_per_delay=1)


def test_negative_gain_blowup_is_reported():
    with pytest.raises(NonFiniteError):
        solve_dde_raw(-2.0, -2.0, 1.0, 0.14, 0.05, 100.0, HIST, 0.0, 40.0)


def test_raw_entry_point_accepts_negative_gains_short_horizon():
    traj = solve_dde_raw(-0.01, 0.5, 1.0, 0.14, 0.05, 100.0, HIST, 0.0, 1.0)
    assert np.all(np.isfinite(traj.x))


def test_trajectory_arrays_are_read_only():
    traj = solve_dde(ModelParams(alpha=0.5, beta=0.8), HIST, 0.0, 5.0)
    with pytest.raises(ValueError):
        traj.x[0] = 0.0


def test_to_csv_roundtrip(tmp_path):
    traj = solve_dde(ModelParams(alpha=0.5, beta=0.8), HIST, 0.0, 5.0)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 0], traj.times)
    assert np.array_equal(data[:, 1], traj.x)
    assert np.array_equal(data[:, 2], traj.y)


def test_tabulated_history_interpolates_linearly():
    hist = TabulatedHistory(
        np.array([-1.0, -0.5, 0.0]),
        np.array([30.0, 40.0, 20.0]),
        np.array([10.0, 10.0, 30.0]),
    )
    assert hist(-0.75).x == pytest.approx(35.0)
    assert hist(-0.25).y == pytest.approx(20.0)
    assert hist(0.0).x == 20.0


def test_tabulated_history_validation():
    t = np.array([-1.0, 0.0])
    with pytest.raises(ValueError):
        TabulatedHistory(np.array([0.0, -1.0]), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        TabulatedHistory(t, np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError):
        TabulatedHistory(t, np.array([1.0, math.nan]), np.zeros(2))
    with pytest.raises(ValueError):
        TabulatedHistory(np.array([0.0]), np.zeros(1), np.zeros(1))


def test_tabulated_history_must_cover_delay_window():
    hist = TabulatedHistory(
        np.array([-0.5, 0.0]), np.array([35.0, 35.0]), np.array([35.0, 35.0])
    )
    with pytest.raises(ValueError):
        solve_dde(ModelParams(alpha=0.5, beta=0.8), hist, 0.0, 5.0)


def test_tabulated_constant_history_matches_constant():
    flat = TabulatedHistory(
        np.array([-1.0, 0.0]), np.array([35.0, 35.0]), np.array([35.0, 35.0])
    )
    p = ModelParams(alpha=0.5, beta=0.8)
    a = solve_dde(p, HIST, 0.0, 5.0)
    b = solve_dde(p, flat, 0.0, 5.0)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.y, b.y)


def test_history_description_roundtrip():
    for hist in (
        HIST,
        TabulatedHistory(
            np.array([-1.0, 0.0]), np.array([30.0, 31.0]), np.array([20.0, 21.0])
        ),
    ):
        clone = history_from_description(hist.describe())
        assert clone.describe() == hist.describe()
    with pytest.raises(ValueError):
        history_from_description({"kind": "nope"})


def test_trajectory_reports_grid_metadata():
    traj = solve_dde(ModelParams(alpha=0.5, beta=0.8), HIST, 0.0, 5.0, steps_per_delay=25)
    assert traj.step == pytest.approx(0.04)
    assert traj.steps_per_delay == 25
    assert len(traj.times) == 126
    assert traj.t_end == traj.times[-1]
    assert isinstance(traj, Trajectory)
