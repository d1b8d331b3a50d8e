from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tqclass.errors import ValidationError
from tqclass.optimize import (
    OptimizationProblem,
    OptimizationTrace,
    minimize,
    multistart_minimize,
)


def bowl(center):
    center = np.asarray(center, dtype=float)

    def objective(x):
        return float(np.sum((x - center) ** 2))

    return objective


def test_converges_on_quadratic_bowl():
    problem = OptimizationProblem(bowl([1.0, 2.0]), 2, lower=0.0, upper=4.0,
                                  budget=300)
    trace = minimize(problem, np.array([3.5, 0.5]))
    assert trace.best_value < 1e-4
    assert np.allclose(trace.best_params, [1.0, 2.0], atol=0.05)


def test_budget_is_respected():
    calls = []

    def objective(x):
        calls.append(x.copy())
        return float(np.sum(x**2))

    problem = OptimizationProblem(objective, 3, lower=-1.0, upper=1.0, budget=40)
    trace = minimize(problem, np.zeros(3))
    assert len(calls) <= 40
    assert trace.evaluations_used == len(trace.history) == len(calls)


def test_all_evaluations_within_bounds():
    seen = []

    def objective(x):
        seen.append(x.copy())
        return float(np.sum((x - 3.0) ** 2))  # pulls toward the boundary

    problem = OptimizationProblem(objective, 2, lower=0.0, upper=1.0, budget=120)
    minimize(problem, np.full(2, 0.5))
    pts = np.array(seen)
    assert np.all(pts >= 0.0) and np.all(pts <= 1.0)


def test_validation_errors():
    problem = OptimizationProblem(bowl([0.0]), 1, lower=0.0, upper=1.0, budget=10)
    with pytest.raises(ValidationError):
        minimize(problem, np.array([2.0]))  # outside bounds
    with pytest.raises(ValidationError):
        minimize(problem, np.zeros(2))  # wrong dimension
    with pytest.raises(ValidationError):
        OptimizationProblem(bowl([0.0]), 1, lower=1.0, upper=0.0, budget=10)
    with pytest.raises(ValidationError):
        minimize(
            OptimizationProblem(bowl([0.0]), 1, lower=0.0, upper=1.0, budget=2),
            np.zeros(1),
        )
    with pytest.raises(ValidationError):
        multistart_minimize(problem, n_starts=0)


def test_non_finite_objective_rejected():
    problem = OptimizationProblem(
        lambda x: float("nan"), 1, lower=0.0, upper=1.0, budget=10
    )
    with pytest.raises(ValidationError):
        minimize(problem, np.zeros(1))


def test_initial_step_moves_off_start():
    # with a microscopic simplex the solver cannot escape a flat-ish region;
    # the explicit initial_step must probe a finite distance from the start
    seen = []

    def objective(x):
        seen.append(x.copy())
        return float(np.cos(x[0]))

    problem = OptimizationProblem(objective, 1, lower=0.0, upper=2 * np.pi,
                                  budget=50)
    minimize(problem, np.zeros(1), initial_step=0.6)
    assert max(abs(p[0]) for p in seen[:3]) >= 0.5


def test_multistart_beats_or_matches_single(rng):
    # multimodal objective: single start from the bad basin stalls
    def objective(x):
        return float(np.sin(3 * x[0]) + 0.5 * x[0])

    problem = OptimizationProblem(objective, 1, lower=0.0, upper=6.0, budget=80)
    single = minimize(problem, np.array([1.0]))
    multi = multistart_minimize(problem, n_starts=6, seed=0,
                                first_start=np.array([1.0]))
    assert multi.best_value <= single.best_value + 1e-12
    assert len(multi.restart_traces) == 6
    assert multi.evaluations_used == sum(
        t.evaluations_used for t in multi.restart_traces
    )


def test_multistart_deterministic():
    problem = OptimizationProblem(bowl([2.0, 1.0]), 2, lower=0.0, upper=4.0,
                                  budget=60)
    a = multistart_minimize(problem, n_starts=3, seed=9)
    b = multistart_minimize(problem, n_starts=3, seed=9)
    assert a.best_value == b.best_value
    assert np.array_equal(a.best_params, b.best_params)


@given(seed=st.integers(0, 100))
@settings(max_examples=15, deadline=None)
def test_trace_best_so_far_monotone(seed):
    rng = np.random.default_rng(seed)
    noisy = lambda x: float(np.sum(x**2) + 0.05 * rng.normal())
    problem = OptimizationProblem(noisy, 2, lower=-2.0, upper=2.0, budget=50)
    trace = minimize(problem, rng.uniform(-2, 2, 2))
    running = trace.best_so_far()
    assert np.all(np.diff(running) <= 1e-12)
    rows = trace.to_csv_rows()
    assert len(rows) == len(trace.history)
    assert rows[-1][2] == pytest.approx(trace.best_value, abs=1e-9)


def test_trace_records_best_pair():
    problem = OptimizationProblem(bowl([0.5]), 1, lower=0.0, upper=1.0, budget=30)
    trace = minimize(problem, np.array([0.0]))
    assert trace.best_value == pytest.approx(
        bowl([0.5])(trace.best_params), abs=1e-12
    )
    assert isinstance(trace, OptimizationTrace)
