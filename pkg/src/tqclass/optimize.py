"""Bounded derivative-free minimization.

Thin contract layer over scipy's Nelder-Mead: box bounds are enforced on
every candidate, the evaluation history is recorded, and multistart restarts
draw seeded start points.  Tolerant of noisy objective values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .errors import ValidationError


@dataclass
class OptimizationProblem:
    objective: Callable[[np.ndarray], float]
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    budget: int = 500
    tolerance: float = 1e-4

    def __post_init__(self) -> None:
        self.lower = np.broadcast_to(
            np.asarray(self.lower, dtype=float), (self.dimension,)
        ).copy()
        self.upper = np.broadcast_to(
            np.asarray(self.upper, dtype=float), (self.dimension,)
        ).copy()
        if np.any(self.lower > self.upper):
            raise ValidationError("lower bounds must not exceed upper bounds")


@dataclass
class OptimizationTrace:
    best_params: np.ndarray
    best_value: float
    history: list[tuple[int, float]] = field(default_factory=list)
    evaluations_used: int = 0
    restart_traces: list["OptimizationTrace"] = field(default_factory=list)

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([v for _, v in self.history])

    def to_csv_rows(self) -> list[tuple[int, float, float]]:
        running = self.best_so_far()
        return [
            (i, v, float(running[j]))
            for j, (i, v) in enumerate(self.history)
        ]


class _Recorder:
    """Wraps the objective: projects into bounds, counts, records, and stops
    the solver once the budget is spent."""

    def __init__(self, problem: OptimizationProblem):
        self.problem = problem
        self.history: list[tuple[int, float]] = []
        self.best_value = np.inf
        self.best_params: np.ndarray | None = None

    def __call__(self, params: np.ndarray) -> float:
        p = np.clip(params, self.problem.lower, self.problem.upper)
        assert np.all(p >= self.problem.lower) and np.all(p <= self.problem.upper)
        if len(self.history) >= self.problem.budget:
            raise _BudgetExhausted
        value = float(self.problem.objective(p))
        if not np.isfinite(value):
            raise ValidationError("objective returned a non-finite value")
        self.history.append((len(self.history), value))
        if value < self.best_value:
            self.best_value = value
            self.best_params = p.copy()
        return value


class _BudgetExhausted(Exception):
    pass


def minimize(
    problem: OptimizationProblem,
    start: np.ndarray,
    seed: int = 0,
    initial_step: float = 0.6,
) -> OptimizationTrace:
    """Nelder-Mead from ``start``; returns the best point found within budget.

    ``initial_step`` sets the edge length of the starting simplex; the scipy
    default is far too small for angle-space objectives.
    """
    start = np.asarray(start, dtype=float)
    if start.shape != (problem.dimension,):
        raise ValidationError("start dimension mismatch")
    if np.any(start < problem.lower) or np.any(start > problem.upper):
        raise ValidationError("start point outside bounds")
    if problem.budget < problem.dimension + 2:
        raise ValidationError("budget must be >= dimension + 2")

    simplex = np.tile(start, (problem.dimension + 1, 1))
    for i in range(problem.dimension):
        room_up = problem.upper[i] - simplex[i + 1, i]
        step = initial_step if room_up >= initial_step else -initial_step
        simplex[i + 1, i] = np.clip(
            simplex[i + 1, i] + step, problem.lower[i], problem.upper[i]
        )
    recorder = _Recorder(problem)
    try:
        _scipy_minimize(
            recorder,
            start,
            method="Nelder-Mead",
            bounds=list(zip(problem.lower, problem.upper)),
            options={
                "maxfev": problem.budget,
                "fatol": problem.tolerance,
                "xatol": problem.tolerance,
                "initial_simplex": simplex,
            },
        )
    except _BudgetExhausted:
        pass
    if recorder.best_params is None:
        # solver stopped before a single evaluation; fall back to the start
        value = float(problem.objective(start))
        recorder.history.append((0, value))
        recorder.best_value, recorder.best_params = value, start.copy()
    return OptimizationTrace(
        best_params=recorder.best_params,
        best_value=recorder.best_value,
        history=recorder.history,
        evaluations_used=len(recorder.history),
    )


def multistart_minimize(
    problem: OptimizationProblem,
    n_starts: int,
    seed: int = 0,
    first_start: np.ndarray | None = None,
    initial_step: float = 0.6,
) -> OptimizationTrace:
    """Best of ``n_starts`` independent runs; start points drawn uniformly in
    the box (the first can be pinned via ``first_start``)."""
    if n_starts < 1:
        raise ValidationError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    traces = []
    for r in range(n_starts):
        if r == 0 and first_start is not None:
            start = np.asarray(first_start, dtype=float)
        else:
            start = rng.uniform(problem.lower, problem.upper)
        traces.append(minimize(problem, start, seed=seed + r, initial_step=initial_step))
    best = min(traces, key=lambda t: t.best_value)
    return OptimizationTrace(
        best_params=best.best_params,
        best_value=best.best_value,
        history=best.history,
        evaluations_used=sum(t.evaluations_used for t in traces),
        restart_traces=traces,
    )
