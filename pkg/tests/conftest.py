"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import time

import numpy as np
import pytest

from vczsim import run
from vczsim.qp import QpProblem
from vczsim.scenario_io import parse_scenario


def random_qp_problem(rng: np.random.Generator, m: int = 2, d: int | None = None):
    """Strictly convex random QP with a known strictly feasible point."""
    if d is None:
        d = int(rng.integers(1, 6))
    L = rng.normal(size=(m, m))
    H = L.T @ L + 0.1 * np.eye(m)
    F = rng.normal(size=m)
    A = rng.normal(size=(d, m))
    p = rng.uniform(-1.0, 1.0, size=m)
    b = A @ p - rng.uniform(0.1, 2.0, size=d)
    return QpProblem(H, F, A, b), p


def minimizer_box_bound(problem: QpProblem, feasible_point: np.ndarray) -> float:
    """Box half-width guaranteed to contain the minimizer.

    cost(u) - cost(u_free) = 0.5 ||u - u_free||_H^2, and the constrained
    minimizer costs no more than the feasible point, which bounds its
    H-distance from the unconstrained minimum.
    """
    u_free = np.linalg.solve(problem.H, -problem.F)
    gap = problem.objective(feasible_point) - problem.objective(u_free)
    lam_min = float(np.linalg.eigvalsh(problem.H).min())
    radius = np.linalg.norm(u_free) + np.sqrt(2.0 * max(0.0, gap) / lam_min)
    return float(radius) + 0.5


def bundled_benchmark_text() -> str:
    from importlib import resources

    return resources.files("vczsim.data").joinpath("benchmark.scn").read_text()


@pytest.fixture(scope="session")
def benchmark_run():
    """Full bundled-benchmark run at dt = 1e-3: (scenario, trace, metrics, seconds)."""
    scenario = parse_scenario(bundled_benchmark_text())
    start = time.perf_counter()
    trace, metrics = run(scenario)
    elapsed = time.perf_counter() - start
    return scenario, trace, metrics, elapsed


@pytest.fixture(scope="session")
def benchmark_run_fine():
    """Same benchmark at dt = 5e-4 for the step-size robustness check."""
    scenario = parse_scenario(bundled_benchmark_text()).with_overrides(dt=5e-4)
    trace, metrics = run(scenario)
    return scenario, trace, metrics
