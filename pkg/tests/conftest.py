"""Shared fixtures and random-instance generators for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from wncs.scenario import LoopSpec, make_scenario, scalar_loop


def random_psd(rng: np.random.Generator, n: int, floor: float = 0.1) -> np.ndarray:
    G = rng.normal(size=(n, n))
    return G @ G.T / n + floor * np.eye(n)


def random_loop(rng: np.random.Generator, n: int | None = None, radius: tuple[float, float] = (0.5, 1.3)) -> LoopSpec:
    """A generic loop: random A rescaled to a spectral radius in ``radius``.

    Gaussian B and C make (A, B) controllable and (A, C) observable with
    probability one, so both Riccati iterations converge.
    """
    n = int(rng.integers(1, 5)) if n is None else n
    m = int(rng.integers(1, n + 1))
    p = int(rng.integers(1, n + 1))
    A = rng.normal(size=(n, n))
    rho = max(abs(np.linalg.eigvals(A)))
    A = A * rng.uniform(*radius) / rho
    return LoopSpec(
        A=A, B=rng.normal(size=(n, m)), C=rng.normal(size=(p, n)),
        W=random_psd(rng, n), V=random_psd(rng, p), Q=random_psd(rng, n), R=random_psd(rng, m),
        x0_mean=np.zeros(n), x0_cov=np.eye(n),
    )


@pytest.fixture
def golden_loop() -> LoopSpec:
    return scalar_loop(1.0)


@pytest.fixture
def contention_scenario():
    """Two identical unstable scalar loops competing for one perfect channel."""
    loops = [scalar_loop(1.2), scalar_loop(1.2)]
    return make_scenario(loops, q_bar=[[1.0], [1.0]], horizon=10_000, seed=2024)


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion at the end of the run

_criteria: dict[int, tuple[str, bool]] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = call.excinfo is None
    _, prev_ok = _criteria.get(number, (title, True))
    _criteria[number] = (title, prev_ok and passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
