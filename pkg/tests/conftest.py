from __future__ import annotations

import numpy as np
import pytest

from hmdfusion.gaussian import GaussianEstimate, GaussianMixture

C1 = np.array([[2.5, -1.0], [-1.0, 1.2]])
C2 = np.array([[0.8, -0.5], [-0.5, 4.0]])


@pytest.fixture
def pair52():
    """Two-dimensional Gaussian pair used throughout the sampling checks."""
    return GaussianEstimate([0.5, 1.0], C1), GaussianEstimate([2.0, 1.0], C2)


@pytest.fixture
def mixture_pair():
    m1 = GaussianMixture([0.3, 0.7], (GaussianEstimate([-0.5, 3.0], C1), GaussianEstimate([2.0, 0.3], C2)))
    m2 = GaussianMixture([0.4, 0.6], (GaussianEstimate([-1.5, 1.0], C1), GaussianEstimate([3.0, -4.0], C2)))
    return m1, m2


def random_spd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T + 0.2 * np.eye(n))


def random_estimate(rng: np.random.Generator, n: int) -> GaussianEstimate:
    return GaussianEstimate(rng.standard_normal(n), random_spd(rng, n))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""

    def check(label: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {label}: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
