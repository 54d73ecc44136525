from pathlib import Path

import numpy as np
import pytest

from pevkit.decision import DecisionRule
from pevkit.moments import GroupMoments, MultivariateMoments
from pevkit.regression import RegressionScenario
from pevkit.simple import SimpleScenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

# criterion -> [title, [(ok, detail), ...]], filled by test_acceptance.py
ACCEPTANCE = {}

# outcome variance at which the residual variance of Y on (W, Z) equals sigma2
EXAMPLE_YY = 1662.2053736944792
EXAMPLE_ROLES = ("Y", "W", "Z")
EXAMPLE_MEANS = [609.96, 0.55, 576.62]


def example_cov(wy=2.33):
    return np.array([
        [EXAMPLE_YY, wy, 1832.2],
        [wy, 0.25, 0.39],
        [1832.2, 0.39, 2079.36],
    ])


def regression_example(n_un=0):
    observed = MultivariateMoments(EXAMPLE_ROLES, EXAMPLE_MEANS, example_cov(), 49, binary_treatment=True)
    unobserved = MultivariateMoments(EXAMPLE_ROLES, EXAMPLE_MEANS, example_cov(0.0), n_un, binary_treatment=True)
    return RegressionScenario(observed, unobserved, 32.0)


def simple_example(alpha=1.0, pi_r=0.46):
    return SimpleScenario(GroupMoments(615, 45, 27), GroupMoments(607, 45, 22), 611.5, alpha, pi_r)


def random_moments(rng, k, n, binary=False):
    """Moments of a random raw dataset, so they are always attainable."""
    rows = max(n, k + 2)
    data = rng.normal(size=(rows, k)) @ rng.normal(size=(k, k)) + rng.normal(scale=5, size=k)
    if binary:
        data[:, 1] = rng.random(rows) < rng.uniform(0.2, 0.8)
        data[0, 1], data[1, 1] = 0.0, 1.0
    means = data.mean(axis=0)
    centered = data - means
    return MultivariateMoments(tuple(["Y", "W"] + [f"Z{i}" for i in range(k - 2)]),
                               means, centered.T @ centered / rows, n, binary)


def random_regression_scenario(rng, p=None, n_un=None):
    p = int(rng.integers(0, 4)) if p is None else p
    k = p + 2
    ob = random_moments(rng, k, int(rng.integers(k + 8, 80)))
    un = random_moments(rng, k, int(rng.integers(k + 2, 80)) if n_un is None else n_un)
    return RegressionScenario(ob, un, float(rng.uniform(0.5, 20.0)))


@pytest.fixture
def z196():
    return DecisionRule.statistical("positive", z=1.96)


@pytest.fixture
def reg_example():
    return regression_example()


@pytest.fixture
def simple_ex():
    return simple_example()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        title, results = ACCEPTANCE[criterion]
        ok = all(r for r, _ in results)
        details = "; ".join(d for _, d in results)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {criterion:>2}. {title}: {details}")
