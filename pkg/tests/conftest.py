import math

import numpy as np
import pytest
from hypothesis import settings

from niide.problem import builtin_example_62
from niide.solver import SolverConfig, solve

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ex62():
    return builtin_example_62(16)


@pytest.fixture(scope="session")
def ex62_traj(ex62):
    return solve(ex62, 16, SolverConfig(dt_max=1e-3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def sine_coeffs_quad(func, n, points=20001):
    """Reference sine coefficients by composite Simpson on a fine grid."""
    from scipy.integrate import simpson

    xi = np.linspace(0.0, math.pi, points)
    vals = func(xi)
    l = np.arange(1, n + 1)
    psi = math.sqrt(2 / math.pi) * np.sin(np.outer(l, xi))
    return simpson(psi * vals, x=xi, axis=1)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
