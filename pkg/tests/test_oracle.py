import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from niide.oracle import (
    ImpulseIntervalError,
    OdeState,
    StepSizeError,
    integrate,
    rhs,
)
from niide.problem import (
    ImpulseSchedule,
    IntervalKind,
    builtin_example_61,
    builtin_example_62,
    builtin_example_63,
    linear_problem,
)
from niide.solver import SolverConfig, solve
from niide.spectral import ModalState, SpectralBasis, weighted_norm


def free_single_mode(horizon=math.pi):
    basis = SpectralBasis.sine(1)
    return linear_problem(basis, ImpulseSchedule.single(horizon), ModalState([1.0]))


def test_rhs_harmonic():
    d_a, d_b = rhs(free_single_mode(), OdeState(np.array([1.0]), np.array([0.0]), 0.3))
    assert d_a.tolist() == [0.0] and d_b.tolist() == [-1.0]


def test_rhs_example61_at_rest():
    n = 10
    p = builtin_example_61(n, nodes=8192)
    _, d_b = rhs(p, OdeState(np.zeros(n), np.zeros(n), 0.0))
    l = np.arange(1, n + 1)
    series = math.sqrt(2 / math.pi) * (1 - (-1.0) ** l) / l / math.sqrt(72)
    assert np.allclose(d_b, series, atol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_rhs_additive_in_forcing(seed):
    rng = np.random.default_rng(seed)
    basis = SpectralBasis.sine(6)
    sched = ImpulseSchedule.single(1.0)
    y0 = ModalState(np.zeros(6))
    f1 = lambda t, xi, u: np.sin(u) + xi * t
    f2 = lambda t, xi, u: u**2 - np.cos(xi)
    p1, p2 = linear_problem(basis, sched, y0, forcing=f1), linear_problem(basis, sched, y0, forcing=f2)
    p12 = linear_problem(basis, sched, y0, forcing=lambda t, xi, u: f1(t, xi, u) + f2(t, xi, u))
    p0 = linear_problem(basis, sched, y0)
    s = OdeState(rng.standard_normal(6), rng.standard_normal(6), float(rng.uniform(0, 1)))
    lhs = rhs(p12, s)[1]
    r1, r2, r0 = rhs(p1, s)[1], rhs(p2, s)[1], rhs(p0, s)[1]
    assert np.allclose(lhs, r1 + r2 - r0, atol=1e-12)


def test_rhs_undefined_inside_impulse():
    p = builtin_example_62(4)
    with pytest.raises(ImpulseIntervalError):
        rhs(p, OdeState(np.zeros(4), np.zeros(4), 1.5))
    rhs(p, OdeState(np.zeros(4), np.zeros(4), 2.0))  # closure of the next evolution interval


def test_ode_state_shape_check():
    with pytest.raises(ValueError):
        OdeState(np.zeros(2), np.zeros(3), 0.0)


def test_free_oscillator():
    tr = integrate(free_single_mode(), 1, 1e-3)
    assert np.max(np.abs(tr.states[:, 0] - np.cos(tr.times))) < 1e-8


def test_scalar_linear_closed_form():
    p = builtin_example_63(a=4.0, m=0.0)
    tr = integrate(p, 1, 1e-3)
    exact = (2 / 3) * np.cos(2 * tr.times) + np.cos(tr.times) / 3
    assert np.max(np.abs(tr.states[:, 0] - exact)) < 1e-7


def test_agrees_with_solver_on_example62(ex62, ex62_traj):
    ref = integrate(ex62, 16, 1e-3)
    assert np.array_equal(ref.times, ex62_traj.times)
    gap = weighted_norm(ref.states - ex62_traj.states, ex62.eigenvalues, 0.5)
    assert np.max(gap) < 1e-4


def test_rk4_order():
    p = free_single_mode(2.0)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        tr = integrate(p, 1, dt)
        errs.append(np.max(np.abs(tr.states[:, 0] - np.cos(tr.times))))
    slopes = np.diff(np.log(errs)) / np.diff(np.log([0.1, 0.05, 0.025]))
    assert np.all(np.abs(slopes - 4.0) < 0.3)


def test_agreement_shrinks_with_dt(ex62):
    gaps = []
    for dt in (4e-3, 2e-3, 1e-3):
        a = solve(ex62, 16, SolverConfig(dt_max=dt), check_contraction=False)
        b = integrate(ex62, 16, dt)
        gaps.append(np.max(weighted_norm(a.states - b.states, ex62.eigenvalues, 0.5)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_impulse_values_bit_identical(ex62):
    from niide.solver import apply_impulse_interval

    ref = integrate(ex62, 8, 1e-3)
    mask = ref.mask(IntervalKind.IMPULSE, 1)
    left = ref.states[ref.node_at(1.0)]
    seg = apply_impulse_interval(ex62, 1, 8, left, ref.times[mask])
    assert np.array_equal(seg.states, ref.states[mask])
    assert np.array_equal(seg.velocities, ref.velocities[mask])


def test_step_size_guard():
    with pytest.raises(StepSizeError):
        integrate(builtin_example_62(16), 16, 0.01)


def test_same_grid_as_solver():
    p = builtin_example_62(4)
    a = solve(p, 4, SolverConfig(dt_max=7e-3), check_contraction=False)
    b = integrate(p, 4, 7e-3)
    assert np.array_equal(a.times, b.times) and a.kinds == b.kinds
