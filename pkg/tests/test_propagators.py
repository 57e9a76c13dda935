import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from niide.propagators import (
    DuhamelAccumulator,
    ModalPropagator,
    apply_a_sine,
    apply_cosine,
    apply_sine,
    duhamel_advance,
    duhamel_series,
)
from niide.spectral import ModalState

LAM = np.arange(1, 9, dtype=float) ** 2
times = st.floats(-20, 20, allow_nan=False)
eigen = st.floats(0.01, 400.0)


def test_cosine_at_zero_is_identity():
    x = ModalState(np.linspace(-1, 1, 8))
    assert np.array_equal(apply_cosine(x, 0.0, LAM).coeffs, x.coeffs)


def test_cosine_at_pi_flips_first_mode():
    assert apply_cosine(ModalState([2.0]), math.pi, [1.0]).coeffs[0] == pytest.approx(-2.0, abs=1e-15)


@given(arrays_seed=st.integers(0, 2**31), s=times, t=times)
def test_dalembert(arrays_seed, s, t):
    x = ModalState(np.random.default_rng(arrays_seed).standard_normal(8))
    lhs = apply_cosine(x, s + t, LAM).coeffs + apply_cosine(x, s - t, LAM).coeffs
    rhs = 2 * apply_cosine(apply_cosine(x, t, LAM), s, LAM).coeffs
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + np.max(np.abs(x.coeffs)))


def test_sine_at_zero_is_zero():
    assert np.all(apply_sine(ModalState(np.ones(8)), 0.0, LAM).coeffs == 0.0)


def test_sine_factor_half():
    assert ModalPropagator(4.0).sine(math.pi / 4) == pytest.approx(0.5, abs=1e-16)


@pytest.mark.parametrize("lam", [1.0, 4.0, 9.0])
@pytest.mark.parametrize("t", [0.3, 1.0])
def test_sine_is_integral_of_cosine(lam, t):
    ref, _ = quad(lambda s: math.cos(math.sqrt(lam) * s), 0.0, t, epsabs=1e-13)
    assert ModalPropagator(lam).sine(t) == pytest.approx(ref, abs=1e-8)


@given(eigen, times)
def test_multiplier_bounds(lam, t):
    p = ModalPropagator(lam)
    assert abs(p.cosine(t)) <= 1.0
    assert abs(p.sine(t)) <= min(abs(t), 1 / math.sqrt(lam)) * (1 + 1e-12)
    assert abs(p.a_sine(0.5, t)) <= 1.0
    assert abs(p.a_sine(0.3, t)) <= lam ** (0.3 - 0.5) * (1 + 1e-12)


def test_a_sine_half_bounded_by_one():
    x = ModalState(np.ones(8))
    for t in np.linspace(0, 10, 37):
        assert np.all(np.abs(apply_a_sine(x, 0.5, t, LAM).coeffs) <= 1.0)


def test_a_sine_beta_zero_is_sine():
    x = ModalState(np.linspace(1, 2, 8))
    assert np.allclose(apply_a_sine(x, 0.0, 0.7, LAM).coeffs, apply_sine(x, 0.7, LAM).coeffs,
                       rtol=1e-15)


def test_a_sine_beta_one():
    assert ModalPropagator(1.0).a_sine(1.0, math.pi / 2) == 1.0


def test_a_sine_rejects_beta():
    with pytest.raises(ValueError):
        apply_a_sine(ModalState([1.0]), 1.5, 0.1, [1.0])


def _advance_constant(f, lam, t, steps):
    acc = DuhamelAccumulator.start([lam])
    dt = t / steps
    for k in range(steps):
        acc = duhamel_advance(acc, ModalState([f(k * dt)]), ModalState([f((k + 1) * dt)]), dt)
    return acc


def test_duhamel_zero_forcing():
    acc = _advance_constant(lambda s: 0.0, 4.0, 1.0, 50)
    assert acc.value()[0] == 0.0


def test_duhamel_constant_forcing():
    lam, t = 4.0, 1.0
    acc = _advance_constant(lambda s: 1.0, lam, t, 1000)
    exact = (1 - math.cos(math.sqrt(lam) * t)) / lam
    assert acc.value()[0] == pytest.approx(exact, abs=1e-5)
    assert acc.t_current == pytest.approx(t)


def test_duhamel_resonant():
    acc = _advance_constant(math.sin, 1.0, math.pi, 2000)
    assert acc.value()[0] == pytest.approx(math.pi / 2, abs=1e-5)


def test_duhamel_velocity_matches_cosine_convolution():
    lam, t = 9.0, 0.8
    acc = _advance_constant(math.exp, lam, t, 4000)
    w = math.sqrt(lam)
    ref, _ = quad(lambda s: math.cos(w * (t - s)) * math.exp(s), 0, t, epsabs=1e-13)
    assert acc.velocity()[0] == pytest.approx(ref, abs=1e-5)


def test_series_equals_incremental_accumulator():
    lam = np.array([1.0, 4.0, 25.0])
    tau = np.linspace(0, 1.3, 201)
    f = np.stack([np.sin(tau), np.exp(-tau), tau**2], axis=1)
    value, velocity = duhamel_series(lam, tau, f)
    acc = DuhamelAccumulator.start(lam)
    for k in range(tau.size - 1):
        acc = duhamel_advance(acc, ModalState(f[k]), ModalState(f[k + 1]), tau[k + 1] - tau[k])
        assert np.allclose(acc.value(), value[k + 1], atol=1e-13)
        assert np.allclose(acc.velocity(), velocity[k + 1], atol=1e-13)


def test_duhamel_advance_checks():
    acc = DuhamelAccumulator.start([1.0])
    with pytest.raises(ValueError):
        duhamel_advance(acc, ModalState([1.0]), ModalState([1.0]), 0.0)
    with pytest.raises(ValueError):
        duhamel_advance(acc, ModalState([1.0, 2.0]), ModalState([1.0]), 0.1)


def test_energy_conservation():
    lam = LAM
    a0 = np.linspace(0.5, -0.3, 8)
    b0 = np.linspace(-1, 1, 8)
    w = np.sqrt(lam)
    e0 = lam * a0**2 + b0**2
    for t in np.linspace(0, 10, 101):
        a = np.cos(w * t) * a0 + np.sin(w * t) / w * b0
        b = -w * np.sin(w * t) * a0 + np.cos(w * t) * b0
        assert np.max(np.abs(lam * a**2 + b**2 - e0)) < 1e-10


@pytest.mark.parametrize("t", [0.2, 1.1, 2.7])
def test_cosine_derivative_identity(t):
    x = ModalState(np.linspace(1, -1, 8))
    h = 1e-6
    fd = (apply_cosine(x, t + h, LAM).coeffs - apply_cosine(x, t, LAM).coeffs) / h
    ref = -apply_a_sine(x, 1.0, t, LAM).coeffs
    assert np.allclose(fd, ref, rtol=1e-4, atol=1e-4 * np.max(np.abs(ref)))


def test_semigroup_norm_facts():
    t = np.linspace(0, math.pi, 2001)
    assert np.max(np.abs(ModalPropagator(LAM[:, None]).cosine(t))) == pytest.approx(1.0)
    assert np.max(np.abs(ModalPropagator(LAM[:, None]).sine(t))) == pytest.approx(1.0, abs=1e-6)
