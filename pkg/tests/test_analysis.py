import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from niide.analysis import (
    check_contraction,
    coefficient_convergence,
    coefficient_discrepancy,
    compute_constants,
    convergence_study,
    lift,
)
from niide.problem import (
    ImpulseSchedule,
    ProblemConstants,
    ProblemSpec,
    builtin_example_61,
    builtin_example_62,
    linear_problem,
    zero_problem,
)
from niide.solver import SolverConfig, solve
from niide.spectral import ModalState, SpectralBasis, weighted_norm


@pytest.fixture(scope="module")
def study62():
    return convergence_study(builtin_example_62(32), (4, 8, 16, 32), eta=0.75)


def test_cosine_bound_is_one(ex62):
    assert compute_constants(ex62, 16).M == 1.0


@given(st.integers(1, 200), st.floats(0.1, 10.0))
def test_kappa_half_at_most_one(n, horizon):
    p = zero_problem(SpectralBasis.sine(n), ImpulseSchedule.single(horizon))
    assert compute_constants(p, n, eta=0.75, alpha=0.5).kappa_alpha <= 1.0


def test_example62_ledger_by_hand(ex62):
    led = compute_constants(ex62, 16, eta=0.75)
    c = ex62.constants
    lam = np.arange(1, 17, dtype=float) ** 2
    # on T = pi every mode reaches |sin| = 1, so M_tilde = 1 and kappa_{1/2} = 1
    assert led.M_tilde == 1.0 and led.kappa_alpha == 1.0
    assert led.kappa_eta == pytest.approx(16 ** 0.5)
    y0, z0 = ex62.initial(16)
    n0 = weighted_norm(y0, lam, 0.5) + weighted_norm(z0, lam, 0.5) + c.K2 * 1.0
    q1 = 1 / 3 + 1 / 3 + c.K1 * math.pi
    assert led.N[0] == pytest.approx(n0, rel=1e-14)
    assert led.Q == pytest.approx((c.K1 * 1.0, q1), rel=1e-14)
    assert led.D == pytest.approx(q1, rel=1e-14)
    assert led.R == pytest.approx(max(n0, 1 / 3 + 1 / 3 + c.K2 * math.pi), rel=1e-14)
    assert led.D < 1 and check_contraction(led).satisfied


def test_ledger_deterministic(ex62):
    assert compute_constants(ex62, 16).dump() == compute_constants(ex62, 16).dump()


def test_ledger_rejects_bad_eta(ex62):
    with pytest.raises(ValueError):
        compute_constants(ex62, 8, eta=0.4)


def test_zero_problem_verdict():
    p = zero_problem(SpectralBasis.sine(4), ImpulseSchedule((0.0, 1.0, 3.0), (0.0, 2.0)))
    v = check_contraction(compute_constants(p, 4))
    assert v.satisfied and v.D == 0.0 and v.margin == 1.0


def test_large_impulse_constant_violates():
    p = zero_problem(SpectralBasis.sine(4), ImpulseSchedule((0.0, 1.0, 3.0), (0.0, 2.0)))
    p = ProblemSpec(p.basis, p.schedule, p.forcing, p.impulse_pos, p.impulse_vel, p.y0, p.z0,
                    ProblemConstants(0.0, 0.0, (2.0,), (0.0,), (0.0,), (0.0,)))
    v = check_contraction(compute_constants(p, 4))
    assert not v.satisfied and v.D >= 2
    assert "violated" in str(v)


def test_verdict_consistent_with_picard(ex62, ex62_traj):
    v = check_contraction(compute_constants(ex62, 16))
    assert v.satisfied and all(r.iterations < 50 for r in ex62_traj.picard)


def test_rho_grows_with_level(ex62):
    assert compute_constants(ex62, 16).rho_sup > compute_constants(ex62, 4).rho_sup


def _diagonal_problem(size=16, c=0.2):
    basis = SpectralBasis.sine(size)
    y0 = ModalState(1.0 / np.arange(1, size + 1) ** 2)
    return linear_problem(basis, ImpulseSchedule.single(1.0), y0,
                          forcing=lambda t, xi, u: c * u, K1=c, K2=c)


def test_decoupled_gap_is_the_tail():
    p = _diagonal_problem()
    rep = convergence_study(p, (4, 8, 16), config=SolverConfig(dt_max=5e-3))
    for pair in rep.pairs:
        big = rep.trajectories[pair.n]
        tail = big.states.copy()
        tail[:, : pair.m] = 0.0
        expected = np.max(weighted_norm(tail, p.eigenvalues, 0.5))
        assert pair.sup_gap == pytest.approx(expected, rel=1e-9)


@pytest.mark.xfail(strict=True, reason="y0 = exp(-xi)/20 lies outside D(A^(1/2)); the gap at "
                   "(16, 32) exceeds the gap at (8, 16)")
def test_example62_gaps_monotone(study62):
    assert study62.strictly_decreasing


def test_example62_gaps_monotone_through_16():
    rep = convergence_study(builtin_example_62(16), (4, 8, 16))
    assert rep.strictly_decreasing and rep.fitted_rate < 0


def test_example62_bound_audit(study62):
    for pair in study62.pairs:
        assert pair.bound_holds
        assert pair.sup_gap <= pair.theoretical_bound


def test_fg_inequality(study62):
    assert all(p.fg_holds for p in study62.pairs)


def test_padded_fg_gap_equals_sup_gap(study62):
    assert all(p.fg_gap == p.sup_gap for p in study62.pairs)


def test_lifted_mode_reports_both_gaps():
    rep = convergence_study(builtin_example_62(16), (4, 8, 16), mode="lifted")
    assert rep.mode == "lifted"
    assert all(p.fg_holds and p.bound_holds for p in rep.pairs)
    # the (0, 1] gap of the lifted solutions is tiny: only the forcing sees the truncation
    assert all(p.interval_gaps[("evolution", 0)] < 1e-3 for p in rep.pairs)


def test_lift_of_full_level_is_identity():
    p = builtin_example_62(8)
    tr = solve(p, 8, SolverConfig(picard_tol=1e-13))
    assert np.max(np.abs(lift(p, tr, 8) - tr.states)) < 1e-10


def test_rate_sanity_on_synthetic_monotone_gaps():
    rep = convergence_study(_diagonal_problem(), (2, 4, 8, 16), config=SolverConfig(dt_max=5e-3))
    assert rep.strictly_decreasing and rep.fitted_rate < 0


def test_parallel_sweep_matches_sequential():
    p = builtin_example_62(16)
    a = convergence_study(p, (4, 8, 16))
    b = convergence_study(p, (4, 8, 16), workers=3)
    assert np.array_equal(a.pairwise_gaps, b.pairwise_gaps)


@pytest.mark.parametrize("levels", [(4, 8), (8, 4, 16), (4, 4, 8)])
def test_study_level_preconditions(levels):
    with pytest.raises(ValueError):
        convergence_study(builtin_example_62(16), levels)


def test_study_failure_names_level():
    p = builtin_example_62(16)
    with pytest.raises(RuntimeError, match="level 16"):
        convergence_study(p, (4, 8, 16), config=SolverConfig(dt_max=6.2e-3 * 1.1))


def test_study_requires_contraction():
    p = builtin_example_61(8, q=1)
    p = ProblemSpec(p.basis, p.schedule, p.forcing, p.impulse_pos, p.impulse_vel, p.y0, p.z0,
                    ProblemConstants(0.0, 0.0, (1.5,), (0.0,), (0.0,), (0.0,)))
    with pytest.raises(ValueError, match="contraction"):
        convergence_study(p, (2, 4, 8))


def test_discrepancy_against_itself_is_zero(ex62, ex62_traj):
    d, dom = coefficient_discrepancy(ex62_traj, ex62_traj, ex62.eigenvalues, 0.5)
    assert np.all(d == 0) and np.all(dom == 0)


def test_reference_too_small():
    with pytest.raises(ValueError):
        coefficient_convergence(builtin_example_62(16), 8, 12)


@pytest.fixture(scope="module")
def coefficient_reports():
    p = builtin_example_62(64)
    ref = solve(p, 64, SolverConfig(), check_contraction=False)
    return [coefficient_convergence(p, n, 64, reference=ref) for n in (4, 8, 16)]


def test_discrepancy_dominated(coefficient_reports):
    for rep in coefficient_reports:
        assert np.all(rep.discrepancy <= rep.dominating * (1 + 1e-12) + 1e-300)


def test_discrepancy_decreases(coefficient_reports):
    sups = [r.sup for r in coefficient_reports]
    assert sups[0] > sups[1] > sups[2]
