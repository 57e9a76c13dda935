"""Independent check: classical RK4 on the Faedo-Galerkin mode system.

    a_l'' + lambda_l a_l = <F(t, sum_k a_k psi_k), psi_l>     on evolution intervals
    a_l = <h1_i(t, .), psi_l>,  a_l' = <h2_i(t, .), psi_l>     on impulse intervals

integrated in first-order form ``(a, a')``.  Nothing here touches the cosine
family or the Picard machinery; only the problem data and the shared time
grid are common with :mod:`niide.solver`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import IntervalKind, ProblemSpec
from .solver import Trajectory


class StepSizeError(ValueError):
    pass


class ImpulseIntervalError(ValueError):
    """The mode ODE is not defined inside an impulse interval."""


@dataclass(frozen=True)
class OdeState:
    alpha: np.ndarray
    alpha_dot: np.ndarray
    t: float

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        b = np.asarray(self.alpha_dot, dtype=float)
        if a.shape != b.shape:
            raise ValueError("alpha and alpha_dot differ in length")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "alpha_dot", b)


def rhs(problem: ProblemSpec, state: OdeState) -> tuple[np.ndarray, np.ndarray]:
    if not problem.schedule.in_evolution_closure(state.t):
        raise ImpulseIntervalError(f"t = {state.t} lies inside an impulse interval")
    return _rhs(problem, state.t, state.alpha, state.alpha_dot)


def _rhs(problem, t, a, adot):
    lam = problem.eigenvalues[: a.size]
    return adot, -lam * a + problem.forcing_modal(t, a)


def rk4_step(problem: ProblemSpec, t: float, a: np.ndarray, adot: np.ndarray, h: float):
    k1a, k1b = _rhs(problem, t, a, adot)
    k2a, k2b = _rhs(problem, t + 0.5 * h, a + 0.5 * h * k1a, adot + 0.5 * h * k1b)
    k3a, k3b = _rhs(problem, t + 0.5 * h, a + 0.5 * h * k2a, adot + 0.5 * h * k2b)
    k4a, k4b = _rhs(problem, t + h, a + h * k3a, adot + h * k3b)
    a_new = a + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
    b_new = adot + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
    return a_new, b_new


def integrate(problem: ProblemSpec, n: int, dt: float, *, resolution: float = 0.1) -> Trajectory:
    """RK4 trajectory on the same grid :func:`niide.solver.solve` uses for ``dt``."""
    if not 1 <= n <= problem.basis.size:
        raise ValueError(f"level {n} outside 1..{problem.basis.size}")
    limit = resolution / math.sqrt(problem.eigenvalues[n - 1])
    if dt > limit * (1 + 1e-12):
        raise StepSizeError(f"dt = {dt:g} exceeds {resolution:g}/sqrt(lambda_{n}) = {limit:g}")
    y0, z0 = problem.initial(n)
    times, states, vels, kinds, idx = [0.0], [y0], [z0], [IntervalKind.EVOLUTION], [0]
    a, adot = y0.copy(), z0.copy()
    left = None
    for iv, nodes in problem.schedule.grid(dt):
        if iv.kind is IntervalKind.IMPULSE:
            pos = problem.impulse_modal(iv.index, 1, nodes[1:], left)
            vel = problem.impulse_modal(iv.index, 2, nodes[1:], left)
            times.extend(nodes[1:])
            states.extend(pos)
            vels.extend(vel)
            kinds.extend([iv.kind] * pos.shape[0])
            idx.extend([iv.index] * pos.shape[0])
            a, adot = pos[-1].copy(), vel[-1].copy()
            continue
        for t0, t1 in zip(nodes[:-1], nodes[1:]):
            a, adot = rk4_step(problem, t0, a, adot, t1 - t0)
            times.append(t1)
            states.append(a)
            vels.append(adot)
            kinds.append(iv.kind)
            idx.append(iv.index)
        left = a
    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        velocities=np.asarray(vels),
        kinds=tuple(kinds),
        indices=np.asarray(idx),
    )
