"""Problem data for second-order equations with non-instantaneous impulses.

    v''(t) = -A v(t) + F(t, v(t))          t in (theta_i, rho_{i+1}],  i = 0..q
    v(t)   = h1_i(t, v(rho_i^-))           t in (rho_i, theta_i],      i = 1..q
    v'(t)  = h2_i(t, v(rho_i^-))           t in (rho_i, theta_i]
    v(0) = y0,  v'(0) = z0

Forcing and impulse maps act pointwise on the physical grid.  Every map has
the signature ``f(t, xi, u)`` and must broadcast: ``t`` may be a column
``(M, 1)`` against ``u`` of shape ``(M, K)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spectral import ModalState, SpectralBasis, pad, weighted_norm

GridMap = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class ScheduleError(ValueError):
    """Breakpoints are not strictly interleaved."""


class IntervalKind(str, enum.Enum):
    EVOLUTION = "evolution"
    IMPULSE = "impulse"


@dataclass(frozen=True)
class Interval:
    """Half-open interval ``(start, end]`` of the schedule."""

    kind: IntervalKind
    index: int
    start: float
    end: float

    def contains(self, t: float) -> bool:
        return self.start < t <= self.end

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ImpulseSchedule:
    """Breakpoints ``0 = theta_0 = rho_0 < rho_1 < theta_1 < ... < theta_q < rho_{q+1} = T``."""

    rho: tuple[float, ...]
    theta: tuple[float, ...]

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        theta = tuple(float(s) for s in self.theta)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "theta", theta)
        if len(rho) < 2 or len(theta) != len(rho) - 1:
            raise ScheduleError(
                f"need len(theta) == len(rho) - 1 >= 1, got {len(rho)} rho and {len(theta)} theta"
            )
        if rho[0] != 0.0 or theta[0] != 0.0:
            raise ScheduleError("schedule must start at rho_0 = theta_0 = 0")
        merged = [0.0]
        for i in range(1, len(theta)):
            merged += [rho[i], theta[i]]
        merged.append(rho[-1])
        if any(not math.isfinite(b) for b in merged):
            raise ScheduleError("breakpoints must be finite")
        if any(b <= a for a, b in zip(merged, merged[1:])):
            raise ScheduleError(f"breakpoints are not strictly interleaved: {merged}")

    @classmethod
    def single(cls, horizon: float) -> "ImpulseSchedule":
        """No impulses: the whole of (0, T] is one evolution interval."""
        return cls((0.0, horizon), (0.0,))

    @classmethod
    def uniform(cls, q: int, horizon: float = math.pi) -> "ImpulseSchedule":
        """``2q + 1`` equal pieces alternating evolution / impulse."""
        h = horizon / (2 * q + 1)
        rho = [0.0] + [(2 * i - 1) * h for i in range(1, q + 1)] + [horizon]
        theta = [0.0] + [2 * i * h for i in range(1, q + 1)]
        return cls(tuple(rho), tuple(theta))

    @property
    def q(self) -> int:
        return len(self.theta) - 1

    @property
    def horizon(self) -> float:
        return self.rho[-1]

    def intervals(self) -> list[Interval]:
        out = [Interval(IntervalKind.EVOLUTION, 0, 0.0, self.rho[1])]
        for i in range(1, self.q + 1):
            out.append(Interval(IntervalKind.IMPULSE, i, self.rho[i], self.theta[i]))
            out.append(Interval(IntervalKind.EVOLUTION, i, self.theta[i], self.rho[i + 1]))
        return out

    def interval_of(self, t: float) -> Interval:
        if not 0.0 < t <= self.horizon:
            raise ValueError(f"t = {t} lies outside (0, {self.horizon}]")
        for iv in self.intervals():
            if iv.contains(t):
                return iv
        raise AssertionError("intervals do not partition (0, T]")  # unreachable

    def in_evolution_closure(self, t: float) -> bool:
        """True when ``t`` lies in some closed evolution interval ``[theta_i, rho_{i+1}]``."""
        return any(
            iv.start <= t <= iv.end for iv in self.intervals() if iv.kind is IntervalKind.EVOLUTION
        )

    def grid(self, dt_max: float) -> list[tuple[Interval, np.ndarray]]:
        """Uniform nodes per interval, both endpoints included.

        Each interval gets ``ceil(length / dt_max)`` equal steps, so every
        breakpoint is a node.  Node arrays include the left endpoint; callers
        store ``nodes[1:]`` to respect the half-open convention.
        """
        if dt_max <= 0:
            raise ValueError("dt_max must be positive")
        out = []
        for iv in self.intervals():
            steps = max(1, math.ceil(iv.length / dt_max - 1e-9))
            out.append((iv, np.linspace(iv.start, iv.end, steps + 1)))
        return out


@dataclass(frozen=True)
class ProblemConstants:
    """Lipschitz constants and bounds of the forcing and impulse maps.

    ``K1`` is the Lipschitz constant of F from the alpha-norm into H, ``K2`` a
    uniform bound on ``||F||``.  Per-impulse lists are indexed 0..q-1 for
    impulses 1..q.
    """

    K1: float
    K2: float
    C_h1: tuple[float, ...] = ()
    D_h1: tuple[float, ...] = ()
    C_h2: tuple[float, ...] = ()
    D_h2: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("C_h1", "D_h1", "C_h2", "D_h2"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        values = [self.K1, self.K2, *self.C_h1, *self.D_h1, *self.C_h2, *self.D_h2]
        if any(v < 0 or not math.isfinite(v) for v in values):
            raise ValueError("constants must be finite and nonnegative")

    @classmethod
    def zeros(cls, q: int) -> "ProblemConstants":
        z = (0.0,) * q
        return cls(0.0, 0.0, z, z, z, z)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Frozen problem description; shareable between concurrent solves."""

    basis: SpectralBasis
    schedule: ImpulseSchedule
    forcing: GridMap
    impulse_pos: tuple[GridMap, ...]
    impulse_vel: tuple[GridMap, ...]
    y0: ModalState
    z0: ModalState
    constants: ProblemConstants
    alpha: float = 0.5
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "impulse_pos", tuple(self.impulse_pos))
        object.__setattr__(self, "impulse_vel", tuple(self.impulse_vel))
        q = self.schedule.q
        if len(self.impulse_pos) != q or len(self.impulse_vel) != q:
            raise ValueError(f"schedule has {q} impulses but {len(self.impulse_pos)} / "
                             f"{len(self.impulse_vel)} impulse maps were given")
        for name in ("C_h1", "D_h1", "C_h2", "D_h2"):
            if len(getattr(self.constants, name)) != q:
                raise ValueError(f"constants.{name} must have {q} entries")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.y0.level > self.basis.size or self.z0.level > self.basis.size:
            raise ValueError("initial data exceed the basis size")

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.basis.eigenvalues

    def initial(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return pad(self.y0.coeffs, n), pad(self.z0.coeffs, n)

    def forcing_grid(self, t, coeffs: np.ndarray) -> np.ndarray:
        """``F(t, v)`` on the grid; ``t`` scalar or (M,), ``coeffs`` (n,) or (M, n)."""
        u = self.basis.to_grid(coeffs)
        tt = np.asarray(t, dtype=float)
        if tt.ndim:
            tt = tt[:, None]
        return np.broadcast_to(self.forcing(tt, self.basis.nodes, u), u.shape)

    def forcing_modal(self, t, coeffs: np.ndarray) -> np.ndarray:
        """``F_n = P^n F(t, P^n v)`` in coefficients, same level as ``coeffs``."""
        coeffs = np.asarray(coeffs, dtype=float)
        return self.basis.from_grid_array(self.forcing_grid(t, coeffs), coeffs.shape[-1])

    def impulse_grid(self, i: int, which: int, t, left: np.ndarray) -> np.ndarray:
        """Grid values of ``h^which_i(t, left)`` for impulse ``i`` (1-based)."""
        maps = self.impulse_pos if which == 1 else self.impulse_vel
        if not 1 <= i <= self.schedule.q:
            raise IndexError(f"impulse index {i} outside 1..{self.schedule.q}")
        u = self.basis.to_grid(left)
        tt = np.asarray(t, dtype=float)
        if tt.ndim:
            tt = tt[:, None]
            u = np.broadcast_to(u, (tt.shape[0], u.shape[-1]))
        return np.broadcast_to(maps[i - 1](tt, self.basis.nodes, u), u.shape)

    def impulse_modal(self, i: int, which: int, t, left: np.ndarray) -> np.ndarray:
        """``P^n h^which_i(t, P^n left)`` in coefficients."""
        left = np.asarray(left, dtype=float)
        return self.basis.from_grid_array(self.impulse_grid(i, which, t, left), left.shape[-1])


# -- built-in problems ----------------------------------------------------

def _ratio(u):
    a = np.abs(u)
    return a / (1.0 + a)


def _example61_forcing(t, xi, u):
    return xi * np.sin(t) + np.exp(-t) / (np.sqrt(72.0) + np.abs(u))


def _example61_h1(i: int) -> GridMap:
    def h1(t, xi, u):
        return np.sin(i * t) / (2 * i + 1) * _ratio(u)

    return h1


def _example61_h2(i: int) -> GridMap:
    def h2(t, xi, u):
        return i * np.cos(i * t) / (2 * i + 1) * _ratio(u)

    return h2


def exp_sine_coefficients(n: int, scale: float = 1.0) -> np.ndarray:
    """Sine coefficients of ``scale * exp(-xi)`` on (0, pi) in the normalized basis."""
    l = np.arange(1, n + 1, dtype=float)
    return scale * np.sqrt(2.0 / np.pi) * l * (1.0 - (-1.0) ** l * np.exp(-np.pi)) / (1.0 + l**2)


# Lipschitz constant of F in the 1/2-norm, with ||A^{-1/2}|| = 1/sqrt(lambda_1) = 1 folded in.
EXAMPLE61_K1 = math.sqrt(math.pi) / 72.0
EXAMPLE61_K2 = math.sqrt(math.pi) * (math.pi + 1.0 / math.sqrt(72.0))


def builtin_example_61(
    n: int,
    q: int = 1,
    schedule: ImpulseSchedule | None = None,
    nodes: int | None = None,
    y0: ModalState | None = None,
    z0: ModalState | None = None,
) -> ProblemSpec:
    """String with nonlinear forcing and ``q`` ratio-type impulses on (0, pi).

    Without an explicit schedule the horizon pi is split uniformly.  The
    initial data default to those of :func:`builtin_example_62`.
    """
    if n < 1 or q < 1:
        raise ValueError("need n >= 1 and q >= 1")
    schedule = ImpulseSchedule.uniform(q) if schedule is None else schedule
    if schedule.q != q:
        raise ValueError("schedule impulse count differs from q")
    basis = SpectralBasis.sine(n, nodes)
    y0 = ModalState(exp_sine_coefficients(n, 1 / 20)) if y0 is None else y0
    z0 = ModalState(exp_sine_coefficients(n, -1 / 400)) if z0 is None else z0
    i_s = range(1, q + 1)
    c1 = tuple(1.0 / (2 * i + 1) for i in i_s)
    c2 = tuple(i / (2 * i + 1) for i in i_s)
    return ProblemSpec(
        basis=basis,
        schedule=schedule,
        forcing=_example61_forcing,
        impulse_pos=tuple(_example61_h1(i) for i in i_s),
        impulse_vel=tuple(_example61_h2(i) for i in i_s),
        y0=y0,
        z0=z0,
        constants=ProblemConstants(EXAMPLE61_K1, EXAMPLE61_K2, c1, c1, c2, c2),
        alpha=0.5,
        name="example61",
    )


def builtin_example_62(n: int, nodes: int | None = None) -> ProblemSpec:
    """:func:`builtin_example_61` with one impulse on (1, 2], ``T = pi`` and exponential initial data."""
    schedule = ImpulseSchedule((0.0, 1.0, math.pi), (0.0, 2.0))
    spec = builtin_example_61(
        n,
        q=1,
        schedule=schedule,
        nodes=nodes,
        y0=ModalState(exp_sine_coefficients(n, 1 / 20)),
        z0=ModalState(exp_sine_coefficients(n, -1 / 400)),
    )
    return _renamed(spec, "example62")


def _renamed(spec: ProblemSpec, name: str, **meta) -> ProblemSpec:
    return ProblemSpec(
        basis=spec.basis,
        schedule=spec.schedule,
        forcing=spec.forcing,
        impulse_pos=spec.impulse_pos,
        impulse_vel=spec.impulse_vel,
        y0=spec.y0,
        z0=spec.z0,
        constants=spec.constants,
        alpha=spec.alpha,
        name=name,
        meta={**spec.meta, **meta},
    )


def _numeric_derivative(f: Callable[[np.ndarray], np.ndarray], h: float = 1e-6):
    def df(t):
        return (f(t + h) - f(t - h)) / (2 * h)

    return df


def builtin_example_63(
    a: float = 4.0,
    m: float = 0.0,
    impulse_coeffs: Sequence[float] = (),
    envelope: Callable[[np.ndarray], np.ndarray] | None = None,
    envelope_derivative: Callable[[np.ndarray], np.ndarray] | None = None,
    schedule: ImpulseSchedule | None = None,
    y0: float = 1.0,
    z0: float = 0.0,
    forcing_amplitude: float = 1.0,
    alpha: float = 0.5,
) -> ProblemSpec:
    """Scalar forced pendulum-type oscillator ``v'' + a v + m sin v = c cos t``.

    Impulse ``i`` sets ``v = a_i tanh(v(rho_i^-)) e(t)`` and
    ``v' = a_i tanh(v(rho_i^-)) e'(t)``.  The envelope defaults to ``sin``;
    a missing derivative is taken by central differences.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    coeffs = tuple(float(c) for c in impulse_coeffs)
    q = len(coeffs)
    if schedule is None:
        schedule = ImpulseSchedule.single(math.pi) if q == 0 else ImpulseSchedule.uniform(q)
    if schedule.q != q:
        raise ValueError(f"schedule has {schedule.q} impulses, {q} coefficients given")
    if envelope is None:
        envelope, envelope_derivative = np.sin, np.cos
    elif envelope_derivative is None:
        envelope_derivative = _numeric_derivative(envelope)
    basis = SpectralBasis.scalar(a)

    def forcing(t, xi, u):
        return forcing_amplitude * np.cos(t) - m * np.sin(u)

    def make(ai, env):
        def h(t, xi, u):
            return ai * np.tanh(u) * env(t)

        return h

    sup_e, sup_de = [], []
    for i, iv in enumerate(schedule.intervals()[1::2], start=1):
        ts = np.linspace(iv.start, iv.end, 2001)[1:]
        sup_e.append(float(np.max(np.abs(envelope(ts)))))
        sup_de.append(float(np.max(np.abs(envelope_derivative(ts)))))
    scale = a**alpha  # ||x||_alpha = a^alpha |x| in R
    constants = ProblemConstants(
        K1=abs(m) / scale,
        K2=abs(forcing_amplitude) + abs(m),
        C_h1=tuple(abs(c) * s for c, s in zip(coeffs, sup_e)),
        D_h1=tuple(scale * abs(c) * s for c, s in zip(coeffs, sup_e)),
        C_h2=tuple(abs(c) * s for c, s in zip(coeffs, sup_de)),
        D_h2=tuple(scale * abs(c) * s for c, s in zip(coeffs, sup_de)),
    )
    return ProblemSpec(
        basis=basis,
        schedule=schedule,
        forcing=forcing,
        impulse_pos=tuple(make(c, envelope) for c in coeffs),
        impulse_vel=tuple(make(c, envelope_derivative) for c in coeffs),
        y0=ModalState([y0]),
        z0=ModalState([z0]),
        constants=constants,
        alpha=alpha,
        name="example63",
        meta={"a": a, "m": m, "impulse_coeffs": coeffs, "sup_envelope": tuple(sup_e)},
    )


def _zero_map(t, xi, u):
    return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(xi), np.shape(u)))


def zero_problem(basis: SpectralBasis, schedule: ImpulseSchedule) -> ProblemSpec:
    """F = 0, h = 0, y0 = z0 = 0; the solution is identically zero."""
    q = schedule.q
    return ProblemSpec(
        basis=basis,
        schedule=schedule,
        forcing=_zero_map,
        impulse_pos=(_zero_map,) * q,
        impulse_vel=(_zero_map,) * q,
        y0=ModalState.zeros(basis.size),
        z0=ModalState.zeros(basis.size),
        constants=ProblemConstants.zeros(q),
        name="zero",
    )


def linear_problem(
    basis: SpectralBasis,
    schedule: ImpulseSchedule,
    y0: ModalState,
    z0: ModalState | None = None,
    forcing: GridMap | None = None,
    K1: float = 0.0,
    K2: float = 0.0,
) -> ProblemSpec:
    """Impulse-free problem (q must be 0) with optional forcing."""
    if schedule.q:
        raise ValueError("linear_problem takes an impulse-free schedule")
    return ProblemSpec(
        basis=basis,
        schedule=schedule,
        forcing=_zero_map if forcing is None else forcing,
        impulse_pos=(),
        impulse_vel=(),
        y0=y0,
        z0=ModalState.zeros(y0.level) if z0 is None else z0,
        constants=ProblemConstants(K1, K2),
        name="linear",
    )


# -- sampled audits -------------------------------------------------------

def random_ball_states(rng: np.random.Generator, n: int, eigenvalues, alpha: float,
                       radius: float, count: int) -> np.ndarray:
    """``count`` random coefficient vectors with alpha-norm uniform in [0, radius]."""
    lam = np.asarray(eigenvalues, dtype=float)[:n]
    g = rng.standard_normal((count, n)) / lam ** alpha
    g /= weighted_norm(g, lam, alpha)[:, None]
    return g * (radius * rng.uniform(0.0, 1.0, count))[:, None]


@dataclass(frozen=True)
class LipschitzAudit:
    """Worst sampled quotients next to the declared constants."""

    K1: float
    K2: float
    C_h1: tuple[float, ...]
    D_h1: tuple[float, ...]
    C_h2: tuple[float, ...]
    D_h2: tuple[float, ...]
    samples: int
    radius: float

    def violations(self, constants: ProblemConstants, slack: float = 1e-12) -> list[str]:
        out = []
        for name in ("K1", "K2"):
            if getattr(self, name) > getattr(constants, name) + slack:
                out.append(name)
        for name in ("C_h1", "D_h1", "C_h2", "D_h2"):
            for i, (seen, declared) in enumerate(zip(getattr(self, name), getattr(constants, name)), 1):
                if seen > declared + slack:
                    out.append(f"{name}[{i}]")
        return out


def lipschitz_audit(problem: ProblemSpec, n: int | None = None, samples: int = 1000,
                    radius: float = 1.0, seed: int = 0) -> LipschitzAudit:
    """Sample difference quotients of F and h_i^j over pairs in the alpha-ball of ``radius``.

    F is measured in the discrete L2 norm of the grid, impulse outputs in the
    alpha-norm of their projection, inputs in the alpha-norm.
    """
    n = problem.basis.size if n is None else n
    rng = np.random.default_rng(seed)
    lam = problem.eigenvalues
    alpha = problem.alpha
    x = random_ball_states(rng, n, lam, alpha, radius, samples)
    y = random_ball_states(rng, n, lam, alpha, radius, samples)
    horizon = problem.schedule.horizon
    t = rng.uniform(0.0, horizon, samples)
    dist = weighted_norm(x - y, lam, alpha)
    keep = dist > 0
    fx = problem.forcing_grid(t, x)
    fy = problem.forcing_grid(t, y)
    basis = problem.basis
    k1 = float(np.max(basis.grid_norm(fx - fy)[keep] / dist[keep], initial=0.0))
    k2 = float(max(np.max(basis.grid_norm(fx)), np.max(basis.grid_norm(fy))))
    ch = {1: [], 2: []}
    dh = {1: [], 2: []}
    for iv in problem.schedule.intervals():
        if iv.kind is not IntervalKind.IMPULSE:
            continue
        ti = iv.start + iv.length * (1.0 - rng.uniform(0.0, 1.0, samples))  # (start, end]
        for which in (1, 2):
            hx = problem.impulse_modal(iv.index, which, ti, x)
            hy = problem.impulse_modal(iv.index, which, ti, y)
            diff = weighted_norm(hx - hy, lam, alpha)
            ch[which].append(float(np.max(diff[keep] / dist[keep], initial=0.0)))
            dh[which].append(float(max(np.max(weighted_norm(hx, lam, alpha)),
                                       np.max(weighted_norm(hy, lam, alpha)))))
    return LipschitzAudit(k1, k2, tuple(ch[1]), tuple(dh[1]), tuple(ch[2]), tuple(dh[2]),
                          samples, radius)
