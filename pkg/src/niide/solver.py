"""Approximate mild solutions by Picard iteration over whole evolution intervals.

On an evolution interval starting at ``t0`` with data ``(u0, v0)`` the level-n
iterate is

    v_{k+1}(t) = C(t - t0) u0 + S(t - t0) v0 + int_{t0}^t S(t - s) P^n F(s, v_k(s)) ds

evaluated on the interval's time grid (waveform relaxation), starting from the
homogeneous part.  Impulse intervals are filled directly from the impulse
maps evaluated at the left limit, which is the stored value at ``rho_i``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .problem import Interval, IntervalKind, ProblemSpec
from .propagators import duhamel_series
from .spectral import ModalState, pad, weighted_norm


class SolverError(RuntimeError):
    """Base class for solver failures."""


class PicardDivergenceError(SolverError):
    def __init__(self, interval_index: int, iterations: int, last_ratio: float, history):
        self.interval_index = interval_index
        self.iterations = iterations
        self.last_ratio = last_ratio
        self.history = list(history)
        super().__init__(
            f"Picard iteration on evolution interval {interval_index} did not converge in "
            f"{iterations} iterations (last contraction ratio {last_ratio:.3g})"
        )


class ResolutionError(ValueError):
    """Time step too coarse for the fastest retained mode."""


class ContractionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt_max: float = 1e-3
    picard_tol: float = 1e-9
    picard_max_iter: int = 50
    alpha: float = 0.5
    # dt_max <= resolution / sqrt(lambda_n)
    resolution: float = 0.1

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ValueError("picard_max_iter must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    def check_resolution(self, eigenvalues: np.ndarray, n: int):
        limit = self.resolution / math.sqrt(eigenvalues[n - 1])
        if self.dt_max > limit * (1 + 1e-12):
            raise ResolutionError(
                f"dt_max = {self.dt_max:g} exceeds {self.resolution:g}/sqrt(lambda_{n}) = {limit:g}"
            )


@dataclass
class PicardReport:
    """Sup-node alpha-norm differences between successive iterates."""

    interval_index: int
    differences: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.differences)

    @property
    def ratios(self) -> np.ndarray:
        d = np.asarray(self.differences)
        if d.size < 2:
            return np.zeros(0)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = d[1:] / d[:-1]
        return r[np.isfinite(r)]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise trajectory on a grid that contains every breakpoint.

    ``states`` and ``velocities`` have shape (nodes, n).  Node 0 is ``t = 0``
    and is tagged with evolution interval 0.
    """

    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    kinds: tuple[IntervalKind, ...]
    indices: np.ndarray
    picard: tuple[PicardReport, ...] = ()

    @property
    def level(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return self.times.size

    def state(self, j: int) -> ModalState:
        return ModalState(self.states[j])

    def mask(self, kind: IntervalKind, index: int) -> np.ndarray:
        kinds = np.array([k.value for k in self.kinds])
        m = (kinds == IntervalKind(kind).value) & (self.indices == index)
        if kind is IntervalKind.EVOLUTION and index == 0:
            m[0] = True
        return m

    def node_at(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[j], t, rel_tol=0, abs_tol=1e-12):
            raise KeyError(f"t = {t} is not a grid node")
        return j

    def norms(self, alpha: float, eigenvalues: np.ndarray) -> np.ndarray:
        return weighted_norm(self.states, eigenvalues, alpha)

    def padded(self, m: int) -> "Trajectory":
        return Trajectory(self.times, pad(self.states, m), pad(self.velocities, m),
                          self.kinds, self.indices, self.picard)


def picard_norm(diff: np.ndarray, eigenvalues: np.ndarray, alpha: float) -> float:
    """Discrete sup over nodes of the alpha-norm."""
    return float(np.max(weighted_norm(diff, eigenvalues, alpha), initial=0.0))


@dataclass(frozen=True, eq=False)
class Segment:
    interval: Interval
    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    report: PicardReport | None = None


def _homogeneous(lam, tau, u0, v0):
    w = np.sqrt(lam)
    phase = np.outer(tau, w)
    c, s = np.cos(phase), np.sin(phase)
    pos = c * u0 + (s / w) * v0
    vel = -(w * s) * u0 + c * v0
    return c, s, pos, vel


def solve_evolution_interval(
    problem: ProblemSpec,
    n: int,
    t_start: float,
    t_end: float,
    u0: np.ndarray | ModalState,
    v0: np.ndarray | ModalState,
    config: SolverConfig,
    *,
    times: np.ndarray | None = None,
    interval_index: int = 0,
) -> Segment:
    """Fixed point of the level-n mild-solution map on ``[t_start, t_end]``.

    The returned segment includes the left endpoint ``t_start``.
    """
    if not t_start < t_end:
        raise ValueError("t_start must be < t_end")
    u0 = np.asarray(getattr(u0, "coeffs", u0), dtype=float)
    v0 = np.asarray(getattr(v0, "coeffs", v0), dtype=float)
    if u0.shape != (n,) or v0.shape != (n,):
        raise ValueError(f"initial data must have level {n}")
    lam = problem.eigenvalues[:n]
    if times is None:
        steps = max(1, math.ceil((t_end - t_start) / config.dt_max - 1e-9))
        times = np.linspace(t_start, t_end, steps + 1)
    tau = times - t_start
    c, s, hom, hom_v = _homogeneous(lam, tau, u0, v0)

    report = PicardReport(interval_index)
    nu = hom
    for _ in range(config.picard_max_iter):
        f = problem.forcing_modal(times, nu)
        duh, duh_v = duhamel_series(lam, tau, f, cos_wt=c, sin_wt=s)
        new = hom + duh
        diff = picard_norm(new - nu, lam, config.alpha)
        report.differences.append(diff)
        nu = new
        if diff < config.picard_tol:
            break
    else:
        ratios = report.ratios
        last = float(ratios[-1]) if ratios.size else float("nan")
        raise PicardDivergenceError(interval_index, config.picard_max_iter, last, report.differences)
    # velocity from the converged forcing samples of the last sweep
    vel = hom_v + duh_v
    iv = Interval(IntervalKind.EVOLUTION, interval_index, t_start, t_end)
    return Segment(iv, times, nu, vel, report)


def mild_map(problem: ProblemSpec, segment: Segment, u0: np.ndarray, v0: np.ndarray) -> np.ndarray:
    """Apply the mild-solution map once to the states of ``segment``."""
    n = segment.states.shape[1]
    lam = problem.eigenvalues[:n]
    tau = segment.times - segment.times[0]
    c, s, hom, _ = _homogeneous(lam, tau, u0, v0)
    f = problem.forcing_modal(segment.times, segment.states)
    duh, _ = duhamel_series(lam, tau, f, cos_wt=c, sin_wt=s)
    return hom + duh


def apply_impulse_interval(
    problem: ProblemSpec, i: int, n: int, left_limit: np.ndarray | ModalState, times: np.ndarray
) -> Segment:
    """States ``P^n h1_i(t, P^n v(rho_i^-))`` and velocities from ``h2_i`` at ``times``."""
    left = pad(np.asarray(getattr(left_limit, "coeffs", left_limit), dtype=float), n)
    times = np.asarray(times, dtype=float)
    states = problem.impulse_modal(i, 1, times, left)
    vels = problem.impulse_modal(i, 2, times, left)
    iv = Interval(IntervalKind.IMPULSE, i, problem.schedule.rho[i], problem.schedule.theta[i])
    return Segment(iv, times, states, vels)


def assemble(problem: ProblemSpec, n: int, first: tuple, segments: list[Segment]) -> Trajectory:
    """Concatenate segments (dropping each left endpoint) behind the ``t = 0`` node."""
    y0, z0 = first
    times = [np.array([0.0])]
    states = [y0[None, :]]
    vels = [z0[None, :]]
    kinds = [IntervalKind.EVOLUTION]
    idx = [np.array([0])]
    reports = []
    for seg in segments:
        k = slice(1, None) if seg.interval.kind is IntervalKind.EVOLUTION else slice(None)
        times.append(seg.times[k])
        states.append(seg.states[k])
        vels.append(seg.velocities[k])
        count = seg.times[k].size
        kinds.extend([seg.interval.kind] * count)
        idx.append(np.full(count, seg.interval.index))
        if seg.report is not None:
            reports.append(seg.report)
    return Trajectory(
        times=np.concatenate(times),
        states=np.concatenate(states),
        velocities=np.concatenate(vels),
        kinds=tuple(kinds),
        indices=np.concatenate(idx),
        picard=tuple(reports),
    )


def solve(
    problem: ProblemSpec,
    n: int,
    config: SolverConfig | None = None,
    *,
    eta: float | None = None,
    check_contraction: bool = True,
) -> Trajectory:
    """Level-n approximate mild solution over the whole schedule.

    A violated contraction condition ``D >= 1`` only warns; the iteration is
    attempted anyway.  ``eta`` (default ``(1 + alpha) / 2``) only enters
    that check.
    """
    config = SolverConfig(alpha=problem.alpha) if config is None else config
    if not 1 <= n <= problem.basis.size:
        raise ValueError(f"level {n} outside 1..{problem.basis.size}")
    config.check_resolution(problem.eigenvalues, n)
    if check_contraction:
        from .analysis import check_contraction as _check, compute_constants

        eta = 0.5 * (1.0 + config.alpha) if eta is None else eta
        verdict = _check(compute_constants(problem, n, eta=eta, alpha=config.alpha))
        if not verdict.satisfied:
            warnings.warn(f"contraction condition violated: D = {verdict.D:.4g} >= 1",
                          ContractionWarning, stacklevel=2)

    y0, z0 = problem.initial(n)
    segments: list[Segment] = []
    left = None
    for iv, nodes in problem.schedule.grid(config.dt_max):
        if iv.kind is IntervalKind.IMPULSE:
            seg = apply_impulse_interval(problem, iv.index, n, left, nodes[1:])
            u0 = problem.impulse_modal(iv.index, 1, iv.end, left)
            v0 = problem.impulse_modal(iv.index, 2, iv.end, left)
            segments.append(seg)
            continue
        if iv.index == 0:
            u0, v0 = y0, z0
        seg = solve_evolution_interval(problem, n, iv.start, iv.end, u0, v0, config,
                                       times=nodes, interval_index=iv.index)
        segments.append(seg)
        left = seg.states[-1]
    return assemble(problem, n, (y0, z0), segments)


def fg_coefficients(traj: Trajectory, m: int | None = None) -> np.ndarray:
    """Faedo-Galerkin coefficient series ``alpha_l^n(t)``, one row per mode."""
    rows = traj.states.T
    return rows if m is None else rows[:m]
