"""Contraction constants, a-priori bounds and truncation-convergence studies.

The operator-norm products ``||A^(a-1)|| sup ||A S(t)||`` that appear in the
a-priori estimates are replaced by the modal supremum

    kappa_a = sup_{l <= n, 0 <= t <= T} lambda_l^(a - 1/2) |sin(sqrt(lambda_l) t)|,

which is finite for every truncation and bounded by 1 when ``a = 1/2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .problem import IntervalKind, ProblemSpec
from .solver import SolverConfig, Trajectory, solve
from .spectral import pad, weighted_norm


def _sup_abs_sin(omega: np.ndarray, horizon: float) -> np.ndarray:
    """Exact ``sup_{0 <= t <= T} |sin(omega t)|`` per frequency."""
    return np.where(omega * horizon >= math.pi / 2, 1.0, np.sin(omega * horizon))


@dataclass(frozen=True)
class ConstantLedger:
    alpha: float
    eta: float
    level: int
    M: float
    M_tilde: float
    kappa_alpha: float
    kappa_eta: float
    rho_sup: float
    N: tuple[float, ...]
    Q: tuple[float, ...]
    U: tuple[float, ...]
    D: float
    R: float
    U_prime: float
    C_h1: tuple[float, ...] = ()

    def interval_factor(self, kind: IntervalKind, index: int) -> float:
        """Lipschitz factor of the fixed-point map on one interval family."""
        if kind is IntervalKind.IMPULSE:
            return self.C_h1[index - 1]
        return self.Q[index]

    def dump(self) -> str:
        def fmt(x):
            return f"{x:.17g}"

        lines = [
            f"level = {self.level}",
            f"alpha = {fmt(self.alpha)}",
            f"eta = {fmt(self.eta)}",
            f"M = {fmt(self.M)}",
            f"M_tilde = {fmt(self.M_tilde)}",
            f"kappa_alpha = {fmt(self.kappa_alpha)}",
            f"kappa_eta = {fmt(self.kappa_eta)}",
            f"rho_sup_truncated = {fmt(self.rho_sup)}  # grows with the level",
        ]
        lines += [f"N_{i} = {fmt(v)}" for i, v in enumerate(self.N)]
        lines += [f"Q_{i} = {fmt(v)}" for i, v in enumerate(self.Q)]
        lines += [f"U_{i} = {fmt(v)}" for i, v in enumerate(self.U)]
        lines += [f"D = {fmt(self.D)}", f"R = {fmt(self.R)}", f"U_prime = {fmt(self.U_prime)}"]
        return "\n".join(lines) + "\n"


def compute_constants(problem: ProblemSpec, n: int, eta: float = 0.75,
                      alpha: float | None = None) -> ConstantLedger:
    alpha = problem.alpha if alpha is None else alpha
    if not 0.0 < alpha < eta < 1.0:
        raise ValueError(f"need 0 < alpha < eta < 1, got alpha={alpha}, eta={eta}")
    lam = problem.eigenvalues[:n]
    w = np.sqrt(lam)
    sched = problem.schedule
    T = sched.horizon
    sin_sup = _sup_abs_sin(w, T)
    M = 1.0  # |cos| attains 1 at t = 0
    M_tilde = float(np.max(sin_sup / w))
    kappa_a = float(np.max(lam ** (alpha - 0.5) * sin_sup))
    kappa_e = float(np.max(lam ** (eta - 0.5) * sin_sup))
    rho_sup = float(np.max(w * sin_sup))

    c = problem.constants
    y0, z0 = problem.initial(n)
    rho = sched.rho
    N = [M * weighted_norm(y0, lam, alpha) + M_tilde * weighted_norm(z0, lam, alpha)
         + kappa_a * c.K2 * rho[1]]
    Q = [kappa_a * c.K1 * rho[1]]
    U = [M * weighted_norm(y0, lam, eta) + M_tilde * weighted_norm(z0, lam, eta)
         + kappa_e * c.K2 * rho[1]]
    for i in range(1, sched.q + 1):
        N.append(M * c.D_h1[i - 1] + M_tilde * c.D_h2[i - 1] + kappa_a * c.K2 * rho[i + 1])
        Q.append(M * c.C_h1[i - 1] + M_tilde * c.C_h2[i - 1] + kappa_a * c.K1 * rho[i + 1])
        U.append(M * c.D_h1[i - 1] + M_tilde * c.D_h2[i - 1] + kappa_e * c.K2 * rho[i + 1])
    N = tuple(float(x) for x in N)
    Q = tuple(float(x) for x in Q)
    U = tuple(float(x) for x in U)
    D = max(max(Q), max(c.C_h1, default=0.0))
    R = max(max(N), max(c.D_h1, default=0.0))
    U_prime = max(max(U), max(c.D_h1, default=0.0))
    return ConstantLedger(alpha, eta, n, M, M_tilde, kappa_a, kappa_e, rho_sup,
                          N, Q, U, float(D), float(R), float(U_prime), c.C_h1)


@dataclass(frozen=True)
class ContractionVerdict:
    satisfied: bool
    D: float
    margin: float

    def __str__(self):
        state = "satisfied" if self.satisfied else "violated"
        return f"{state} (D = {self.D:.6g}, margin = {self.margin:.6g})"


def check_contraction(ledger: ConstantLedger) -> ContractionVerdict:
    return ContractionVerdict(ledger.D < 1.0, ledger.D, 1.0 - ledger.D)


# -- convergence studies ----------------------------------------------------

def lift(problem: ProblemSpec, traj: Trajectory, size: int | None = None) -> np.ndarray:
    """Represent the level-n approximate solution in ``size`` modes.

    The approximate solution keeps the full initial data and the full image
    of the nonlinearities; only their argument is the level-n state.  Tail
    modes are therefore fixed by a single linear pass over the stored
    trajectory (no further iteration).
    """
    from .propagators import duhamel_series

    size = problem.basis.size if size is None else size
    lam = problem.eigenvalues[:size]
    w = np.sqrt(lam)
    y0, z0 = problem.initial(size)
    out = np.zeros((traj.times.size, size))
    out[0] = y0
    u0, v0 = y0, z0
    for iv in problem.schedule.intervals():
        js = np.flatnonzero(traj.mask(iv.kind, iv.index))
        if iv.kind is IntervalKind.EVOLUTION and iv.index == 0:
            js = js[1:]
        start = js[0] - 1  # node at the interval's left endpoint
        if iv.kind is IntervalKind.IMPULSE:
            left = pad(traj.states[start], size)
            out[js] = problem.impulse_modal(iv.index, 1, traj.times[js], left)
            u0 = out[js[-1]]
            v0 = problem.impulse_modal(iv.index, 2, iv.end, left)
            continue
        nodes = np.concatenate([[traj.times[start]], traj.times[js]])
        states = traj.states[[start, *js]]
        f = problem.basis.from_grid_array(problem.forcing_grid(nodes, states), size)
        tau = nodes - nodes[0]
        phase = np.outer(tau, w)
        duh, _ = duhamel_series(lam, tau, f)
        full = np.cos(phase) * u0 + np.sin(phase) / w * v0 + duh
        out[js] = full[1:]
    return out


@dataclass(frozen=True)
class ConvergencePair:
    m: int
    n: int
    lambda_m: float
    sup_gap: float
    interval_gaps: dict
    interval_bounds: dict
    theoretical_bound: float
    fg_gap: float
    tail_bound: float

    @property
    def bound_holds(self) -> bool:
        return all(self.interval_gaps[k] <= self.interval_bounds[k] for k in self.interval_gaps)

    @property
    def fg_holds(self) -> bool:
        return self.fg_gap <= self.sup_gap + self.tail_bound


@dataclass(frozen=True)
class ConvergenceReport:
    levels: tuple[int, ...]
    pairs: tuple[ConvergencePair, ...]
    fitted_rate: float
    predicted_rate: float
    ledger: ConstantLedger
    mode: str = "padded"
    trajectories: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def pairwise_gaps(self) -> np.ndarray:
        return np.array([p.sup_gap for p in self.pairs])

    @property
    def strictly_decreasing(self) -> bool:
        g = self.pairwise_gaps
        return bool(np.all(np.diff(g) < 0))

    def family_gaps(self, kind: IntervalKind, index: int) -> np.ndarray:
        return np.array([p.interval_gaps[(kind.value, index)] for p in self.pairs])


def _solve_levels(problem, levels, config, workers):
    def run(n):
        return solve(problem, n, config, check_contraction=False)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            trajs = list(ex.map(run, levels))
    else:
        trajs = []
        for n in levels:
            try:
                trajs.append(run(n))
            except Exception as exc:
                raise RuntimeError(f"solve failed at level {n}: {exc}") from exc
    return dict(zip(levels, trajs))


def convergence_study(problem: ProblemSpec, levels, eta: float = 0.75,
                      config: SolverConfig | None = None, *, mode: str = "padded",
                      workers: int = 1) -> ConvergenceReport:
    """Sweep truncation levels and compare consecutive solutions.

    ``mode="padded"`` compares the level-n solutions with the smaller one
    zero-padded.  ``mode="lifted"`` compares the approximate solutions
    represented in the full basis (see :func:`lift`).  In both modes
    ``fg_gap`` is the padded (Faedo-Galerkin) gap.
    """
    levels = tuple(int(n) for n in levels)
    if len(levels) < 3:
        raise ValueError("convergence study needs at least 3 levels")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    if mode not in ("padded", "lifted"):
        raise ValueError(f"unknown mode {mode!r}")
    config = SolverConfig(alpha=problem.alpha) if config is None else config
    alpha = config.alpha
    top = levels[-1]
    if top > problem.basis.size:
        raise ValueError(f"level {top} exceeds basis size {problem.basis.size}")
    ledger = compute_constants(problem, top, eta=eta, alpha=alpha)
    verdict = check_contraction(ledger)
    if not verdict.satisfied:
        raise ValueError(f"contraction condition violated: {verdict}")
    trajs = _solve_levels(problem, levels, config, workers)
    size = problem.basis.size
    lam = problem.eigenvalues
    if mode == "lifted":
        reps = {n: lift(problem, trajs[n], size) for n in levels}
    else:
        reps = {n: pad(trajs[n].states, size) for n in levels}

    rate = eta - alpha
    pairs = []
    for m, n in zip(levels, levels[1:]):
        ref = trajs[n]
        gap_t = weighted_norm(reps[n] - reps[m], lam, alpha)
        fg_t = weighted_norm(pad(trajs[n].states, size) - pad(trajs[m].states, size), lam, alpha)
        decay = lam[m - 1] ** (-rate)
        gaps, bounds = {}, {}
        for iv in problem.schedule.intervals():
            mask = ref.mask(iv.kind, iv.index)
            key = (iv.kind.value, iv.index)
            gaps[key] = float(np.max(gap_t[mask]))
            f = ledger.interval_factor(iv.kind, iv.index)
            bounds[key] = f / (1.0 - f) * decay * ledger.U_prime
        pairs.append(ConvergencePair(
            m=m, n=n, lambda_m=float(lam[m - 1]), sup_gap=float(np.max(gap_t)),
            interval_gaps=gaps, interval_bounds=bounds,
            theoretical_bound=max(bounds.values()), fg_gap=float(np.max(fg_t)),
            tail_bound=decay * ledger.U_prime,
        ))
    x = np.log([p.lambda_m for p in pairs])
    y = np.log([max(p.sup_gap, 1e-300) for p in pairs])
    fitted = float(np.polyfit(x, y, 1)[0])
    return ConvergenceReport(levels, tuple(pairs), fitted, -rate, ledger, mode, trajs)


@dataclass(frozen=True)
class CoefficientReport:
    n: int
    reference_level: int
    times: np.ndarray
    discrepancy: np.ndarray
    dominating: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(self.discrepancy))


def coefficient_discrepancy(traj: Trajectory, ref: Trajectory, eigenvalues, alpha: float):
    """Weighted shared-mode discrepancy and the full squared alpha-norm gap per node."""
    n = traj.level
    if ref.times.shape != traj.times.shape or not np.allclose(ref.times, traj.times, atol=1e-12):
        raise ValueError("trajectories live on different grids")
    disc = weighted_norm(traj.states - ref.states[:, :n], eigenvalues, alpha) ** 2
    dom = weighted_norm(pad(traj.states, ref.level) - ref.states, eigenvalues, alpha) ** 2
    return disc, dom


def coefficient_convergence(problem: ProblemSpec, n: int, reference_level: int,
                            config: SolverConfig | None = None, *,
                            reference: Trajectory | None = None) -> CoefficientReport:
    """``sum_{l <= n} lambda_l^(2 alpha) |a_l^n - a_l|^2`` against a high-level reference run."""
    if reference_level < 2 * n:
        raise ValueError(f"reference level {reference_level} must be >= 2 n = {2 * n}")
    config = SolverConfig(alpha=problem.alpha) if config is None else config
    traj = solve(problem, n, config, check_contraction=False)
    if reference is None:
        reference = solve(problem, reference_level, config, check_contraction=False)
    disc, dom = coefficient_discrepancy(traj, reference, problem.eigenvalues, config.alpha)
    return CoefficientReport(n, reference_level, traj.times, disc, dom)
