"""Command-line front end.

    niide solve     --config run.toml [--out DIR] [--strict] [--seed N]
    niide converge  --config run.toml
    niide oracle    --config run.toml [--tol X]
    niide constants --config run.toml

Exit codes: 0 success, 1 solver failure, 2 contraction violated (``--strict``;
always for ``converge``, which requires it), 3 oracle gap at or above the
tolerance, 64 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    check_contraction,
    coefficient_discrepancy,
    compute_constants,
    convergence_study,
)
from .config import ConfigError, RunConfig
from .oracle import StepSizeError, integrate
from .problem import lipschitz_audit
from .solver import ResolutionError, SolverError, solve
from .spectral import weighted_norm

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONTRACTION = 2
EXIT_ORACLE = 3
EXIT_CONFIG = 64


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        self.code = code
        self.message = message


def fmt(x) -> str:
    """Locale-independent 17-significant-digit decimal; ``-0`` is printed as ``0``."""
    return f"{float(x) + 0.0:.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")


def trajectory_rows(traj):
    for j in range(len(traj)):
        yield [traj.times[j], traj.kinds[j].value, str(int(traj.indices[j])),
               *traj.states[j], *traj.velocities[j]]


def write_trajectory(path: Path, traj) -> None:
    n = traj.level
    header = ["t", "interval_kind", "interval_index",
              *(f"alpha_{l}" for l in range(1, n + 1)),
              *(f"alphadot_{l}" for l in range(1, n + 1))]
    write_csv(path, header, trajectory_rows(traj))


# -- shared setup ----------------------------------------------------------------

def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.tol is not None:
        if args.tol < 0:
            raise ConfigError("--tol", "must be nonnegative")
        overrides["tol"] = args.tol
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _prepare(cfg: RunConfig):
    try:
        problem = cfg.build_problem()
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("problem", str(exc)) from exc
    if cfg.n > problem.basis.size:
        raise ConfigError("n", f"level {cfg.n} exceeds the basis size {problem.basis.size}")
    sc = cfg.solver_config()
    try:
        sc.check_resolution(problem.eigenvalues, cfg.n)
    except ResolutionError as exc:
        raise ConfigError("dt", str(exc)) from exc
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(cfg.dumps(), encoding="utf-8")
    return problem, sc, out


def _constants_text(cfg, problem, ledger, verdict) -> str:
    audit = lipschitz_audit(problem, n=cfg.n, samples=cfg.audit_samples,
                            radius=cfg.audit_radius, seed=cfg.seed)
    c = problem.constants
    lines = [f"# problem = {problem.name}", ledger.dump().rstrip("\n"),
             f"contraction = {'satisfied' if verdict.satisfied else 'violated'}",
             f"margin = {fmt(verdict.margin)}",
             f"# declared constants", f"K1 = {fmt(c.K1)}", f"K2 = {fmt(c.K2)}"]
    for name in ("C_h1", "D_h1", "C_h2", "D_h2"):
        lines += [f"{name}_{i} = {fmt(v)}" for i, v in enumerate(getattr(c, name), 1)]
    est = problem.meta.get("estimated_constants")
    if est:
        lines.append(f"# estimated from the audit: {', '.join(est)}")
    lines.append(f"# lipschitz audit: seed = {cfg.seed}, samples = {audit.samples}, "
                 f"radius = {fmt(audit.radius)}")
    lines += [f"audit_K1 = {fmt(audit.K1)}", f"audit_K2 = {fmt(audit.K2)}"]
    for name in ("C_h1", "D_h1", "C_h2", "D_h2"):
        lines += [f"audit_{name}_{i} = {fmt(v)}" for i, v in enumerate(getattr(audit, name), 1)]
    bad = audit.violations(c)
    lines.append(f"audit_violations = {', '.join(bad) if bad else 'none'}")
    return "\n".join(lines) + "\n"


def _ledger(cfg, problem, out, level=None):
    ledger = compute_constants(problem, level or cfg.n, eta=cfg.eta, alpha=cfg.alpha)
    verdict = check_contraction(ledger)
    (out / "constants.txt").write_text(_constants_text(cfg, problem, ledger, verdict),
                                       encoding="utf-8")
    return ledger, verdict


def _solve(problem, n, sc):
    try:
        return solve(problem, n, sc, check_contraction=False)
    except SolverError as exc:
        raise _Exit(EXIT_SOLVER, f"solver failure: {exc}") from exc


# -- commands ----------------------------------------------------------------------

def cmd_constants(cfg: RunConfig, strict: bool = False) -> int:
    problem, _, out = _prepare(cfg)
    ledger, verdict = _ledger(cfg, problem, out)
    print((out / "constants.txt").read_text(encoding="utf-8"), end="")
    if strict and not verdict.satisfied:
        raise _Exit(EXIT_CONTRACTION, f"contraction condition {verdict}")
    return EXIT_OK


def cmd_solve(cfg: RunConfig, strict: bool = False) -> int:
    problem, sc, out = _prepare(cfg)
    _, verdict = _ledger(cfg, problem, out)
    if not verdict.satisfied:
        if strict:
            raise _Exit(EXIT_CONTRACTION, f"contraction condition {verdict}")
        print(f"warning: contraction condition {verdict}; iterating anyway", file=sys.stderr)
    traj = _solve(problem, cfg.n, sc)
    write_trajectory(out / "trajectory.csv", traj)
    print(f"wrote {len(traj)} nodes at level {cfg.n} to {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_converge(cfg: RunConfig, strict: bool = False) -> int:
    if not cfg.levels:
        raise ConfigError("levels", "missing; converge needs at least 3 levels")
    problem, sc, out = _prepare(cfg)
    top = cfg.levels[-1]
    try:
        sc.check_resolution(problem.eigenvalues, cfg.effective_reference_level())
    except ResolutionError as exc:
        raise ConfigError("dt", f"{exc} (reference level)") from exc
    _, verdict = _ledger(cfg, problem, out, level=top)
    if not verdict.satisfied:
        raise _Exit(EXIT_CONTRACTION, f"contraction condition {verdict}; the study requires D < 1")
    try:
        report = convergence_study(problem, cfg.levels, eta=cfg.eta, config=sc, mode=cfg.mode)
    except RuntimeError as exc:
        raise _Exit(EXIT_SOLVER, str(exc)) from exc
    ref = _solve(problem, cfg.effective_reference_level(), sc)
    rows, disc = [], {}
    for p in report.pairs:
        d, _ = coefficient_discrepancy(report.trajectories[p.m], ref, problem.eigenvalues, cfg.alpha)
        disc[p.m] = float(np.max(d))
        rows.append([str(p.m), str(p.n), p.lambda_m, p.sup_gap, p.theoretical_bound, p.fg_gap,
                     disc[p.m]])
    write_csv(out / "convergence.csv",
              ["m", "n", "lambda_m", "sup_gap", "theoretical_bound", "fg_gap", "coeff_discrepancy"],
              rows)
    lines = [
        f"problem = {problem.name}",
        f"mode = {report.mode}",
        f"levels = {', '.join(map(str, report.levels))}",
        f"reference_level = {ref.level}",
        f"alpha = {fmt(cfg.alpha)}",
        f"eta = {fmt(cfg.eta)}",
        f"fitted_rate = {fmt(report.fitted_rate)}",
        f"predicted_rate = {fmt(report.predicted_rate)}",
        f"gaps_strictly_decreasing = {str(report.strictly_decreasing).lower()}",
        f"bounds_hold = {str(all(p.bound_holds for p in report.pairs)).lower()}",
        f"fg_inequality_holds = {str(all(p.fg_holds for p in report.pairs)).lower()}",
        f"contraction_D = {fmt(report.ledger.D)}",
        f"U_prime = {fmt(report.ledger.U_prime)}",
    ]
    for p in report.pairs:
        for (kind, i), g in p.interval_gaps.items():
            lines.append(f"pair {p.m}->{p.n} {kind} {i}: gap = {fmt(g)}, "
                         f"bound = {fmt(p.interval_bounds[(kind, i)])}")
    text = "\n".join(lines) + "\n"
    (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, strict: bool = False) -> int:
    problem, sc, out = _prepare(cfg)
    _, verdict = _ledger(cfg, problem, out)
    if strict and not verdict.satisfied:
        raise _Exit(EXIT_CONTRACTION, f"contraction condition {verdict}")
    traj = _solve(problem, cfg.n, sc)
    try:
        ref = integrate(problem, cfg.n, cfg.dt, resolution=sc.resolution)
    except StepSizeError as exc:
        raise ConfigError("dt", str(exc)) from exc
    diff = traj.states - ref.states
    mode_diff = np.max(np.abs(diff), axis=1)
    norm_diff = weighted_norm(diff, problem.eigenvalues, cfg.alpha)
    write_csv(out / "oracle_diff.csv", ["t", "sup_mode_diff", "fractional_norm_diff"],
              zip(traj.times, mode_diff, norm_diff))
    gap = float(np.max(norm_diff))
    print(f"max fractional-norm gap = {fmt(gap)} (tol = {fmt(cfg.tol)})")
    if gap >= cfg.tol:
        raise _Exit(EXIT_ORACLE, f"oracle gap {gap:.3e} is not below tol {cfg.tol:.3e}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "converge": cmd_converge,
    "oracle": cmd_oracle,
    "constants": cmd_constants,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="TOML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    common.add_argument("--tol", type=float, help="oracle gap tolerance (overrides tol)")
    common.add_argument("--strict", action="store_true", help="fail with exit 2 when D >= 1")
    common.add_argument("--seed", type=int, help="seed for the randomized audits")
    parser = argparse.ArgumentParser(prog="niide", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = _load(args)
        return COMMANDS[args.command](cfg, strict=args.strict)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Exit as exc:
        if exc.message:
            print(f"error: {exc.message}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
