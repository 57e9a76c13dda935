"""Run configuration: TOML ingestion, validation and problem construction.

A config names a built-in problem or defines one inline::

    n = 16
    dt = 0.001
    levels = [4, 8, 16, 32]

    [problem]
    builtin = "example62"

or::

    [problem]
    basis = "sine"            # or "scalar" with eigenvalue = ...
    rho = [0.0, 1.0, 3.0]
    theta = [0.0, 2.0]
    forcing = "xi*sin(t) + exp(-t)/(sqrt(72) + abs(u))"
    h1 = ["sin(i*t)/3 * abs(u)/(1 + abs(u))"]
    h2 = ["cos(i*t)/3 * abs(u)/(1 + abs(u))"]
    y0 = "exp(-xi)/20"

    [problem.constants]       # optional; missing entries come from the seeded audit
    K1 = 0.0246
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import tomli
import tomli_w

from .expr import Expression, ExpressionError
from .problem import (
    ImpulseSchedule,
    ProblemConstants,
    ProblemSpec,
    ScheduleError,
    builtin_example_61,
    builtin_example_62,
    builtin_example_63,
    lipschitz_audit,
)
from .solver import SolverConfig
from .spectral import ModalState, SpectralBasis

BUILTINS = ("example61", "example62", "example63")
SCALAR_KEYS = {"n", "dt", "alpha", "eta", "levels", "output_dir", "seed", "tol",
               "reference_level", "mode", "audit_samples", "audit_radius"}
SOLVER_KEYS = {"picard_tol", "picard_max_iter", "resolution"}
PARAM_KEYS = {
    "example61": {"q", "nodes"},
    "example62": {"nodes"},
    "example63": {"a", "m", "impulse_coeffs", "y0", "z0", "forcing_amplitude", "envelope",
                  "envelope_derivative", "rho", "theta"},
}
INLINE_KEYS = {"basis", "size", "nodes", "eigenvalue", "rho", "theta", "forcing", "h1", "h2",
               "y0", "z0", "constants", "name"}
CONSTANT_KEYS = ("K1", "K2", "C_h1", "D_h1", "C_h2", "D_h2")
FIELD_VARIABLES = {
    "forcing": ("t", "xi", "u"),
    "h1": ("t", "xi", "u", "i"),
    "h2": ("t", "xi", "u", "i"),
    "y0": ("xi",),
    "z0": ("xi",),
    "envelope": ("t",),
    "envelope_derivative": ("t",),
}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"config field '{field_name}': {message}")


@dataclass(frozen=True)
class RunConfig:
    problem: dict
    n: int = 16
    dt: float = 1e-3
    alpha: float = 0.5
    eta: float = 0.75
    levels: tuple[int, ...] | None = None
    output_dir: str = "out"
    seed: int = 0
    tol: float = 1e-4
    reference_level: int | None = None
    mode: str = "padded"
    audit_samples: int = 1000
    audit_radius: float = 1.0
    solver: dict = field(default_factory=dict)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return _validate(data)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError("<file>", f"malformed TOML: {exc}") from exc
        return _validate(data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc}") from exc
        return cls.loads(text)

    # -- derived objects ---------------------------------------------------
    def solver_config(self) -> SolverConfig:
        return SolverConfig(dt_max=self.dt, alpha=self.alpha, **self.solver)

    def basis_size(self) -> int:
        need = [self.n]
        if self.levels:
            need.append(self.levels[-1])
            need.append(self.effective_reference_level())
        return max(need)

    def effective_reference_level(self) -> int:
        if self.reference_level is not None:
            return self.reference_level
        return 2 * self.levels[-1] if self.levels else 2 * self.n

    def build_problem(self) -> ProblemSpec:
        return build_problem(self.problem, self.basis_size(), self.alpha, self.seed,
                             self.audit_samples, self.audit_radius)


# -- validation ------------------------------------------------------------

def _number(data, key, kind=float, positive=False, name=None):
    name = name or key
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"expected a number, got {v!r}")
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(name, f"expected an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(name, "must be finite")
    if positive and v <= 0:
        raise ConfigError(name, f"must be positive, got {v!r}")
    return v


def _number_list(value, name, kind=float):
    if not isinstance(value, list):
        raise ConfigError(name, f"expected a list, got {value!r}")
    return tuple(_number({name: x}, name, kind, name=f"{name}[{k}]") for k, x in enumerate(value))


def _unknown(keys, allowed, prefix):
    extra = sorted(set(keys) - set(allowed))
    if extra:
        name = f"{prefix}{extra[0]}"
        raise ConfigError(name, f"unknown key; allowed: {', '.join(sorted(allowed))}")


def _validate(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a table")
    _unknown(data, SCALAR_KEYS | {"problem", "solver"}, "")
    if "problem" not in data:
        raise ConfigError("problem", "missing required table")
    problem = data["problem"]
    if not isinstance(problem, dict):
        raise ConfigError("problem", "expected a table")
    kw: dict[str, Any] = {}
    for key, kind, pos in (("n", int, True), ("dt", float, True), ("alpha", float, True),
                           ("eta", float, True), ("seed", int, False), ("tol", float, False),
                           ("reference_level", int, True), ("audit_samples", int, True),
                           ("audit_radius", float, True)):
        if key in data:
            kw[key] = _number(data, key, kind, positive=pos)
    if "tol" in kw and kw["tol"] < 0:
        raise ConfigError("tol", "must be nonnegative")
    alpha, eta = kw.get("alpha", 0.5), kw.get("eta", 0.75)
    if not 0 < alpha < 1:
        raise ConfigError("alpha", f"must lie in (0, 1), got {alpha}")
    if not alpha < eta < 1:
        raise ConfigError("eta", f"must lie in (alpha, 1) = ({alpha}, 1), got {eta}")
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("output_dir", "expected a string")
        kw["output_dir"] = data["output_dir"]
    if "mode" in data:
        if data["mode"] not in ("padded", "lifted"):
            raise ConfigError("mode", "expected 'padded' or 'lifted'")
        kw["mode"] = data["mode"]
    if "levels" in data:
        levels = _number_list(data["levels"], "levels", int)
        if len(levels) < 3:
            raise ConfigError("levels", f"need at least 3 levels, got {len(levels)}")
        if any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 1:
            raise ConfigError("levels", "must be positive and strictly increasing")
        kw["levels"] = levels
    solver = data.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("solver", "expected a table")
    _unknown(solver, SOLVER_KEYS, "solver.")
    sv = {}
    if "picard_tol" in solver:
        sv["picard_tol"] = _number(solver, "picard_tol", positive=True, name="solver.picard_tol")
    if "picard_max_iter" in solver:
        sv["picard_max_iter"] = _number(solver, "picard_max_iter", int, positive=True,
                                        name="solver.picard_max_iter")
    if "resolution" in solver:
        sv["resolution"] = _number(solver, "resolution", positive=True, name="solver.resolution")
    kw["solver"] = sv
    _validate_problem(problem)
    cfg = RunConfig(problem=problem, **kw)
    if cfg.levels and cfg.effective_reference_level() < 2 * cfg.levels[-2]:
        raise ConfigError("reference_level", "must be at least twice the second-largest level")
    return cfg


def _validate_problem(p: dict):
    if "builtin" in p:
        name = p["builtin"]
        if name not in BUILTINS:
            raise ConfigError("problem.builtin", f"unknown builtin {name!r}; choose from {BUILTINS}")
        _unknown(p, {"builtin", "params"}, "problem.")
        params = p.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("problem.params", "expected a table")
        _unknown(params, PARAM_KEYS[name], "problem.params.")
        for key in ("envelope", "envelope_derivative"):
            if key in params:
                _expression(params[key], key, f"problem.params.{key}")
        return
    _unknown(p, INLINE_KEYS, "problem.")
    for key in ("rho", "theta", "forcing"):
        if key not in p:
            raise ConfigError(f"problem.{key}", "missing (inline problems need rho, theta, forcing)")
    basis = p.get("basis", "sine")
    if basis not in ("sine", "scalar"):
        raise ConfigError("problem.basis", f"expected 'sine' or 'scalar', got {basis!r}")
    if basis == "scalar" and "eigenvalue" not in p:
        raise ConfigError("problem.eigenvalue", "required for the scalar basis")
    try:
        sched = ImpulseSchedule(_number_list(p["rho"], "problem.rho"),
                                _number_list(p["theta"], "problem.theta"))
    except ScheduleError as exc:
        raise ConfigError("problem.rho", str(exc)) from exc
    _expression(p["forcing"], "forcing", "problem.forcing")
    for key in ("h1", "h2"):
        items = p.get(key, [])
        if not isinstance(items, list) or len(items) != sched.q:
            raise ConfigError(f"problem.{key}", f"expected a list of {sched.q} expressions")
        for k, src in enumerate(items):
            _expression(src, key, f"problem.{key}[{k}]")
    for key in ("y0", "z0"):
        if key in p:
            _expression(p[key], key, f"problem.{key}")
    consts = p.get("constants", {})
    if not isinstance(consts, dict):
        raise ConfigError("problem.constants", "expected a table")
    _unknown(consts, CONSTANT_KEYS, "problem.constants.")
    for key in ("K1", "K2"):
        if key in consts:
            if _number(consts, key, name=f"problem.constants.{key}") < 0:
                raise ConfigError(f"problem.constants.{key}", "must be nonnegative")
    for key in CONSTANT_KEYS[2:]:
        if key in consts:
            vals = _number_list(consts[key], f"problem.constants.{key}")
            if len(vals) != sched.q or any(v < 0 for v in vals):
                raise ConfigError(f"problem.constants.{key}", f"expected {sched.q} nonnegative numbers")


def _expression(src, field_key, name) -> Expression:
    try:
        return Expression(src, frozenset(FIELD_VARIABLES[field_key]))
    except ExpressionError as exc:
        raise ConfigError(name, str(exc)) from exc


# -- problem construction -----------------------------------------------------

def _grid_map(expr: Expression, i: int | None = None):
    def f(t, xi, u):
        env = {"t": t, "xi": xi, "u": u}
        if i is not None:
            env["i"] = float(i)
        return np.asarray(expr(**env), dtype=float)

    return f


def build_problem(p: dict, size: int, alpha: float = 0.5, seed: int = 0,
                  samples: int = 1000, radius: float = 1.0) -> ProblemSpec:
    if "builtin" in p:
        return _build_builtin(p["builtin"], dict(p.get("params", {})), size, alpha)
    return _build_inline(p, size, alpha, seed, samples, radius)


def _build_builtin(name, params, size, alpha) -> ProblemSpec:
    if name == "example61":
        return builtin_example_61(size, q=int(params.get("q", 1)), nodes=params.get("nodes"))
    if name == "example62":
        return builtin_example_62(size, nodes=params.get("nodes"))
    kw = {k: params[k] for k in ("a", "m", "y0", "z0", "forcing_amplitude") if k in params}
    if "impulse_coeffs" in params:
        kw["impulse_coeffs"] = tuple(params["impulse_coeffs"])
    for key in ("envelope", "envelope_derivative"):
        if key in params:
            e = _expression(params[key], key, f"problem.params.{key}")
            kw[key] = lambda t, e=e: np.asarray(e(t=t), dtype=float) + 0.0 * np.asarray(t)
    if "rho" in params or "theta" in params:
        try:
            kw["schedule"] = ImpulseSchedule(tuple(params.get("rho", ())), tuple(params.get("theta", ())))
        except ScheduleError as exc:
            raise ConfigError("problem.params.rho", str(exc)) from exc
    try:
        return builtin_example_63(alpha=alpha, **kw)
    except ValueError as exc:
        raise ConfigError("problem.params", str(exc)) from exc


def _build_inline(p, size, alpha, seed, samples, radius) -> ProblemSpec:
    if p.get("basis", "sine") == "scalar":
        basis = SpectralBasis.scalar(float(p["eigenvalue"]))
    else:
        if "size" in p:
            given = _number(p, "size", int, positive=True, name="problem.size")
            if given < size:
                raise ConfigError("problem.size", f"{given} modes, but the run needs {size}")
            size = given
        basis = SpectralBasis.sine(size, p.get("nodes"))
    schedule = ImpulseSchedule(tuple(p["rho"]), tuple(p["theta"]))
    forcing = _grid_map(_expression(p["forcing"], "forcing", "problem.forcing"))
    h1 = [_grid_map(_expression(s, "h1", f"problem.h1[{k}]"), k + 1) for k, s in enumerate(p.get("h1", []))]
    h2 = [_grid_map(_expression(s, "h2", f"problem.h2[{k}]"), k + 1) for k, s in enumerate(p.get("h2", []))]
    init = []
    for key in ("y0", "z0"):
        if key in p:
            e = _expression(p[key], key, f"problem.{key}")
            init.append(basis.expand(lambda xi, e=e: np.asarray(e(xi=xi), dtype=float), basis.size))
        else:
            init.append(ModalState.zeros(basis.size))
    declared = p.get("constants", {})
    q = schedule.q
    draft = ProblemSpec(basis, schedule, forcing, h1, h2, init[0], init[1],
                        ProblemConstants.zeros(q), alpha=alpha, name=p.get("name", "inline"))
    estimated = None
    if any(k not in declared for k in CONSTANT_KEYS):
        estimated = lipschitz_audit(draft, samples=samples, radius=radius, seed=seed)
    values = {}
    for key in CONSTANT_KEYS:
        if key in declared:
            values[key] = declared[key] if key in ("K1", "K2") else tuple(declared[key])
        else:
            values[key] = getattr(estimated, key)
    meta = {"estimated_constants": tuple(k for k in CONSTANT_KEYS if k not in declared)}
    return ProblemSpec(basis, schedule, forcing, h1, h2, init[0], init[1],
                       ProblemConstants(**values), alpha=alpha, name=draft.name, meta=meta)
