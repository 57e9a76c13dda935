"""Spectral Faedo-Galerkin solver for second-order equations with non-instantaneous impulses."""

from .analysis import (
    ConstantLedger,
    ConvergenceReport,
    check_contraction,
    coefficient_convergence,
    compute_constants,
    convergence_study,
)
from .oracle import integrate
from .problem import (
    ImpulseSchedule,
    IntervalKind,
    ProblemConstants,
    ProblemSpec,
    builtin_example_61,
    builtin_example_62,
    builtin_example_63,
)
from .propagators import ModalPropagator, apply_a_sine, apply_cosine, apply_sine
from .solver import SolverConfig, Trajectory, solve
from .spectral import ModalState, SpectralBasis, project

__version__ = "0.1.0"

__all__ = [
    "ConstantLedger", "ConvergenceReport", "ImpulseSchedule", "IntervalKind", "ModalPropagator",
    "ModalState", "ProblemConstants", "ProblemSpec", "SolverConfig", "SpectralBasis", "Trajectory",
    "apply_a_sine", "apply_cosine", "apply_sine", "builtin_example_61", "builtin_example_62",
    "builtin_example_63", "check_contraction", "coefficient_convergence", "compute_constants",
    "convergence_study", "integrate", "project", "solve",
]
