"""Eigenbasis representation of the positive self-adjoint operator ``A``.

States live in coefficient space, ``a_l = <v, psi_l>``.  Nonlinear maps are
applied on a physical collocation grid and brought back with a discrete inner
product (composite trapezoid), so the basis owns both the eigendata and the
quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Eigenfunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class AliasingError(ValueError):
    """Too few quadrature nodes for the requested number of modes."""


@dataclass(frozen=True)
class ModalState:
    """Coefficient vector of a state in ``span{psi_1 .. psi_n}``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def level(self) -> int:
        return self.coeffs.shape[0]

    def __len__(self):
        return self.level

    @classmethod
    def zeros(cls, n: int) -> "ModalState":
        return cls(np.zeros(n))


def project(state: ModalState, m: int) -> ModalState:
    """Truncate (or zero-pad) ``state`` to ``m`` modes."""
    if m < 1:
        raise ValueError(f"projection level must be >= 1, got {m}")
    out = np.zeros(m)
    k = min(m, state.level)
    out[:k] = state.coeffs[:k]
    return ModalState(out)


def pad(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Zero-pad/truncate the last axis of a coefficient array to ``m``."""
    coeffs = np.asarray(coeffs, dtype=float)
    out = np.zeros(coeffs.shape[:-1] + (m,))
    k = min(m, coeffs.shape[-1])
    out[..., :k] = coeffs[..., :k]
    return out


def weighted_norm(coeffs: np.ndarray, eigenvalues: np.ndarray, alpha: float) -> np.ndarray:
    """``(sum_l lambda_l^(2 alpha) a_l^2)^(1/2)`` along the last axis."""
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[-1]
    w = np.asarray(eigenvalues, dtype=float)[:n] ** (2.0 * alpha)
    return np.sqrt(np.sum(w * coeffs**2, axis=-1))


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenvalues, eigenfunctions and a quadrature rule on ``domain``.

    ``eigenfunction(l, xi)`` evaluates ``psi_l`` for 1-based mode indices
    ``l`` broadcast against the points ``xi``.
    """

    eigenvalues: np.ndarray
    eigenfunction: Eigenfunction
    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple[float, float]
    name: str = "custom"
    _psi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).reshape(-1)
        if lam.size == 0 or np.any(lam <= 0):
            raise ValueError("eigenvalues must be strictly positive")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be non-decreasing")
        nodes = np.array(self.nodes, dtype=float).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if nodes.shape != weights.shape:
            raise ValueError("nodes and weights differ in length")
        modes = np.arange(1, lam.size + 1)
        psi = np.asarray(self.eigenfunction(modes[None, :], nodes[:, None]), dtype=float)
        psi = np.broadcast_to(psi, (nodes.size, lam.size)).copy()
        for arr in (lam, nodes, weights, psi):
            arr.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_psi", psi)

    # -- constructors -----------------------------------------------------

    @classmethod
    def sine(cls, size: int, nodes: int | None = None) -> "SpectralBasis":
        """Dirichlet Laplacian on (0, pi): ``lambda_l = l^2``, ``psi_l = sqrt(2/pi) sin(l xi)``.

        ``nodes`` is the number of trapezoid intervals (default ``4 * size``);
        the grid includes both endpoints, where every ``psi_l`` vanishes.
        """
        if size < 1:
            raise ValueError("basis size must be >= 1")
        k = 4 * size if nodes is None else int(nodes)
        if k <= size:
            raise AliasingError(f"{k} intervals cannot resolve {size} sine modes")
        xi = np.linspace(0.0, np.pi, k + 1)
        w = np.full(k + 1, np.pi / k)
        w[0] = w[-1] = 0.5 * np.pi / k
        return cls(
            eigenvalues=np.arange(1, size + 1, dtype=float) ** 2,
            eigenfunction=_sine_eigenfunction,
            nodes=xi,
            weights=w,
            domain=(0.0, np.pi),
            name="sine",
        )

    @classmethod
    def scalar(cls, eigenvalue: float) -> "SpectralBasis":
        """One-mode basis for an ODE in R: ``psi_1 = 1`` on a degenerate domain."""
        return cls(
            eigenvalues=np.array([float(eigenvalue)]),
            eigenfunction=_unit_eigenfunction,
            nodes=np.array([0.0]),
            weights=np.array([1.0]),
            domain=(0.0, 0.0),
            name="scalar",
        )

    # -- basic properties -------------------------------------------------

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def node_count(self) -> int:
        return self.nodes.size

    def psi(self, n: int | None = None) -> np.ndarray:
        """Synthesis matrix ``psi_l(xi_k)`` of shape (nodes, n)."""
        n = self.size if n is None else n
        self._check_level(n)
        return self._psi[:, :n]

    def _check_level(self, n: int):
        if n > self.size:
            raise ValueError(f"level {n} exceeds basis size {self.size}")

    # -- transforms -------------------------------------------------------

    def to_grid(self, state: ModalState | np.ndarray) -> np.ndarray:
        """Synthesize grid values; accepts a state or a (..., n) coefficient array."""
        c = state.coeffs if isinstance(state, ModalState) else np.asarray(state, dtype=float)
        return c @ self.psi(c.shape[-1]).T

    def from_grid_array(self, values: np.ndarray, n: int) -> np.ndarray:
        """Discrete inner products ``sum_k w_k v_k psi_l(xi_k)`` along the last axis."""
        if self.node_count < n:
            raise AliasingError(f"{self.node_count} nodes cannot resolve {n} modes")
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.node_count:
            raise ValueError("grid values do not match the quadrature nodes")
        return (values * self.weights) @ self.psi(n)

    def from_grid(self, values: np.ndarray, n: int) -> ModalState:
        return ModalState(self.from_grid_array(values, n))

    def fractional_norm(self, state: ModalState | np.ndarray, alpha: float) -> float | np.ndarray:
        """``||A^alpha v||``; vectorized over leading axes of an array argument."""
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        c = state.coeffs if isinstance(state, ModalState) else np.asarray(state, dtype=float)
        self._check_level(c.shape[-1])
        out = weighted_norm(c, self.eigenvalues, alpha)
        return float(out) if out.ndim == 0 else out

    def grid_norm(self, values: np.ndarray) -> np.ndarray:
        """Discrete L2 norm of grid values along the last axis."""
        values = np.asarray(values, dtype=float)
        return np.sqrt(np.sum(self.weights * values**2, axis=-1))

    def expand(self, func: Callable[[np.ndarray], np.ndarray], n: int, resolution: int = 8192) -> ModalState:
        """Project a function of ``xi`` onto ``n`` modes with a fine auxiliary grid.

        Initial data are expanded independently of the working collocation grid;
        the scalar basis just samples ``func`` at its single node.
        """
        self._check_level(n)
        if self.name != "sine":
            return self.from_grid(np.broadcast_to(func(self.nodes), self.nodes.shape), n)
        fine = SpectralBasis.sine(n, nodes=max(resolution, 8 * n))
        vals = np.broadcast_to(np.asarray(func(fine.nodes), dtype=float), fine.nodes.shape)
        return fine.from_grid(vals, n)

    def orthonormality_residual(self, n: int | None = None) -> float:
        """``max_ij |<psi_i, psi_j>_h - delta_ij|`` under the discrete inner product."""
        p = self.psi(n)
        gram = (p * self.weights[:, None]).T @ p
        return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def _sine_eigenfunction(l, xi):
    return np.sqrt(2.0 / np.pi) * np.sin(l * xi)


def _unit_eigenfunction(l, xi):
    return np.ones(np.broadcast_shapes(np.shape(l), np.shape(xi)))
