"""Cosine and sine families of ``-A`` acting diagonally on modal coefficients.

For an eigenvalue ``lam`` with frequency ``w = sqrt(lam)``::

    C(t)      -> cos(w t)
    S(t)      -> sin(w t) / w
    A^b S(t)  -> lam^(b - 1/2) sin(w t)

Duhamel convolutions ``int_0^t S(t - s) f(s) ds`` are accumulated in rotation
form: running trapezoid sums of ``cos(w s) f(s)`` and ``sin(w s) f(s)`` are
recombined with the angle-difference identity, which costs O(steps) for a
whole time series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import ModalState


@dataclass(frozen=True)
class ModalPropagator:
    """Scalar multipliers of ``C``, ``S`` and ``A^beta S`` for one or many eigenvalues."""

    eigenvalue: float | np.ndarray

    @property
    def omega(self):
        return np.sqrt(self.eigenvalue)

    def cosine(self, t):
        return np.cos(self.omega * t)

    def sine(self, t):
        w = self.omega
        return np.sin(w * t) / w

    def a_sine(self, beta: float, t):
        lam = np.asarray(self.eigenvalue, dtype=float)
        return lam ** (beta - 0.5) * np.sin(np.sqrt(lam) * t)


def _multiplier_input(state: ModalState, eigenvalues) -> tuple[np.ndarray, ModalPropagator]:
    lam = np.asarray(eigenvalues, dtype=float)[: state.level]
    if lam.size < state.level:
        raise ValueError("not enough eigenvalues for the state level")
    return state.coeffs, ModalPropagator(lam)


def apply_cosine(state: ModalState, t: float, eigenvalues) -> ModalState:
    c, prop = _multiplier_input(state, eigenvalues)
    return ModalState(prop.cosine(t) * c)


def apply_sine(state: ModalState, t: float, eigenvalues) -> ModalState:
    c, prop = _multiplier_input(state, eigenvalues)
    return ModalState(prop.sine(t) * c)


def apply_a_sine(state: ModalState, beta: float, t: float, eigenvalues) -> ModalState:
    """``A^beta S(t)``; ``beta = 1`` is the operator ``A S(t)``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    c, prop = _multiplier_input(state, eigenvalues)
    return ModalState(prop.a_sine(beta, t) * c)


@dataclass(frozen=True)
class DuhamelAccumulator:
    """Running integrals ``I_cos = int cos(w s) f(s) ds`` and ``I_sin`` from time 0."""

    eigenvalues: np.ndarray
    i_cos: np.ndarray
    i_sin: np.ndarray
    t_current: float = 0.0

    @classmethod
    def start(cls, eigenvalues) -> "DuhamelAccumulator":
        lam = np.asarray(eigenvalues, dtype=float)
        return cls(lam, np.zeros_like(lam), np.zeros_like(lam), 0.0)

    @property
    def omega(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    def value(self, t: float | None = None) -> np.ndarray:
        """``int_0^{t_current} S(t - s) f(s) ds``, evaluated at ``t >= t_current``."""
        t = self.t_current if t is None else t
        w = self.omega
        return (np.sin(w * t) * self.i_cos - np.cos(w * t) * self.i_sin) / w

    def velocity(self, t: float | None = None) -> np.ndarray:
        """``int_0^{t_current} C(t - s) f(s) ds``."""
        t = self.t_current if t is None else t
        w = self.omega
        return np.cos(w * t) * self.i_cos + np.sin(w * t) * self.i_sin


def duhamel_advance(
    acc: DuhamelAccumulator, f_prev: ModalState, f_next: ModalState, dt: float
) -> DuhamelAccumulator:
    """One trapezoid step of the rotation-form Duhamel integral."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if f_prev.level != f_next.level or f_prev.level != acc.eigenvalues.size:
        raise ValueError("forcing samples and accumulator differ in level")
    w = acc.omega
    t0, t1 = acc.t_current, acc.t_current + dt
    half = 0.5 * dt
    i_cos = acc.i_cos + half * (np.cos(w * t0) * f_prev.coeffs + np.cos(w * t1) * f_next.coeffs)
    i_sin = acc.i_sin + half * (np.sin(w * t0) * f_prev.coeffs + np.sin(w * t1) * f_next.coeffs)
    return DuhamelAccumulator(acc.eigenvalues, i_cos, i_sin, t1)


def duhamel_series(
    eigenvalues: np.ndarray, tau: np.ndarray, f: np.ndarray, *, cos_wt=None, sin_wt=None
) -> tuple[np.ndarray, np.ndarray]:
    """Duhamel value and its time derivative at every node of ``tau``.

    ``tau`` starts at 0 and ``f`` has shape (len(tau), n).  The arithmetic is
    the same trapezoid rule as :func:`duhamel_advance`, accumulated with
    ``cumsum``.  Returns ``(int S(t-s) f ds, int C(t-s) f ds)``.
    """
    tau = np.asarray(tau, dtype=float)
    f = np.asarray(f, dtype=float)
    w = np.sqrt(np.asarray(eigenvalues, dtype=float)[: f.shape[1]])
    if cos_wt is None:
        phase = np.outer(tau, w)
        cos_wt, sin_wt = np.cos(phase), np.sin(phase)
    half_dt = 0.5 * np.diff(tau)[:, None]
    gc = cos_wt * f
    gs = sin_wt * f
    i_cos = np.zeros_like(f)
    i_sin = np.zeros_like(f)
    i_cos[1:] = np.cumsum(half_dt * (gc[:-1] + gc[1:]), axis=0)
    i_sin[1:] = np.cumsum(half_dt * (gs[:-1] + gs[1:]), axis=0)
    value = (sin_wt * i_cos - cos_wt * i_sin) / w
    velocity = cos_wt * i_cos + sin_wt * i_sin
    return value, velocity
