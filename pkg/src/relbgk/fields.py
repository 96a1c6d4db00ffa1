"""Eckart matching and the Jüttner local equilibrium."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DomainError, MatchingError, OutOfRangeError
from .grid import AXISYMMETRIC, DistField, MomentumGrid, Moments, moment_vector
from .specfun import invert_k_ratio, k_ratio, m_of_beta

__all__ = [
    "MacroFields",
    "MacroProfile",
    "eckart_fields",
    "eckart_profile",
    "juttner_eval",
    "juttner_values",
    "juttner_field",
    "exponent_floor",
]

MATCH_TOL = 1e-12


@dataclass(frozen=True)
class MacroFields:
    """Proper density, spatial velocity, inverse-energy ratio and inverse temperature."""

    n: float
    u: tuple[float, float, float]
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.n > 0:
            raise DomainError(f"density must be positive, got {self.n}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        object.__setattr__(self, "u", tuple(float(c) for c in self.u))

    @classmethod
    def from_beta(cls, n: float, u, beta: float) -> "MacroFields":
        u = tuple(u) if np.ndim(u) else (float(u), 0.0, 0.0)
        return cls(float(n), u, k_ratio(beta), float(beta))

    @property
    def speed(self) -> float:
        return math.sqrt(sum(c * c for c in self.u))

    @property
    def gamma(self) -> float:
        return math.sqrt(1.0 + self.speed**2)


@dataclass(frozen=True)
class MacroProfile:
    """Macroscopic fields at every slab node (arrays of length ``Nx``)."""

    n: np.ndarray
    u: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __getitem__(self, j: int) -> MacroFields:
        return MacroFields(float(self.n[j]), tuple(self.u[j]), float(self.alpha[j]), float(self.beta[j]))

    def __len__(self) -> int:
        return len(self.n)


def _match(N0: float, N: np.ndarray, S1: float, beta_guess=None):
    if not N0 > 0:
        raise DegeneracyError(f"N0 = {N0:.3e} is not positive")
    n2 = N0 * N0 - float(np.dot(N, N))
    if not n2 > 0:
        raise DegeneracyError(f"four-flow not timelike: N0^2 - |N|^2 = {n2:.3e}")
    n = math.sqrt(n2)
    u = np.asarray(N, dtype=float) / n
    alpha = S1 / n
    if not 0.0 < alpha < 1.0:
        raise MatchingError(f"alpha = {alpha!r} outside (0, 1)")
    try:
        beta = invert_k_ratio(alpha, MATCH_TOL, bracket=beta_guess)
    except OutOfRangeError as exc:
        raise MatchingError(str(exc)) from exc
    return n, u, alpha, beta


def eckart_fields(m: Moments) -> MacroFields:
    """Map one slice's moments to ``(n, u, alpha, beta)``.

    ``n^2 = N0^2 - |N|^2``, ``u = N/n``, ``alpha = S1/n`` and ``beta`` solves
    ``K1/K2(beta) = alpha``.

    Raises
    ------
    DegeneracyError
        ``N0^2 <= |N|^2``.
    MatchingError
        ``alpha`` outside (0, 1) or beyond the inversion cap.
    """
    n, u, alpha, beta = _match(float(m.N0), np.asarray(m.N, dtype=float), float(m.S1))
    return MacroFields(n, tuple(u), alpha, beta)


def eckart_profile(m: Moments, beta_guess: np.ndarray | None = None) -> MacroProfile:
    """Slab-wise :func:`eckart_fields`; errors carry the failing slab index.

    ``beta_guess`` (one per node) narrows the inversion bracket, which only
    affects speed.
    """
    N0 = np.atleast_1d(m.N0)
    N = np.atleast_2d(m.N)
    S1 = np.atleast_1d(m.S1)
    nx = N0.size
    n = np.empty(nx)
    u = np.empty((nx, 3))
    alpha = np.empty(nx)
    beta = np.empty(nx)
    for j in range(nx):
        guess = None if beta_guess is None else float(beta_guess[j])
        try:
            n[j], u[j], alpha[j], beta[j] = _match(float(N0[j]), N[j], float(S1[j]), guess)
        except DegeneracyError as exc:
            raise DegeneracyError(str(exc), index=j) from exc
        except MatchingError as exc:
            raise MatchingError(str(exc), index=j) from exc
    return MacroProfile(n, u, alpha, beta)


def _boost_exponent(u: np.ndarray, grid: MomentumGrid) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if grid.mode == AXISYMMETRIC and (u[1] != 0.0 or u[2] != 0.0):
        raise DomainError("axisymmetric grids need the velocity along q1")
    gamma = math.sqrt(1.0 + float(u @ u))
    return gamma * grid.q0 - (u[0] * grid.q1 + u[1] * grid.q2 + u[2] * grid.q3)


def juttner_values(mf: MacroFields, grid: MomentumGrid) -> np.ndarray:
    """``J(q_k) = n / M(beta) * exp(-beta (gamma q0 - u.q))`` at every node."""
    expo = _boost_exponent(np.asarray(mf.u), grid)
    return mf.n / m_of_beta(mf.beta) * np.exp(-mf.beta * expo)


def juttner_eval(mf: MacroFields, q) -> float:
    """Jüttner value at a single momentum ``q`` (3-vector)."""
    q = np.asarray(q, dtype=float)
    q0 = math.sqrt(1.0 + float(q @ q))
    expo = mf.gamma * q0 - float(np.dot(mf.u, q))
    return mf.n / m_of_beta(mf.beta) * math.exp(-mf.beta * expo)


def exponent_floor(speed: float) -> float:
    """``h(|u|) = sqrt(1+|u|^2) - |u|``: lower bound of ``(gamma q0 - u.q)/q0``."""
    return math.sqrt(1.0 + speed * speed) - speed


def juttner_field(f: DistField, beta_guess: np.ndarray | None = None, return_profile: bool = False):
    """Local equilibrium ``J_f`` at every slab node.

    Returns the :class:`DistField` (and the :class:`MacroProfile` if
    ``return_profile``).
    """
    grid = f.momentum
    prof = eckart_profile(moment_vector(f.values, grid), beta_guess)
    out = np.empty_like(f.values)
    norm = prof.n / np.array([m_of_beta(b) for b in prof.beta])
    gamma = np.sqrt(1.0 + np.sum(prof.u**2, axis=1))
    udotq = np.outer(prof.u[:, 0], grid.q1) + np.outer(prof.u[:, 1], grid.q2) + np.outer(prof.u[:, 2], grid.q3)
    expo = gamma[:, None] * grid.q0[None, :] - udotq
    np.multiply(norm[:, None], np.exp(-prof.beta[:, None] * expo), out=out)
    field = f.with_values(out)
    return (field, prof) if return_profile else field
