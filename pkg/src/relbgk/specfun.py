"""Modified Bessel functions of the second kind and the K1/K2 machinery.

All Bessel values are computed from the integral representations in the
``x = sinh r`` variable,

    K0(b) = int_0^inf exp(-b sqrt(1+x^2)) / sqrt(1+x^2) dx
    K1(b) = int_0^inf exp(-b sqrt(1+x^2)) dx
    K2(b) = int_0^inf (2x^2+1) / sqrt(1+x^2) exp(-b sqrt(1+x^2)) dx

evaluated in exponentially scaled form (the factor ``exp(-b)`` is pulled
out) with composite Gauss-Legendre panels. Nothing here touches
``scipy.special``; the test-suite uses mpmath as an independent oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, OutOfRangeError

__all__ = [
    "BetaInterval",
    "BesselUnderflowWarning",
    "DomainError",
    "OutOfRangeError",
    "BETA_CAP",
    "bessel_k",
    "bessel_k_scaled",
    "m_of_beta",
    "mean_energy",
    "k_ratio",
    "k_ratio_prime",
    "ell",
    "invert_k_ratio",
]

BETA_CAP = 1.0e6

_GL_ORDER = 24
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
_REFINE_RTOL = 1e-13
_MAX_REFINE = 6
_LOG_TINY = math.log(np.finfo(float).tiny)


class BesselUnderflowWarning(RuntimeWarning):
    """K_i(beta) underflows double precision and was returned as 0."""


@dataclass(frozen=True)
class BetaInterval:
    """Closed inverse-temperature bracket ``[beta_l, beta_u]``."""

    beta_l: float
    beta_u: float

    def __post_init__(self):
        if not (0.0 < self.beta_l <= self.beta_u < math.inf):
            raise DomainError(
                f"invalid beta bracket [{self.beta_l}, {self.beta_u}]"
            )

    @property
    def degenerate(self) -> bool:
        return self.beta_l == self.beta_u

    def grid(self, n: int = 401) -> np.ndarray:
        if self.degenerate:
            return np.array([self.beta_l])
        return np.linspace(self.beta_l, self.beta_u, n)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0.0 or not math.isfinite(beta):
        raise DomainError(f"beta must be positive and finite, got {beta}")
    return beta


def _shifted_exp(x: np.ndarray, beta: float) -> np.ndarray:
    # exp(-beta (sqrt(1+x^2) - 1)) without cancellation near x = 0
    s = np.sqrt(1.0 + x * x)
    return np.exp(-beta * (x * x) / (s + 1.0))


def _panel_edges(beta: float) -> np.ndarray:
    # geometric panels [0, s], [s, 2s], [2s, 4s], ... until the integrand
    # (at most cubic growth times exp(-beta (sqrt(1+x^2)-1))) is below 1e-21
    s = min(1.0, 1.0 / math.sqrt(beta))
    edges = [0.0, s]
    b = s
    while b <= 4.0 * s or beta * (math.sqrt(1.0 + b * b) - 1.0) - 3.0 * math.log1p(b) < 48.0:
        b *= 2.0
        edges.append(b)
    return np.asarray(edges)


def _nodes(edges: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    # split every panel into m equal Gauss sub-panels
    t = np.linspace(0.0, 1.0, m + 1)
    sub = (edges[:-1, None] + np.diff(edges)[:, None] * t[None, :])
    lo = sub[:, :-1].ravel()
    half = 0.5 * (sub[:, 1:] - sub[:, :-1]).ravel()
    x = ((lo + half)[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _half_lines(factors, beta: float) -> tuple[float, ...]:
    """``int_0^inf factor(x) exp(-beta (sqrt(1+x^2)-1)) dx`` for each factor.

    Panels are tied to the width of the integrand's peak; each is split into
    ``m`` Gauss sub-panels and ``m`` is doubled until two passes agree.
    """
    edges = _panel_edges(beta)
    prev = None
    m = 1
    for _ in range(_MAX_REFINE):
        x, w = _nodes(edges, m)
        ew = w * _shifted_exp(x, beta)
        totals = tuple(float(ew @ f(x)) for f in factors)
        if prev is not None and all(
            abs(t - p) <= _REFINE_RTOL * abs(t) for t, p in zip(totals, prev)
        ):
            return totals
        prev = totals
        m *= 2
    return totals


def _half_line(factor, beta: float) -> float:
    return _half_lines((factor,), beta)[0]


_FACTORS = {
    0: lambda x: 1.0 / np.sqrt(1.0 + x * x),
    1: lambda x: np.ones_like(x),
    2: lambda x: (2.0 * x * x + 1.0) / np.sqrt(1.0 + x * x),
}


@lru_cache(maxsize=8192)
def bessel_k_scaled(order: int, beta: float) -> float:
    """Return ``exp(beta) * K_order(beta)``; never overflows or underflows."""
    if order not in _FACTORS:
        raise DomainError(f"order must be 0, 1 or 2, got {order}")
    beta = _check_beta(beta)
    return _half_line(_FACTORS[order], beta)


def bessel_k(order: int, beta: float) -> float:
    """Modified Bessel function of the second kind ``K_order(beta)``.

    Parameters
    ----------
    order : int
        0, 1 or 2.
    beta : float
        Positive argument.

    Returns
    -------
    float
        ``K_order(beta)``. If the value is below the smallest normal double a
        :class:`BesselUnderflowWarning` is issued and 0.0 is returned.
    """
    beta = _check_beta(beta)
    scaled = bessel_k_scaled(order, beta)
    log_val = math.log(scaled) - beta
    if log_val < _LOG_TINY:
        warnings.warn(
            f"K_{order}({beta}) underflows; returning 0",
            BesselUnderflowWarning,
            stacklevel=2,
        )
        return 0.0
    return math.exp(log_val)


@lru_cache(maxsize=65536)
def _m_scaled(beta: float) -> float:
    return 4.0 * math.pi * _half_line(lambda r: r * r, beta)


def m_of_beta(beta: float) -> float:
    """Jüttner normalisation ``M(beta) = int_{R^3} exp(-beta sqrt(1+|p|^2)) dp``.

    Evaluated by direct radial quadrature; ``4 pi K2(beta) / beta`` is an
    identity and is used only as a cross-check by the tests.
    """
    beta = _check_beta(beta)
    return _m_scaled(beta) * math.exp(-beta)


def mean_energy(beta: float) -> float:
    """Equilibrium mean energy ``-M'(beta)/M(beta)`` by radial quadrature."""
    beta = _check_beta(beta)
    num = _half_line(lambda r: r * r * np.sqrt(1.0 + r * r), beta)
    return 4.0 * math.pi * num / _m_scaled(beta)


@lru_cache(maxsize=65536)
def _k_ratio(beta: float) -> float:
    k1, k2 = _half_lines((_FACTORS[1], _FACTORS[2]), beta)
    return k1 / k2


def k_ratio(beta: float) -> float:
    """``K1(beta)/K2(beta)``, strictly increasing from 0 to 1."""
    return _k_ratio(_check_beta(beta))


def k_ratio_prime(beta: float) -> float:
    """Closed-form derivative ``(3/beta) r + r^2 - 1`` with ``r = K1/K2``."""
    r = k_ratio(beta)
    return 3.0 / beta * r + r * r - 1.0


def ell(beta: float) -> float:
    """Piecewise lower bound for ``k_ratio_prime`` (discontinuous at 2)."""
    beta = _check_beta(beta)
    if beta < 2.0:
        return (2.0 - beta) / (beta + 2.0) ** 2
    num = 3.0 * (6656.0 * beta**4 + 2419.0 * beta**3 + 726.0)
    den = (128.0 * beta**3 + 240.0 * beta**2 + 105.0 * beta - 66.0) ** 2
    return num / den


def invert_k_ratio(
    alpha: float,
    tol: float = 1e-12,
    beta_cap: float = BETA_CAP,
    bracket: float | None = None,
) -> float:
    """Solve ``k_ratio(beta) = alpha`` for ``beta``.

    Bracket [1e-4, 1e4] (expanded geometrically as needed), bisection to a
    width of 1e-3, then Newton steps with ``k_ratio_prime`` kept inside the
    bracket. Newton continues past ``tol`` until the step stalls so the
    result is as accurate as ``k_ratio`` itself. A ``bracket`` guess
    replaces the initial bracket by ``[guess/1.5, 1.5*guess]``; expansion
    still applies, so a poor guess costs time but not correctness.

    Raises
    ------
    DomainError
        ``alpha`` not in (0, 1).
    OutOfRangeError
        The root lies above ``beta_cap`` (near-cold limit).
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if tol <= 0.0:
        raise DomainError("tol must be positive")

    if bracket is not None and 0.0 < bracket < beta_cap:
        lo, hi = bracket / 1.5, min(bracket * 1.5, beta_cap)
    else:
        lo, hi = 1e-4, 1e4
    while k_ratio(lo) > alpha:
        hi = lo
        lo *= 0.1
        if lo < 1e-300:
            raise DomainError(f"cannot bracket alpha={alpha}")
    while k_ratio(hi) < alpha:
        lo = hi
        hi *= 10.0
        if hi > beta_cap:
            if k_ratio(beta_cap) < alpha:
                raise OutOfRangeError(
                    f"alpha={alpha} requires beta > cap {beta_cap:g}"
                )
            hi = beta_cap

    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if k_ratio(mid) < alpha:
            lo = mid
        else:
            hi = mid

    beta = 0.5 * (lo + hi)
    for _ in range(60):
        resid = k_ratio(beta) - alpha
        if resid < 0.0:
            lo = beta
        elif resid > 0.0:
            hi = beta
        step = resid / k_ratio_prime(beta)
        new = beta - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if abs(new - beta) <= 4.0 * np.finfo(float).eps * beta:
            beta = new
            break
        beta = new
    if abs(k_ratio(beta) - alpha) > tol:
        raise OutOfRangeError(
            f"inversion of alpha={alpha} stalled at |resid|="
            f"{abs(k_ratio(beta) - alpha):.3e} > tol={tol:g}"
        )
    return beta
