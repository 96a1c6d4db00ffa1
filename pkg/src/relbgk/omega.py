"""Membership checks for the invariant solution set.

A distribution belongs to the set when, at every slab node,

* ``f >= 0``,
* ``int f / q0^2 dq >= a_l``,
* ``int f dq <= a_u``,
* ``K1/K2(beta) = (1/n) int f / q0 dq <= sqrt(lambda)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DistField, MomentumGrid, moment_vector

__all__ = ["OmegaCheck", "check_omega", "check_omega_slices"]

CONDITIONS = ("nonnegative", "lower_density", "upper_mass", "ratio_cap")

# flags tolerate round-off of this relative size; margins are reported raw
RTOL = 1e-12


@dataclass
class OmegaCheck:
    """Per-node flags and margins (positive margin = condition satisfied)."""

    flags: dict[str, np.ndarray]
    margins: dict[str, np.ndarray]

    @property
    def passed(self) -> bool:
        return all(bool(np.all(v)) for v in self.flags.values())

    @property
    def node_passed(self) -> np.ndarray:
        return np.logical_and.reduce([self.flags[c] for c in CONDITIONS])

    def worst(self) -> dict[str, float]:
        return {c: float(np.min(self.margins[c])) for c in CONDITIONS}

    def failing(self) -> list[str]:
        return [c for c in CONDITIONS if not np.all(self.flags[c])]

    def summary(self) -> dict:
        return {
            "passed": self.passed,
            "worst_margin": self.worst(),
            "failing": self.failing(),
        }


def check_omega_slices(values: np.ndarray, grid: MomentumGrid, a_l: float, a_u: float, lam: float) -> OmegaCheck:
    """Check the four conditions for momentum slices ``values`` (shape ``(m, Nq)``)."""
    f = np.atleast_2d(np.asarray(values, dtype=float))
    m = moment_vector(f, grid, check_sign=False)
    N0 = np.atleast_1d(m.N0)
    S1 = np.atleast_1d(m.S1)
    S2 = np.atleast_1d(m.S2)
    N = np.atleast_2d(m.N)
    scale = np.max(np.abs(f), axis=1) if f.size else np.zeros(0)

    nonneg = np.min(f, axis=1)
    lower = S2 - a_l
    upper = a_u - N0
    n2 = N0**2 - np.sum(N**2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(n2 > 0, S1 / np.sqrt(np.where(n2 > 0, n2, 1.0)), np.inf)
    cap = math.sqrt(lam)
    ratio = cap - alpha

    flags = {
        "nonnegative": nonneg >= -RTOL * scale,
        "lower_density": lower >= -RTOL * a_l,
        "upper_mass": upper >= -RTOL * a_u,
        "ratio_cap": ratio >= -RTOL * cap,
    }
    margins = {
        "nonnegative": nonneg,
        "lower_density": lower,
        "upper_mass": upper,
        "ratio_cap": ratio,
    }
    return OmegaCheck(flags, margins)


def check_omega(f: DistField, pc) -> OmegaCheck:
    """Evaluate the membership conditions at every slab node of ``f``.

    ``pc`` is any object with ``a_l``, ``a_u`` and ``lam`` attributes
    (normally :class:`relbgk.analysis.ProblemConstants`). Never raises on a
    failing condition; inspect the returned flags.
    """
    return check_omega_slices(f.values, f.momentum, pc.a_l, pc.a_u, pc.lam)
