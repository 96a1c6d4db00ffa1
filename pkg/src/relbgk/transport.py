"""Inflow boundary data and the mild-solution operator on the slab."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import LinearNDInterpolator

from .errors import ConfigurationError, DomainError
from .fields import MacroFields, juttner_field, juttner_values
from .grid import AXISYMMETRIC, DistField, MomentumGrid, SlabGrid, integrate_q

__all__ = [
    "BoundaryData",
    "JuttnerSide",
    "load_boundary_csv",
    "write_boundary_csv",
    "attenuated_boundary",
    "kernel_term",
    "apply_phi",
    "kernel_moment",
    "cell_weights",
]

PARAMETRIC = "parametric_juttner"
TABULATED = "tabulated"

_SERIES_Z = 0.1
_ASYMPTOTIC_Z = 700.0


@dataclass(frozen=True)
class JuttnerSide:
    """Jüttner inflow profile ``n/M(beta) exp(-beta(gamma q0 - u.q))``."""

    n: float
    u: tuple[float, float, float]
    beta: float

    def __post_init__(self):
        u = self.u
        u = (float(u), 0.0, 0.0) if np.ndim(u) == 0 else tuple(float(c) for c in u)
        object.__setattr__(self, "u", u)
        if not (self.n > 0 and self.beta > 0):
            raise ConfigurationError(f"inflow Jüttner needs n > 0 and beta > 0, got {self}")

    def values(self, grid: MomentumGrid) -> np.ndarray:
        mf = MacroFields.from_beta(self.n, self.u, self.beta)
        return juttner_values(mf, grid)


@dataclass(frozen=True)
class _Table:
    points: np.ndarray  # (m, 2) as (q1, q_perp) or (m, 3) as (q1, q2, q3)
    values: np.ndarray

    def evaluate(self, grid: MomentumGrid) -> np.ndarray:
        if self.points.shape[1] == 2:
            targets = np.column_stack([grid.q1, grid.q_perp])
        elif grid.mode == AXISYMMETRIC:
            raise ConfigurationError("tabulated (q1, q2, q3) data need a full3d grid")
        else:
            targets = np.column_stack([grid.q1, grid.q2, grid.q3])
        interp = LinearNDInterpolator(self.points, self.values, fill_value=0.0)
        out = interp(targets)
        return np.clip(np.nan_to_num(out, nan=0.0), 0.0, None)


@dataclass(frozen=True)
class BoundaryData:
    """Inflow data ``f_L`` (used on q1 > 0) and ``f_R`` (used on q1 < 0).

    Build with :meth:`juttner` or :func:`load_boundary_csv`.
    """

    kind: str
    left: Optional[JuttnerSide] = None
    right: Optional[JuttnerSide] = None
    table_left: Optional[_Table] = field(default=None, repr=False)
    table_right: Optional[_Table] = field(default=None, repr=False)

    @classmethod
    def juttner(cls, left: JuttnerSide, right: JuttnerSide) -> "BoundaryData":
        return cls(PARAMETRIC, left=left, right=right)

    def side_values(self, grid: MomentumGrid) -> tuple[np.ndarray, np.ndarray]:
        """``f_L`` and ``f_R`` at every node, before half-space restriction."""
        if self.kind == PARAMETRIC:
            return self.left.values(grid), self.right.values(grid)
        if self.kind == TABULATED:
            return self.table_left.evaluate(grid), self.table_right.evaluate(grid)
        raise ConfigurationError(f"unknown boundary kind {self.kind!r}")

    def f_lr(self, grid: MomentumGrid) -> np.ndarray:
        """``f_L 1_{q1>0} + f_R 1_{q1<0}``."""
        fl, fr = self.side_values(grid)
        out = np.where(grid.q1 > 0, fl, fr)
        if np.any(out < 0) or not np.all(np.isfinite(out)):
            raise ConfigurationError("inflow data must be finite and nonnegative")
        return out

    def scaled(self, factor: float) -> "BoundaryData":
        if self.kind == PARAMETRIC:
            return BoundaryData.juttner(
                JuttnerSide(self.left.n * factor, self.left.u, self.left.beta),
                JuttnerSide(self.right.n * factor, self.right.u, self.right.beta),
            )
        return BoundaryData(
            TABULATED,
            table_left=_Table(self.table_left.points, self.table_left.values * factor),
            table_right=_Table(self.table_right.points, self.table_right.values * factor),
        )


def load_boundary_csv(path) -> BoundaryData:
    """Read tabulated inflow data.

    The CSV has a header with ``side`` plus either ``q1,q_perp,value`` or
    ``q1,q2,q3,value``. Rows with ``side = L`` form the left block and must
    have ``q1 > 0``; ``side = R`` rows must have ``q1 < 0``. Values must be
    nonnegative.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in (reader.fieldnames or [])]
        if {"side", "q1", "q_perp", "value"} <= set(cols):
            qcols = ["q1", "q_perp"]
        elif {"side", "q1", "q2", "q3", "value"} <= set(cols):
            qcols = ["q1", "q2", "q3"]
        else:
            raise ConfigurationError(
                f"{path}: expected columns side,q1,q_perp,value or side,q1,q2,q3,value"
            )
        blocks = {"L": [], "R": []}
        for lineno, row in enumerate(reader, start=2):
            row = {k.strip(): v for k, v in row.items()}
            side = row["side"].strip().upper()
            if side not in blocks:
                raise ConfigurationError(f"{path}:{lineno}: side must be L or R")
            try:
                q = [float(row[c]) for c in qcols]
                val = float(row["value"])
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"{path}:{lineno}: {exc}") from exc
            if not (math.isfinite(val) and val >= 0):
                raise ConfigurationError(f"{path}:{lineno}: value must be finite and >= 0")
            if side == "L" and not q[0] > 0:
                raise ConfigurationError(f"{path}:{lineno}: left data need q1 > 0")
            if side == "R" and not q[0] < 0:
                raise ConfigurationError(f"{path}:{lineno}: right data need q1 < 0")
            if len(qcols) == 2 and q[1] < 0:
                raise ConfigurationError(f"{path}:{lineno}: q_perp must be >= 0")
            blocks[side].append(q + [val])

    tables = {}
    for side, rows in blocks.items():
        if len(rows) < len(qcols) + 1:
            raise ConfigurationError(f"{path}: too few rows for side {side}")
        arr = np.asarray(rows, dtype=float)
        tables[side] = _Table(arr[:, :-1], arr[:, -1])
    return BoundaryData(TABULATED, table_left=tables["L"], table_right=tables["R"])


def write_boundary_csv(b: BoundaryData, grid: MomentumGrid, path) -> None:
    """Tabulate ``b`` on the nodes of ``grid`` in the format read by :func:`load_boundary_csv`."""
    fl, fr = b.side_values(grid)
    axis = grid.mode == AXISYMMETRIC
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["side", "q1", "q_perp", "value"] if axis else ["side", "q1", "q2", "q3", "value"])
        for side, mask, vals in (("L", grid.q1 > 0, fl), ("R", grid.q1 < 0, fr)):
            for k in np.flatnonzero(mask):
                q = [grid.q1[k], grid.q_perp[k]] if axis else [grid.q1[k], grid.q2[k], grid.q3[k]]
                writer.writerow([side] + [repr(float(c)) for c in q] + [repr(float(vals[k]))])


def attenuated_boundary(b: BoundaryData, w: float, slab: SlabGrid, grid: MomentumGrid, f_lr=None) -> np.ndarray:
    """``e^{-w x/|q1|} f_L`` on q1 > 0 and ``e^{-w (1-x)/|q1|} f_R`` on q1 < 0.

    Returns an array of shape ``(slab.size, grid.size)``.
    """
    if w < 0:
        raise DomainError(f"collision frequency must be >= 0, got {w}")
    if f_lr is None:
        f_lr = b.f_lr(grid)
    depth = np.where(grid.q1[None, :] > 0, slab.x[:, None], 1.0 - slab.x[:, None])
    return np.exp(-w * depth / np.abs(grid.q1)[None, :]) * f_lr[None, :]


def cell_weights(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact weights for ``c int_0^h e^{-c s} J(x - s) ds`` with ``J`` linear on the cell.

    With ``z = c h`` the integral equals ``a J(x) + b J(x - h)``. Returns
    ``(decay, a, b)`` where ``decay = e^{-z}``; all three are nonnegative.
    """
    z = np.asarray(z, dtype=float)
    decay = np.empty_like(z)
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)

    small = z < _SERIES_Z
    big = z > _ASYMPTOTIC_Z
    mid = ~(small | big)

    zs = z[small]
    # phi1 = sum_{k>=1} (-1)^{k+1} z^k/k!,  phi2 = sum_{k>=2} (-1)^k (k-1) z^{k-1}/k!
    t = zs.copy()
    p1 = zs.copy()
    p2 = np.zeros_like(zs)
    for k in range(2, 18):
        t = t * (-zs) / k
        p1 = p1 + t
        p2 = p2 - (k - 1) * t / np.where(zs > 0, zs, 1.0)
    p2 = np.where(zs > 0, p2, 0.0)
    phi1[small] = p1
    phi2[small] = p2
    decay[small] = np.exp(-zs)

    zm = z[mid]
    em = np.exp(-zm)
    decay[mid] = em
    phi1[mid] = -np.expm1(-zm)
    phi2[mid] = (phi1[mid] - zm * em) / zm

    decay[big] = 0.0
    phi1[big] = 1.0
    phi2[big] = 1.0 / z[big]
    return decay, phi1 - phi2, phi2


def kernel_term(J: np.ndarray, w: float, slab: SlabGrid, grid: MomentumGrid) -> np.ndarray:
    """Collision-source part of the mild formula for a given equilibrium field.

    For q1 > 0 returns ``(w/|q1|) int_0^x e^{-w(x-y)/|q1|} J(y, q) dy`` and the
    mirrored integral over ``[x, 1]`` for q1 < 0, with ``J`` linear in ``y``
    between slab nodes and every cell integrated exactly.
    """
    J = np.asarray(J, dtype=float)
    out = np.zeros_like(J)
    if w == 0.0:
        return out
    c = w / np.abs(grid.q1)
    pos = grid.q1 > 0
    neg = ~pos
    h = slab.widths
    nx = slab.size
    for j in range(1, nx):
        decay, a, b = cell_weights(c * h[j - 1])
        # left-to-right sweep feeds q1 > 0
        out[j, pos] = decay[pos] * out[j - 1, pos] + a[pos] * J[j, pos] + b[pos] * J[j - 1, pos]
        # right-to-left sweep feeds q1 < 0
        i = nx - 1 - j
        decay, a, b = cell_weights(c * h[i])
        out[i, neg] = decay[neg] * out[i + 1, neg] + a[neg] * J[i, neg] + b[neg] * J[i + 1, neg]
    return out


def apply_phi(
    f: DistField,
    b: BoundaryData,
    w: float,
    f_lr: np.ndarray | None = None,
    beta_guess: np.ndarray | None = None,
    return_profile: bool = False,
):
    """One application of the solution operator ``Phi``.

    ``w = 0`` short-circuits to ``f_LR`` at every slab node. Otherwise the
    local equilibrium of ``f`` is built slab-node by slab-node and
    transported along characteristics from the inflow walls.
    """
    if w < 0 or not math.isfinite(w):
        raise DomainError(f"collision frequency must be >= 0, got {w}")
    grid, slab = f.momentum, f.slab
    if f_lr is None:
        f_lr = b.f_lr(grid)
    if w == 0.0:
        out = DistField.broadcast(f_lr, slab, grid)
        return (out, None) if return_profile else out
    fe = attenuated_boundary(b, w, slab, grid, f_lr)
    J, prof = juttner_field(f, beta_guess=beta_guess, return_profile=True)
    out = f.with_values(fe + kernel_term(J.values, w, slab, grid))
    return (out, prof) if return_profile else out


def kernel_moment(f: DistField, w: float, weight: str = "1") -> np.ndarray:
    """Per-node ``int (kernel part of Phi(f)) * weight dq`` with ``weight`` in {"1", "1/q0"}."""
    if not 0.0 < w < 1.0:
        raise DomainError(f"kernel bound requires 0 < w < 1, got {w}")
    grid = f.momentum
    if weight == "1":
        psi = np.ones(grid.size)
    elif weight == "1/q0":
        psi = 1.0 / grid.q0
    else:
        raise DomainError(f"weight must be '1' or '1/q0', got {weight!r}")
    J = juttner_field(f)
    return integrate_q(kernel_term(J.values, w, f.slab, grid) * psi, grid)
