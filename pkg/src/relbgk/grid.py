"""Slab and momentum discretisations and the phase-space integrals on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalInputError, ShapeError

__all__ = [
    "MomentumGridSpec",
    "MomentumGrid",
    "SlabGrid",
    "DistField",
    "Moments",
    "build_momentum_grid",
    "build_slab_grid",
    "integrate_q",
    "moment_vector",
    "l1_distance",
]

AXISYMMETRIC = "axisymmetric"
FULL3D = "full3d"


@dataclass(frozen=True)
class MomentumGridSpec:
    """Parameters of a momentum quadrature.

    ``q_max=None`` selects the untruncated rule: Gauss-Legendre in
    ``t in (0, 1)`` mapped by ``q = scale * t / (1 - t)`` on each half-axis.
    A finite ``q_max`` selects plain Gauss-Legendre on ``(0, q_max)``.
    ``n_q1`` counts nodes on the whole q1 axis and must be even, so that the
    q1 > 0 and q1 < 0 halves mirror each other and no node sits on q1 = 0.
    In full3d mode ``n_q1`` is used for every axis.
    """

    mode: str = AXISYMMETRIC
    n_q1: int = 64
    n_perp: int = 48
    q_max: Optional[float] = None
    scale: float = 8.0

    def validate(self) -> None:
        if self.mode not in (AXISYMMETRIC, FULL3D):
            raise ConfigurationError(f"unknown momentum grid mode {self.mode!r}")
        if self.q_max is not None and not (self.q_max > 0 and math.isfinite(self.q_max)):
            raise ConfigurationError(f"q_max must be positive, got {self.q_max}")
        if not self.scale > 0:
            raise ConfigurationError(f"scale must be positive, got {self.scale}")
        if self.n_q1 < 4 or self.n_q1 % 2:
            raise ConfigurationError(f"n_q1 must be even and >= 4, got {self.n_q1}")
        if self.mode == AXISYMMETRIC and self.n_perp < 4:
            raise ConfigurationError(f"n_perp must be >= 4, got {self.n_perp}")


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Momentum nodes and positive quadrature weights.

    In axisymmetric mode each node stands for a ring of radius ``q_perp``
    around the q1 axis; the weight carries the ``2 pi q_perp`` Jacobian and
    the transverse components ``q2``, ``q3`` are stored as their azimuthal
    averages (zero).
    """

    mode: str
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    q_perp: np.ndarray
    q0: np.ndarray
    weights: np.ndarray
    q_max: float
    spec: MomentumGridSpec

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def positive(self) -> np.ndarray:
        return self.q1 > 0

    @property
    def negative(self) -> np.ndarray:
        return self.q1 < 0

    @property
    def q_abs(self) -> np.ndarray:
        return np.sqrt(self.q1**2 + self.q_perp**2)

    def mirror_index(self) -> np.ndarray:
        """Permutation mapping each node to its q1 -> -q1 partner."""
        return self._mirror

    def __post_init__(self):
        for name in ("q1", "q2", "q3", "q_perp", "q0", "weights"):
            getattr(self, name).setflags(write=False)
        key = np.round(self.q1, 12), np.round(self.q_perp, 12)
        order = np.lexsort((key[1], key[0]))
        morder = np.lexsort((key[1], -key[0]))
        mirror = np.empty_like(order)
        mirror[order] = morder
        object.__setattr__(self, "_mirror", mirror)


def _half_axis(n: int, q_max: Optional[float], scale: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    if q_max is not None:
        return q_max * t, q_max * w
    return scale * t / (1.0 - t), w * scale / (1.0 - t) ** 2


def _full_axis(n: int, q_max: Optional[float], scale: float) -> tuple[np.ndarray, np.ndarray]:
    q, w = _half_axis(n // 2, q_max, scale)
    return np.concatenate([-q[::-1], q]), np.concatenate([w[::-1], w])


def build_momentum_grid(spec: MomentumGridSpec | None = None, **kwargs) -> MomentumGrid:
    """Build a momentum quadrature from ``spec`` (or keyword overrides)."""
    if spec is None:
        spec = MomentumGridSpec(**kwargs)
    elif kwargs:
        raise TypeError("pass either a spec or keyword arguments, not both")
    spec.validate()

    q1_axis, w1 = _full_axis(spec.n_q1, spec.q_max, spec.scale)
    if spec.mode == AXISYMMETRIC:
        qp_axis, wp = _half_axis(spec.n_perp, spec.q_max, spec.scale)
        q1, qp = np.meshgrid(q1_axis, qp_axis, indexing="ij")
        weights = np.outer(w1, 2.0 * np.pi * qp_axis * wp).ravel()
        q1 = q1.ravel()
        q_perp = qp.ravel()
        q2 = np.zeros_like(q1)
        q3 = np.zeros_like(q1)
    else:
        q1, q2, q3 = np.meshgrid(q1_axis, q1_axis, q1_axis, indexing="ij")
        weights = (w1[:, None, None] * w1[None, :, None] * w1[None, None, :]).ravel()
        q1, q2, q3 = q1.ravel(), q2.ravel(), q3.ravel()
        q_perp = np.hypot(q2, q3)

    q0 = np.sqrt(1.0 + q1**2 + q_perp**2)
    q_max = math.inf if spec.q_max is None else float(spec.q_max)
    return MomentumGrid(spec.mode, q1, q2, q3, q_perp, q0, weights, q_max, spec)


@dataclass(frozen=True, eq=False)
class SlabGrid:
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ConfigurationError("slab grid needs at least two nodes")
        if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
            raise ConfigurationError("slab nodes must increase strictly from 0 to 1")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def size(self) -> int:
        return self.x.size

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.x)


def build_slab_grid(n_nodes: int = 65) -> SlabGrid:
    if n_nodes < 2:
        raise ConfigurationError(f"slab grid needs >= 2 nodes, got {n_nodes}")
    x = np.linspace(0.0, 1.0, n_nodes)
    x[-1] = 1.0
    return SlabGrid(x)


@dataclass(eq=False)
class DistField:
    """Phase-space values ``f(x_j, q_k)`` with shape ``(slab.size, momentum.size)``."""

    values: np.ndarray
    slab: SlabGrid
    momentum: MomentumGrid = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.slab.size, self.momentum.size)
        if self.values.shape != expected:
            raise ShapeError(f"field shape {self.values.shape} != grid shape {expected}")

    def same_grids(self, other: "DistField") -> bool:
        return self.slab is other.slab and self.momentum is other.momentum or (
            self.values.shape == other.values.shape
            and np.array_equal(self.slab.x, other.slab.x)
            and np.array_equal(self.momentum.weights, other.momentum.weights)
            and np.array_equal(self.momentum.q1, other.momentum.q1)
        )

    def with_values(self, values: np.ndarray) -> "DistField":
        return DistField(values, self.slab, self.momentum)

    @classmethod
    def broadcast(cls, slice_values: np.ndarray, slab: SlabGrid, momentum: MomentumGrid) -> "DistField":
        """The same momentum profile at every slab node."""
        return cls(np.tile(np.asarray(slice_values, dtype=float), (slab.size, 1)), slab, momentum)


def integrate_q(g, grid: MomentumGrid) -> np.ndarray | float:
    """Quadrature ``sum_k w_k g_k`` over the last axis of ``g``."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NumericalInputError("integrand has non-finite values")
    out = g @ grid.weights
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class Moments:
    """Particle four-flow ``(N0, N)`` and the inverse-energy moments ``S1``, ``S2``.

    All attributes are scalars for a single slice or arrays over the slab.
    """

    N0: np.ndarray | float
    N: np.ndarray
    S1: np.ndarray | float
    S2: np.ndarray | float


def moment_vector(f_slice, grid: MomentumGrid, check_sign: bool = True) -> Moments:
    """Moments ``N0 = int f``, ``N_i = int f q_i/q0``, ``S1 = int f/q0``, ``S2 = int f/q0^2``.

    ``f_slice`` may be one slice (shape ``(Nq,)``) or a stack ``(Nx, Nq)``.
    """
    f = np.asarray(f_slice, dtype=float)
    if not np.all(np.isfinite(f)):
        raise NumericalInputError("distribution has non-finite values")
    if check_sign and np.any(f < 0):
        raise DomainError("distribution has negative entries")
    inv = 1.0 / grid.q0
    fw = f * grid.weights
    N0 = fw.sum(axis=-1)
    S1 = fw @ inv
    S2 = fw @ (inv * inv)
    N = np.stack([fw @ (grid.q1 * inv), fw @ (grid.q2 * inv), fw @ (grid.q3 * inv)], axis=-1)
    if f.ndim == 1:
        return Moments(float(N0), N, float(S1), float(S2))
    return Moments(N0, N, S1, S2)


@dataclass(frozen=True)
class L1Distance:
    per_x: np.ndarray
    sup_x: float


def l1_distance(f: DistField, g: DistField) -> L1Distance:
    """Per-node ``int |f - g| dq`` and its supremum over the slab."""
    if not f.same_grids(g):
        raise ShapeError("fields live on different grids")
    per_x = np.abs(f.values - g.values) @ f.momentum.weights
    return L1Distance(per_x, float(per_x.max()))
