"""Explicit constants of the existence proof and the admissible collision frequency.

Every constant is computed from the inflow data on the working grids:

* ``a_l, a_u, lam`` from the inflow data (``lam`` as the supremum over slab
  nodes of the attenuated-data ratio),
* ``beta_l, beta_u, C0 .. C4``: the Jüttner envelope ``C1 exp(-C2 q0)``,
* ``C5 .. C9``: the Lipschitz envelope of ``f -> J_f``,
* ``eps``: the largest collision frequency meeting the three smallness
  conditions, and ``kappa``, the analytic contraction factor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, HypothesisViolationError, InfeasibleConfigurationError, MatchingError, OutOfRangeError
from .fields import exponent_floor
from .grid import MomentumGrid, SlabGrid
from .specfun import BetaInterval, ell, invert_k_ratio, k_ratio_prime, m_of_beta, mean_energy
from .transport import BoundaryData, attenuated_boundary

__all__ = [
    "BoundaryConstants",
    "ProblemConstants",
    "EpsilonResult",
    "boundary_constants",
    "envelope_constants",
    "lipschitz_constants",
    "kernel_bound",
    "contraction_factor",
    "problem_constants",
    "epsilon_threshold",
    "W_CAP",
    "W_FLOOR",
    "KAPPA_TARGET",
]

log = logging.getLogger(__name__)

W_CAP = 1.0 / math.e
W_FLOOR = 1e-300
KAPPA_TARGET = 0.9
_A_L_FLOOR = 1e-300


@dataclass(frozen=True)
class BoundaryConstants:
    a_l: float
    a_u: float
    lam: float
    lam_per_x: np.ndarray = field(repr=False)
    mass: float  # int f_LR dq
    min_inv_energy: float  # min over x of int f^e_LR / q0 dq


@dataclass(frozen=True)
class ProblemConstants:
    """All constants of the proof chain at one collision frequency ``w``."""

    w: float
    a_l: float
    a_u: float
    lam: float
    beta_l: float
    beta_u: float
    C0: float
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    C6: float
    C7: float
    C8: float
    C9: float
    mass: float
    min_inv_energy: float
    ell_min: float
    eps: Optional[float] = None
    kappa: Optional[float] = None

    @property
    def beta_bracket(self) -> BetaInterval:
        return BetaInterval(self.beta_l, self.beta_u)

    def to_dict(self) -> dict:
        return asdict(self)


def boundary_constants(
    b: BoundaryData,
    w: float,
    slab: SlabGrid,
    grid: MomentumGrid,
    f_lr: np.ndarray | None = None,
) -> BoundaryConstants:
    """``a_l``, ``a_u`` and ``lam`` for inflow data ``b`` at collision frequency ``w``.

    Raises
    ------
    HypothesisViolationError
        ``a_l`` is not positive (e.g. vanishing inflow data).
    """
    if not w > 0:
        raise DomainError(f"collision frequency must be positive, got {w}")
    if f_lr is None:
        f_lr = b.f_lr(grid)
    wts = grid.weights
    inv = 1.0 / grid.q0
    a_l = float(np.sum(wts * np.exp(-w / np.abs(grid.q1)) * f_lr * inv * inv))
    mass = float(np.sum(wts * f_lr))
    a_u = 2.0 * mass
    if not a_l > _A_L_FLOOR:
        raise HypothesisViolationError(f"a_l = {a_l:.3e}: inflow data must give a_l > 0")

    fe = attenuated_boundary(b, w, slab, grid, f_lr)
    N0 = fe @ wts
    S1 = fe @ (wts * inv)
    S2 = fe @ (wts * inv * inv)
    lam_x = S1 / np.sqrt(N0 * S2)
    lam = float(np.max(lam_x))
    if not 0.0 < lam < 1.0:
        raise HypothesisViolationError(f"lambda = {lam!r} is not in (0, 1)")
    return BoundaryConstants(a_l, a_u, lam, lam_x, mass, float(np.min(S1)))


def envelope_constants(a_l: float, a_u: float, lam: float) -> dict[str, float]:
    """``beta_l, beta_u`` and the envelope constants ``C0 .. C4``.

    ``C4 = C2/2`` and ``C3 = max(exp(-C2/2), 2/(e C2))`` so that
    ``q0 exp(-C2 q0) <= C3 exp(-C4 q0)`` for all ``q0 >= 1``.
    """
    root = math.sqrt(lam)
    if not root < 1.0:
        raise MatchingError(f"sqrt(lambda) = {root} >= 1: cannot bracket beta")
    try:
        beta_l = invert_k_ratio(a_l / a_u)
        beta_u = invert_k_ratio(root)
    except OutOfRangeError as exc:
        raise MatchingError(str(exc)) from exc
    if beta_l == beta_u:
        log.warning("degenerate beta bracket at %g", beta_l)
    C0 = exponent_floor(math.sqrt(2.0) * a_u / a_l)
    C1 = a_u / m_of_beta(beta_u)
    C2 = beta_l * C0
    C4 = 0.5 * C2
    C3 = max(math.exp(-0.5 * C2), 2.0 / (C2 * math.e))
    return dict(beta_l=beta_l, beta_u=beta_u, C0=C0, C1=C1, C2=C2, C3=C3, C4=C4)


def _min_on_bracket(fun, lo: float, hi: float, n: int = 129) -> float:
    if lo == hi:
        return fun(lo)
    grid = np.geomspace(lo, hi, n)
    vals = np.array([fun(b) for b in grid])
    k = int(np.argmin(vals))
    a, c = grid[max(k - 1, 0)], grid[min(k + 1, n - 1)]
    best = float(vals[k])
    if a < c:
        res = minimize_scalar(fun, bounds=(a, c), method="bounded", options={"xatol": 1e-10 * c})
        best = min(best, float(res.fun))
    return best


def lipschitz_constants(
    a_l: float,
    a_u: float,
    beta_l: float,
    beta_u: float,
    C1: float,
    C2: float,
    C3: float,
    C4: float,
) -> dict[str, float]:
    """Constants ``C5 .. C9`` of the Lipschitz bound ``|J_f - J_g| <= C9 e^{-C8 q0} ||f-g||``."""
    if not 0 < beta_l <= beta_u:
        raise DomainError(f"empty beta bracket [{beta_l}, {beta_u}]")
    kp_min = _min_on_bracket(k_ratio_prime, beta_l, beta_u)
    probes = np.geomspace(beta_l, beta_u, 129) if beta_l < beta_u else np.array([beta_l])
    probes = np.concatenate([probes, [b for b in (2.0 - 1e-12, 2.0) if beta_l <= b <= beta_u]])
    ell_min = float(min(ell(b) for b in probes))
    if kp_min < ell_min:
        # cannot happen if the lower bound holds; keep the analytic value as a floor
        log.warning("grid minimum of k_ratio_prime %g below ell_min %g", kp_min, ell_min)
        kp_min = ell_min
    C5 = 1.0 / kp_min

    energies = np.array([mean_energy(b) for b in probes[:129]])
    if np.any(np.diff(energies) > 0):
        log.warning("mean energy not monotone on the beta bracket; using its maximum")
    C6 = float(np.max(energies))

    rho = a_u / a_l
    C7 = C5 * C1 * (C6 + 2.0 * C3 * math.sqrt(1.0 + 4.0 * rho * rho))
    C8 = min(C2, C4)
    C9 = (a_u / a_l**2) * (
        4.0 * C1
        + 2.0 * C1 * beta_u * C3 * (math.sqrt(2.0) + 8.0 * rho)
        + C7 * (1.0 + 4.0 * rho)
    )
    return dict(C5=C5, C6=C6, C7=C7, C8=C8, C9=C9, ell_min=ell_min)


def kernel_bound(w: float, C_num: float, C_exp: float) -> float:
    """``(16 C_num / C_exp^2) (2 w ln(1/w) + (1+e) w + sqrt(2) w^2/C_exp e^{-C_exp/(sqrt(2) w)})``."""
    if not 0.0 < w < 1.0:
        raise DomainError(f"kernel bound requires 0 < w < 1, got {w}")
    if not (C_num > 0 and C_exp > 0):
        raise DomainError("kernel bound constants must be positive")
    tail = math.sqrt(2.0) * w * w / C_exp * math.exp(-C_exp / (math.sqrt(2.0) * w))
    return 16.0 * C_num / C_exp**2 * (2.0 * w * math.log(1.0 / w) + (1.0 + math.e) * w + tail)


def contraction_factor(w: float, pc: ProblemConstants) -> float:
    """Analytic Lipschitz constant of the solution operator in ``sup_x L^1_q``."""
    return kernel_bound(w, pc.C9, pc.C8)


def problem_constants(
    b: BoundaryData,
    w: float,
    slab: SlabGrid,
    grid: MomentumGrid,
    f_lr: np.ndarray | None = None,
    with_eps: bool = True,
    **eps_kwargs,
) -> ProblemConstants:
    """Compute every constant at collision frequency ``w``.

    With ``with_eps`` the admissible threshold is searched as well and
    ``kappa`` is the contraction factor at ``w`` (``None`` if ``w >= 1``).
    """
    if f_lr is None:
        f_lr = b.f_lr(grid)
    bc = boundary_constants(b, w, slab, grid, f_lr)
    env = envelope_constants(bc.a_l, bc.a_u, bc.lam)
    lip = lipschitz_constants(
        bc.a_l, bc.a_u, env["beta_l"], env["beta_u"], env["C1"], env["C2"], env["C3"], env["C4"]
    )
    pc = ProblemConstants(
        w=w,
        a_l=bc.a_l,
        a_u=bc.a_u,
        lam=bc.lam,
        mass=bc.mass,
        min_inv_energy=bc.min_inv_energy,
        **env,
        **lip,
    )
    kappa = contraction_factor(w, pc) if w < 1.0 else None
    eps = None
    if with_eps:
        eps = epsilon_threshold(b, slab, grid, f_lr=f_lr, **eps_kwargs).eps
    return ProblemConstants(**{**pc.to_dict(), "eps": eps, "kappa": kappa})


@dataclass(frozen=True)
class EpsilonResult:
    eps: float
    active: str
    slacks: dict[str, float]
    monotone: bool
    constants: ProblemConstants


def _slacks(b, w, slab, grid, f_lr, kappa_target):
    pc = problem_constants(b, w, slab, grid, f_lr, with_eps=False)
    kb = kernel_bound(w, pc.C1, pc.C2)
    root = math.sqrt(pc.lam)
    slacks = {
        "mass": math.log(pc.mass) - math.log(kb),
        "ratio_cap": math.log((1.0 / root - 1.0) * pc.min_inv_energy) - math.log(kb),
        "contraction": math.log(kappa_target) - math.log(contraction_factor(w, pc)),
    }
    return slacks, pc


def epsilon_threshold(
    b: BoundaryData,
    slab: SlabGrid,
    grid: MomentumGrid,
    f_lr: np.ndarray | None = None,
    w_cap: float = W_CAP,
    kappa_target: float = KAPPA_TARGET,
    w_floor: float = W_FLOOR,
    rtol: float = 1e-6,
) -> EpsilonResult:
    """Largest ``w <= w_cap`` meeting all three smallness conditions.

    The conditions are

    1. ``kernel_bound(w, C1, C2) <= int f_LR dq``,
    2. ``kernel_bound(w, C1, C2) <= (1/sqrt(lam) - 1) min_x int f^e_LR/q0 dq``,
    3. ``contraction_factor(w) <= kappa_target``,

    with every constant recomputed at the trial ``w``. Slacks are compared in
    log form, a log-spaced scan checks that the feasible set is an initial
    interval, and bisection in ``log w`` refines the edge to relative width
    ``rtol``. If the scan finds the set is not an interval, the largest
    feasible scan point brackets the bisection instead.

    Raises
    ------
    InfeasibleConfigurationError
        No admissible ``w`` above ``w_floor``.
    """
    if f_lr is None:
        f_lr = b.f_lr(grid)
    if not 0.0 < w_floor < w_cap < 1.0:
        raise DomainError(f"need 0 < w_floor < w_cap < 1, got {w_floor}, {w_cap}")

    def ok(w):
        s, pc = _slacks(b, w, slab, grid, f_lr, kappa_target)
        return min(s.values()) >= 0.0, s, pc

    scan = np.geomspace(w_floor, w_cap, 41)
    feas = []
    for w in scan:
        feas.append(ok(float(w))[0])
    feas = np.array(feas)
    if not feas.any():
        raise InfeasibleConfigurationError(
            f"no collision frequency in [{w_floor:g}, {w_cap:g}] satisfies the smallness conditions"
        )
    last = int(np.flatnonzero(feas)[-1])
    monotone = bool(np.all(feas[: last + 1]) and not np.any(feas[last + 1 :]))
    if not monotone:
        log.warning("smallness conditions not monotone in w; using scan fallback")

    if last == len(scan) - 1:
        eps = float(w_cap)
    else:
        lo, hi = math.log(scan[last]), math.log(scan[last + 1])
        while hi - lo > rtol:
            mid = 0.5 * (lo + hi)
            if ok(math.exp(mid))[0]:
                lo = mid
            else:
                hi = mid
        eps = math.exp(lo)
    _, slacks, pc = ok(eps)
    active = min(slacks, key=slacks.get)
    return EpsilonResult(eps, active, slacks, monotone, pc)
