"""Picard iteration of the solution operator with membership and flux auditing."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .analysis import (
    KAPPA_TARGET,
    W_CAP,
    W_FLOOR,
    ProblemConstants,
    contraction_factor,
    epsilon_threshold,
    problem_constants,
)
from .errors import ConfigurationError, ConvergenceError, InvariantBreachError
from .fields import MacroProfile, eckart_profile
from .grid import DistField, MomentumGridSpec, build_momentum_grid, build_slab_grid, l1_distance, moment_vector
from .omega import OmegaCheck, check_omega
from .transport import BoundaryData, JuttnerSide, apply_phi, attenuated_boundary

__all__ = [
    "SolveConfig",
    "SolveReport",
    "SolveResult",
    "FluxReport",
    "check_omega",
    "picard_solve",
    "flux_diagnostics",
    "default_boundary",
    "FLUX_NAMES",
]

log = logging.getLogger(__name__)

FLUX_NAMES = ("F_1", "F_q1", "F_q2", "F_q3", "F_invq0")


def default_boundary() -> BoundaryData:
    """Asymmetric Jüttner inflow: a warm stream from the left, a cooler one from the right."""
    return BoundaryData.juttner(JuttnerSide(1.0, 0.3, 1.0), JuttnerSide(0.8, -0.2, 2.0))


@dataclass
class SolveConfig:
    """Everything a solve needs. ``w=None`` means half the admissible threshold."""

    w: Optional[float] = None
    boundary: BoundaryData = field(default_factory=default_boundary)
    slab_nodes: int = 65
    momentum: MomentumGridSpec = field(default_factory=MomentumGridSpec)
    tol: float = 1e-8
    max_iter: int = 200
    kappa_target: float = KAPPA_TARGET
    w_cap: float = W_CAP
    w_floor: float = W_FLOOR
    allow_beyond_eps: bool = False
    output_dir: Optional[str] = None

    def validate(self) -> None:
        if self.w is not None and not (self.w > 0 and math.isfinite(self.w)):
            raise ConfigurationError(f"w must be positive, got {self.w}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0 < self.kappa_target < 1:
            raise ConfigurationError(f"kappa_target must lie in (0, 1), got {self.kappa_target}")
        self.momentum.validate()


@dataclass
class FluxReport:
    """x-profiles of the five conserved fluxes and their relative spread."""

    x: np.ndarray
    fluxes: dict[str, np.ndarray]
    deviation: dict[str, float]

    @property
    def max_deviation(self) -> float:
        return max(self.deviation.values())


@dataclass
class SolveReport:
    w: float
    eps: float
    kappa: Optional[float]
    within_theorem: bool
    iterations: int
    converged: bool
    residual_history: list[float]
    ratios: list[float]
    empirical_contraction: Optional[float]
    omega: list[dict]
    omega_all_passed: bool
    fixed_point_residual: Optional[float]
    flux_deviation: float
    flux: dict[str, float]
    elapsed: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class SolveResult:
    field: DistField
    profile: MacroProfile
    fluxes: FluxReport
    report: SolveReport
    constants: ProblemConstants


def flux_diagnostics(f: DistField) -> FluxReport:
    """Fluxes ``F_psi(x) = int f q1 psi dq`` for ``psi`` in ``{1, q1/q0, q2/q0, q3/q0, 1/q0}``.

    The deviation of each flux is ``max_j |F(x_j) - mean| / (|mean| + floor)``
    with ``floor = 1e-12 * mean_j int f |q1| dq``, so identically vanishing
    fluxes report zero.
    """
    g = f.momentum
    inv = 1.0 / g.q0
    psis = {
        "F_1": np.ones(g.size),
        "F_q1": g.q1 * inv,
        "F_q2": g.q2 * inv,
        "F_q3": g.q3 * inv,
        "F_invq0": inv,
    }
    fw = f.values * (g.weights * g.q1)[None, :]
    floor = 1e-12 * float(np.mean(np.abs(f.values) @ (g.weights * np.abs(g.q1))))
    fluxes = {}
    deviation = {}
    for name, psi in psis.items():
        F = fw @ psi
        mean = float(np.mean(F))
        fluxes[name] = F
        scale = abs(mean) + floor
        deviation[name] = float(np.max(np.abs(F - mean)) / scale) if scale > 0 else 0.0
    return FluxReport(f.slab.x.copy(), fluxes, deviation)


def _noise_floor(f: DistField) -> float:
    # residuals below this are round-off in the L1 norm of the iterate
    return 1e3 * np.finfo(float).eps * float(np.max(np.abs(f.values) @ f.momentum.weights))


def picard_solve(
    cfg: SolveConfig,
    constants: ProblemConstants | None = None,
    initial: np.ndarray | None = None,
    check_invariants: bool = True,
) -> SolveResult:
    """Iterate ``f_{k+1} = Phi(f_k)`` from ``f_0 = f^e_LR`` until ``sup_x ||f_{k+1}-f_k||_1 <= tol``.

    Parameters
    ----------
    cfg : SolveConfig
        Problem and solver settings. ``cfg.w = None`` solves at ``eps/2``.
    constants : ProblemConstants, optional
        Precomputed constants (with ``eps``) at ``cfg.w``; computed if absent.
    initial : ndarray, optional
        Alternative starting iterate of shape ``(Nx, Nq)``.
    check_invariants : bool
        Audit membership of every iterate.

    Raises
    ------
    ConfigurationError
        ``w >= eps`` without ``allow_beyond_eps``.
    InvariantBreachError
        An iterate fails the membership check although ``w < eps``.
    ConvergenceError
        ``max_iter`` reached above tolerance.
    """
    t0 = time.perf_counter()
    cfg.validate()
    slab = build_slab_grid(cfg.slab_nodes)
    grid = build_momentum_grid(cfg.momentum)
    b = cfg.boundary
    f_lr = b.f_lr(grid)
    eps_kw = dict(kappa_target=cfg.kappa_target, w_cap=cfg.w_cap, w_floor=cfg.w_floor)

    w = cfg.w
    if constants is None or constants.eps is None or (w is not None and constants.w != w):
        if w is None:
            eps = epsilon_threshold(b, slab, grid, f_lr=f_lr, **eps_kw).eps
            w = 0.5 * eps
            constants = problem_constants(b, w, slab, grid, f_lr, with_eps=False)
            constants = replace(constants, eps=eps, kappa=contraction_factor(w, constants))
        else:
            constants = problem_constants(b, w, slab, grid, f_lr, **eps_kw)
    elif w is None:
        w = constants.w
    eps = constants.eps
    within = w < eps
    if not within:
        if not cfg.allow_beyond_eps:
            raise ConfigurationError(
                f"w = {w:.3e} is not below the admissible threshold eps = {eps:.3e}; "
                "set allow_beyond_eps to run anyway"
            )
        log.warning("w = %.3e >= eps = %.3e: contraction is not guaranteed", w, eps)
    kappa = contraction_factor(w, constants) if w < 1.0 else None

    fe = attenuated_boundary(b, w, slab, grid, f_lr)
    f = DistField(fe if initial is None else np.asarray(initial, dtype=float), slab, grid)

    history: list[float] = []
    omega: list[dict] = []

    def audit(field_k: DistField, k: int) -> None:
        if not check_invariants:
            return
        chk: OmegaCheck = check_omega(field_k, constants)
        omega.append({"iterate": k, **chk.summary()})
        if within and not chk.passed:
            raise InvariantBreachError(
                f"iterate {k} leaves the solution set: {chk.failing()} worst={chk.worst()}"
            )

    audit(f, 0)
    converged = False
    beta_guess = None
    if math.isinf(cfg.tol):
        converged = True
    else:
        for k in range(1, cfg.max_iter + 1):
            new, prof = apply_phi(f, b, w, f_lr=f_lr, beta_guess=beta_guess, return_profile=True)
            beta_guess = prof.beta
            res = l1_distance(new, f).sup_x
            history.append(res)
            f = new
            audit(f, k)
            log.debug("iteration %d residual %.3e", k, res)
            if res <= cfg.tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(
                f"no convergence in {cfg.max_iter} iterations (last residual {history[-1]:.3e})",
                history,
            )

    fixed_res = None
    if not math.isinf(cfg.tol):
        fixed_res = l1_distance(apply_phi(f, b, w, f_lr=f_lr, beta_guess=beta_guess), f).sup_x

    floor = _noise_floor(f)
    ratios = [history[i + 1] / history[i] for i in range(len(history) - 1) if history[i] > 0]
    usable = [
        history[i + 1] / history[i]
        for i in range(len(history) - 1)
        if history[i] > floor and history[i + 1] > floor
    ]
    profile = eckart_profile(moment_vector(f.values, grid), beta_guess)
    fluxes = flux_diagnostics(f)
    report = SolveReport(
        w=w,
        eps=eps,
        kappa=kappa,
        within_theorem=within,
        iterations=len(history),
        converged=converged,
        residual_history=history,
        ratios=ratios,
        empirical_contraction=max(usable) if usable else None,
        omega=omega,
        omega_all_passed=all(o["passed"] for o in omega),
        fixed_point_residual=fixed_res,
        flux_deviation=fluxes.max_deviation,
        flux=fluxes.deviation,
        elapsed=time.perf_counter() - t0,
    )
    return SolveResult(f, profile, fluxes, report, constants)
