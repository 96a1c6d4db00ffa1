"""Numerical certification of the inequalities behind the existence proof.

Each check produces a record ``{name, margin, tolerance, pass}``. Margins are
signed so that a nonnegative (or, for strict inequalities, positive) margin
means the inequality holds on every sample.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ProblemConstants, kernel_bound, problem_constants
from .errors import DegeneracyError, MatchingError
from .fields import MacroFields, eckart_profile, juttner_values
from .grid import DistField, MomentumGrid, SlabGrid, moment_vector
from .omega import check_omega_slices
from .specfun import ell, k_ratio, k_ratio_prime
from .transport import BoundaryData, attenuated_boundary, kernel_term

__all__ = [
    "CheckRecord",
    "VerificationReport",
    "verify_lemmas",
    "sample_omega_slices",
    "check_derivative_identity",
    "check_derivative_bound",
    "check_envelope",
    "check_kernel_bound",
    "check_lipschitz",
    "KERNEL_W",
]

KERNEL_W = (0.1, 0.01, 0.001)
FD_TOL = 1e-8


@dataclass
class CheckRecord:
    name: str
    margin: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    records: list[CheckRecord]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failing(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def __getitem__(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "records": [r.to_dict() for r in self.records]}

    def write(self, path) -> None:
        write_json_atomic(path, self.to_dict())


def write_json_atomic(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, default=_json_default)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _record(name, margin, tolerance, strict=False, **detail) -> CheckRecord:
    margin = float(margin)
    ok = margin > 0.0 if strict else margin >= 0.0
    return CheckRecord(name, margin, float(tolerance), bool(ok and math.isfinite(margin)), detail)


# -- sampling -----------------------------------------------------------------


def sample_omega_slices(
    pc: ProblemConstants,
    b: BoundaryData,
    slab: SlabGrid,
    grid: MomentumGrid,
    n: int,
    rng: np.random.Generator,
    f_lr: np.ndarray | None = None,
    max_tries: int = 100,
) -> np.ndarray:
    """Random momentum slices satisfying the four membership conditions for ``pc``.

    Candidates are a randomly scaled attenuated-inflow slice (at a random slab
    node) plus a random nonnegative mixture of Jüttner profiles; candidates
    that fail a condition are rejected.
    """
    fe = attenuated_boundary(b, pc.w, slab, grid, f_lr)
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > max_tries * n:
            raise RuntimeError(f"sampler accepted only {len(out)} of {n} slices")
        base = fe[rng.integers(slab.size)]
        base_mass = float(base @ grid.weights)
        cand = rng.uniform(1.0, 1.8) * base
        for _ in range(rng.integers(0, 3)):
            u = rng.uniform(-0.6, 0.6)
            beta = math.exp(rng.uniform(math.log(0.3), math.log(8.0)))
            mf = MacroFields.from_beta(1.0, (u, 0.0, 0.0), beta)
            cand = cand + rng.uniform(0.0, 0.4) * base_mass * juttner_values(mf, grid)
        if check_omega_slices(cand, grid, pc.a_l, pc.a_u, pc.lam).passed:
            out.append(cand)
    return np.array(out)


def _equilibria(slices: np.ndarray, grid: MomentumGrid) -> np.ndarray:
    prof = eckart_profile(moment_vector(slices, grid))
    rows = np.empty_like(slices)
    for j in range(len(prof)):
        rows[j] = juttner_values(prof[j], grid)
    return rows


# -- individual checks -----------------------------------------------------------


def check_derivative_identity(betas: np.ndarray | None = None, tol: float = FD_TOL) -> CheckRecord:
    """Closed-form ``d/dbeta K1/K2`` against a fourth-order central difference."""
    if betas is None:
        betas = np.geomspace(0.1, 20.0, 50)
    errs = []
    for beta in betas:
        h = 1e-3 * beta
        fd = (
            -k_ratio(beta + 2 * h) + 8 * k_ratio(beta + h) - 8 * k_ratio(beta - h) + k_ratio(beta - 2 * h)
        ) / (12 * h)
        errs.append(abs(k_ratio_prime(beta) - fd))
    worst = max(errs)
    return _record("derivative_identity", tol - worst, tol, max_error=worst, points=len(betas))


def check_derivative_bound(betas: np.ndarray | None = None) -> CheckRecord:
    """``k_ratio_prime >= ell`` with positive margin, including both sides of 2."""
    if betas is None:
        betas = np.geomspace(0.1, 20.0, 50)
    pts = np.concatenate([betas, [np.nextafter(2.0, 0.0), 2.0]])
    margins = np.array([k_ratio_prime(b) - ell(b) for b in pts])
    i = int(np.argmin(margins))
    return _record(
        "derivative_lower_bound",
        margins[i],
        0.0,
        strict=True,
        worst_beta=float(pts[i]),
        margin_2_minus=float(margins[-2]),
        margin_2_plus=float(margins[-1]),
    )


def check_envelope(
    pc: ProblemConstants,
    b: BoundaryData,
    slab: SlabGrid,
    grid: MomentumGrid,
    rng: np.random.Generator,
    n_fields: int = 20,
    f_lr: np.ndarray | None = None,
) -> CheckRecord:
    """``J_f <= C1 exp(-C2 q0)`` at every node for sampled admissible fields.

    The margin is ``min (1 - J/envelope)`` over nodes where the envelope is
    representable.
    """
    env = pc.C1 * np.exp(-pc.C2 * grid.q0)
    worst = math.inf
    for _ in range(n_fields):
        slices = sample_omega_slices(pc, b, slab, grid, slab.size, rng, f_lr)
        J = _equilibria(slices, grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(env > 0, 1.0 - J / env, np.where(J > 0, -np.inf, 1.0))
        worst = min(worst, float(rel.min()))
    return _record("juttner_envelope", worst, 0.0, fields=n_fields, C1=pc.C1, C2=pc.C2)


def _kernel_margin(J, w, slab, grid, C_num, C_exp):
    bound = kernel_bound(w, C_num, C_exp)
    K = kernel_term(J, w, slab, grid)
    worst = math.inf
    for psi in (np.ones(grid.size), 1.0 / grid.q0):
        moment = K @ (grid.weights * psi)
        worst = min(worst, float(np.min(1.0 - moment / bound)))
    return worst, bound


def check_kernel_bound(
    b: BoundaryData,
    slab: SlabGrid,
    grid: MomentumGrid,
    w: float,
    rng: np.random.Generator,
    n_fields: int = 3,
    f_lr: np.ndarray | None = None,
) -> tuple[CheckRecord, CheckRecord]:
    """Kernel moments (weights 1 and 1/q0) against the closed-form bound at ``w``.

    Returns two records: one with every constant recomputed at ``w`` and
    admissible fields (the attenuated inflow plus sampled ones), and one for
    the unit envelope ``J = exp(-q0)`` with ``C1 = C2 = 1``.
    """
    pc = problem_constants(b, w, slab, grid, f_lr, with_eps=False)
    fields = [attenuated_boundary(b, w, slab, grid, f_lr)]
    fields += [sample_omega_slices(pc, b, slab, grid, slab.size, rng, f_lr) for _ in range(n_fields)]
    worst = math.inf
    for vals in fields:
        J = _equilibria(vals, grid)
        m, bound = _kernel_margin(J, w, slab, grid, pc.C1, pc.C2)
        worst = min(worst, m)
    rec = _record(f"kernel_bound[w={w:g}]", worst, 0.0, bound=bound, C1=pc.C1, C2=pc.C2)

    unit = np.broadcast_to(np.exp(-grid.q0), (slab.size, grid.size))
    m, bound = _kernel_margin(unit, w, slab, grid, 1.0, 1.0)
    unit_rec = _record(f"kernel_bound_unit[w={w:g}]", m, 0.0, bound=bound)
    return rec, unit_rec


def check_lipschitz(
    pc: ProblemConstants,
    b: BoundaryData,
    slab: SlabGrid,
    grid: MomentumGrid,
    rng: np.random.Generator,
    n_pairs: int = 100,
    f_lr: np.ndarray | None = None,
) -> CheckRecord:
    """``max_q |J_f - J_g| exp(C8 q0) <= C9 ||f - g||_1`` on random admissible pairs.

    Half of the pairs are independent draws; the other half are small
    perturbations of an admissible slice, where the Lipschitz ratio is
    closest to its derivative.
    """
    far = sample_omega_slices(pc, b, slab, grid, 2 * n_pairs, rng, f_lr)
    f = far[0::2].copy()
    g = far[1::2].copy()
    near = n_pairs // 2
    for k in range(near):
        eta = rng.uniform(0.0, 0.05, grid.size)
        cand = f[k] * (1.0 + eta)
        if check_omega_slices(cand, grid, pc.a_l, pc.a_u, pc.lam).passed:
            g[k] = cand
    Jf = _equilibria(f, grid)
    Jg = _equilibria(g, grid)
    with np.errstate(over="ignore", invalid="ignore"):
        lhs = np.max(np.abs(Jf - Jg) * np.exp(pc.C8 * grid.q0)[None, :], axis=1)
    dist = np.abs(f - g) @ grid.weights
    ratio = lhs / (pc.C9 * dist)
    worst = float(np.nanmax(ratio))
    return _record("lipschitz", 1.0 - worst, 0.0, pairs=n_pairs, max_ratio=worst, C8=pc.C8, C9=pc.C9)


# -- harness ---------------------------------------------------------------------


def verify_lemmas(
    pc: ProblemConstants,
    b: BoundaryData,
    slab: SlabGrid,
    grid: MomentumGrid,
    report_path=None,
    seed: int = 0,
    n_fields: int = 20,
    n_pairs: int = 100,
    kernel_w=KERNEL_W,
) -> VerificationReport:
    """Run all five checks and optionally write the JSON report atomically.

    Parameters
    ----------
    pc : ProblemConstants
        Constants at the working collision frequency.
    b, slab, grid
        Inflow data and grids the constants were computed on.
    report_path : path-like, optional
        Destination of the JSON report.
    seed : int
        Seed for the field sampler.

    Returns
    -------
    VerificationReport
        Never raises on a failing check; see ``report.passed``.
    """
    rng = np.random.default_rng(seed)
    f_lr = b.f_lr(grid)
    records = [check_derivative_identity(), check_derivative_bound()]
    try:
        records.append(check_envelope(pc, b, slab, grid, rng, n_fields, f_lr))
    except (DegeneracyError, MatchingError) as exc:
        records.append(CheckRecord("juttner_envelope", -math.inf, 0.0, False, {"error": str(exc)}))
    for w in kernel_w:
        records.extend(check_kernel_bound(b, slab, grid, w, rng, f_lr=f_lr))
    records.append(check_lipschitz(pc, b, slab, grid, rng, n_pairs, f_lr))
    report = VerificationReport(records)
    if report_path is not None:
        report.write(report_path)
    return report
