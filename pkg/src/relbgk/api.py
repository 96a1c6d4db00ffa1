"""Operations shared by the command line and the HTTP service.

Every function takes a :class:`~relbgk.config.RunConfig` (or its solve part)
and returns JSON-ready dictionaries; files are written atomically.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional

from .analysis import ProblemConstants, contraction_factor, epsilon_threshold, problem_constants
from .config import RunConfig
from .errors import ConfigurationError, ConvergenceError
from .grid import build_momentum_grid, build_slab_grid
from .solver import FLUX_NAMES, SolveConfig, SolveResult, picard_solve
from .verify import VerificationReport, verify_lemmas, write_json_atomic

__all__ = [
    "PROFILE_COLUMNS",
    "constants_payload",
    "compute_constants",
    "run_solve",
    "solve_payload",
    "run_verify",
    "run_sweep",
    "profiles_csv",
    "sweep_csv",
]

log = logging.getLogger(__name__)

PROFILE_COLUMNS = ("x", "n", "u1", "u2", "u3", "beta") + FLUX_NAMES
SWEEP_COLUMNS = ("w", "within_theorem", "kappa", "empirical_contraction", "iterations", "converged", "error")


def _grids(cfg: SolveConfig):
    return build_slab_grid(cfg.slab_nodes), build_momentum_grid(cfg.momentum)


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def constants_payload(pc: ProblemConstants) -> dict:
    """Constants as JSON, with ``lam`` exported under ``lambda``."""
    d = pc.to_dict()
    d["lambda"] = d.pop("lam")
    return {k: _finite_or_none(v) for k, v in d.items()}


def compute_constants(cfg: SolveConfig) -> ProblemConstants:
    """All constants at ``cfg.w`` (``eps/2`` when unset), including ``eps`` and ``kappa``."""
    cfg.validate()
    slab, grid = _grids(cfg)
    b = cfg.boundary
    f_lr = b.f_lr(grid)
    eps = epsilon_threshold(
        b, slab, grid, f_lr=f_lr, w_cap=cfg.w_cap, kappa_target=cfg.kappa_target, w_floor=cfg.w_floor
    ).eps
    w = 0.5 * eps if cfg.w is None else cfg.w
    pc = problem_constants(b, w, slab, grid, f_lr, with_eps=False)
    return replace(pc, eps=eps, kappa=contraction_factor(w, pc) if w < 1.0 else None)


def profiles_csv(result: SolveResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROFILE_COLUMNS)
    prof, fl = result.profile, result.fluxes
    for j, x in enumerate(fl.x):
        row = [x, prof.n[j], *prof.u[j], prof.beta[j]] + [fl.fluxes[k][j] for k in FLUX_NAMES]
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def solve_payload(result: SolveResult) -> dict:
    """``report.json`` content: the solve report plus the final macroscopic profile."""
    rep = result.report.to_dict()
    for key in ("eps", "kappa", "empirical_contraction", "fixed_point_residual"):
        rep[key] = _finite_or_none(rep[key])
    prof = result.profile
    rep["profile"] = {
        "x": result.fluxes.x.tolist(),
        "n": prof.n.tolist(),
        "u": prof.u.tolist(),
        "alpha": prof.alpha.tolist(),
        "beta": prof.beta.tolist(),
    }
    return rep


def run_solve(cfg: SolveConfig, output_dir=None) -> tuple[SolveResult, dict]:
    """Solve and write ``report.json``, ``profiles.csv`` and ``constants.json``.

    Returns the result and a mapping of written file names to paths (empty
    when no output directory is configured).
    """
    result = picard_solve(cfg)
    out = output_dir if output_dir is not None else cfg.output_dir
    paths = {}
    if out is not None:
        out = Path(out)
        paths = {
            "report": out / "report.json",
            "profiles": out / "profiles.csv",
            "constants": out / "constants.json",
        }
        write_json_atomic(paths["report"], solve_payload(result))
        _write_text_atomic(paths["profiles"], profiles_csv(result))
        write_json_atomic(paths["constants"], constants_payload(result.constants))
    return result, {k: str(v) for k, v in paths.items()}


def run_verify(run: RunConfig, report_path=None) -> VerificationReport:
    """Verification harness at the configured (or automatic) collision frequency."""
    cfg = run.solve
    pc = compute_constants(cfg)
    slab, grid = _grids(cfg)
    return verify_lemmas(
        pc,
        cfg.boundary,
        slab,
        grid,
        report_path=report_path,
        seed=run.verify.seed,
        n_fields=run.verify.n_fields,
        n_pairs=run.verify.n_pairs,
    )


def _sweep_one(args) -> dict:
    cfg, w, eps = args
    row = {"w": w, "within_theorem": w < eps, "kappa": None, "empirical_contraction": None,
           "iterations": None, "converged": False, "error": None}
    try:
        slab, grid = _grids(cfg)
        pc = problem_constants(cfg.boundary, w, slab, grid, with_eps=False)
        kappa = contraction_factor(w, pc) if w < 1.0 else None
        pc = replace(pc, eps=eps, kappa=kappa)
        row["kappa"] = kappa
        res = picard_solve(replace(cfg, w=w, allow_beyond_eps=True), constants=pc)
        row.update(
            empirical_contraction=res.report.empirical_contraction,
            iterations=res.report.iterations,
            converged=res.report.converged,
        )
    except ConvergenceError as exc:
        row.update(iterations=len(exc.residual_history), error=str(exc))
    except Exception as exc:  # one failing w must not abort the table
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(cfg: SolveConfig, w_list: Iterable[float], workers: Optional[int] = None, output_dir=None) -> dict:
    """Analytic versus empirical contraction and iteration counts for each ``w``.

    Solves at different ``w`` are independent and run in a process pool
    (``workers=1`` runs them in-process). Every solve is allowed past the
    admissible threshold; ``within_theorem`` labels the rows.
    """
    w_list = [float(w) for w in w_list]
    if not w_list:
        raise ConfigurationError("empty w list")
    for w in w_list:
        if not (w > 0 and math.isfinite(w)):
            raise ConfigurationError(f"w must be positive, got {w}")
    cfg.validate()
    slab, grid = _grids(cfg)
    eps = epsilon_threshold(
        cfg.boundary, slab, grid, w_cap=cfg.w_cap, kappa_target=cfg.kappa_target, w_floor=cfg.w_floor
    ).eps
    jobs = [(cfg, w, eps) for w in w_list]
    if workers is None:
        workers = min(len(jobs), os.cpu_count() or 1)
    if workers <= 1 or len(jobs) == 1:
        rows = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    payload = {"eps": eps, "rows": rows}
    out = output_dir if output_dir is not None else cfg.output_dir
    if out is not None:
        write_json_atomic(Path(out) / "sweep.json", payload)
        _write_text_atomic(Path(out) / "sweep.csv", sweep_csv(rows))
    return payload


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if r[k] is None else r[k]) for k in SWEEP_COLUMNS})
    return buf.getvalue()
