"""HTTP front end of the solver.

Run with ``relbgk serve`` or ``uvicorn relbgk.service:app``. Configuration
errors answer 400 and every other solver error (non-convergence, a
breached invariant, a failed matching) answers 409; both carry an
:class:`ErrorResponse` body.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .api import compute_constants, constants_payload, profiles_csv, run_sweep, run_verify, solve_payload
from .config import RunConfig, VerifySettings
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    HypothesisViolationError,
    InfeasibleConfigurationError,
    RelBGKError,
)
from .schemas import (
    ConstantsResponse,
    ErrorResponse,
    ProblemModel,
    SolveResponse,
    SweepRequest,
    SweepResponse,
    VerifyRequest,
    VerifyResponse,
)
from .solver import picard_solve

app = FastAPI(title="relbgk", version=__version__)

CONFIG_ERRORS = (ConfigurationError, DomainError, HypothesisViolationError, InfeasibleConfigurationError)


def _error(status: int, kind: str, exc: Exception, history=None) -> JSONResponse:
    body = ErrorResponse(kind=kind, error=type(exc).__name__, message=str(exc), residual_history=history)
    return JSONResponse(status_code=status, content=body.model_dump())


@app.exception_handler(RelBGKError)
async def _relbgk_error(request: Request, exc: RelBGKError):
    if isinstance(exc, CONFIG_ERRORS):
        return _error(400, "configuration", exc)
    if isinstance(exc, ConvergenceError):
        return _error(409, "failure", exc, exc.residual_history)
    return _error(409, "failure", exc)


def _clean(obj):
    # JSON has no inf/nan
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/config/default", response_model=ProblemModel)
def default_problem():
    return ProblemModel()


@app.post("/constants", response_model=ConstantsResponse, response_model_by_alias=True)
def constants(problem: ProblemModel):
    return constants_payload(compute_constants(problem.to_config()))


@app.post("/solve", response_model=SolveResponse, response_model_by_alias=True)
def solve(problem: ProblemModel):
    result = picard_solve(problem.to_config())
    return SolveResponse(
        report=_clean(solve_payload(result)),
        profiles_csv=profiles_csv(result),
        constants=constants_payload(result.constants),
    )


@app.post("/verify", response_model=VerifyResponse, response_model_by_alias=True)
def verify(req: VerifyRequest):
    run = RunConfig(req.problem.to_config(), VerifySettings(req.seed, req.n_fields, req.n_pairs))
    return _clean(run_verify(run).to_dict())


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest):
    return _clean(run_sweep(req.problem.to_config(), req.w_list, workers=req.workers or 1))
