"""Request and response models of the HTTP service."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field

from .analysis import KAPPA_TARGET, W_CAP, W_FLOOR
from .grid import MomentumGridSpec
from .solver import SolveConfig, default_boundary
from .transport import PARAMETRIC, BoundaryData, JuttnerSide
from .errors import ConfigurationError


class JuttnerSideModel(BaseModel):
    n: float = Field(gt=0)
    u: float = 0.0
    beta: float = Field(gt=0)


class MomentumModel(BaseModel):
    mode: Literal["axisymmetric", "full3d"] = "axisymmetric"
    n_q1: int = 64
    n_perp: int = 48
    q_max: Optional[float] = None
    scale: float = 8.0


def _default_side(which: str) -> JuttnerSideModel:
    s = getattr(default_boundary(), which)
    return JuttnerSideModel(n=s.n, u=s.u[0], beta=s.beta)


class ProblemModel(BaseModel):
    """Everything a solve needs; ``w = None`` means half the admissible threshold."""

    w: Optional[float] = Field(default=None, gt=0)
    allow_beyond_eps: bool = False
    kappa_target: float = KAPPA_TARGET
    w_cap: float = W_CAP
    w_floor: float = W_FLOOR
    slab_nodes: int = Field(default=65, ge=2)
    momentum: MomentumModel = Field(default_factory=MomentumModel)
    left: JuttnerSideModel = Field(default_factory=lambda: _default_side("left"))
    right: JuttnerSideModel = Field(default_factory=lambda: _default_side("right"))
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=200, ge=1)

    def to_config(self) -> SolveConfig:
        cfg = SolveConfig(
            w=self.w,
            boundary=BoundaryData.juttner(
                JuttnerSide(self.left.n, self.left.u, self.left.beta),
                JuttnerSide(self.right.n, self.right.u, self.right.beta),
            ),
            slab_nodes=self.slab_nodes,
            momentum=MomentumGridSpec(**self.momentum.model_dump()),
            tol=self.tol,
            max_iter=self.max_iter,
            kappa_target=self.kappa_target,
            w_cap=self.w_cap,
            w_floor=self.w_floor,
            allow_beyond_eps=self.allow_beyond_eps,
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_config(cls, cfg: SolveConfig) -> "ProblemModel":
        b = cfg.boundary
        if b.kind != PARAMETRIC:
            raise ConfigurationError("the service accepts parametric Jüttner inflow only")
        m = cfg.momentum
        return cls(
            w=cfg.w,
            allow_beyond_eps=cfg.allow_beyond_eps,
            kappa_target=cfg.kappa_target,
            w_cap=cfg.w_cap,
            w_floor=cfg.w_floor,
            slab_nodes=cfg.slab_nodes,
            momentum=MomentumModel(mode=m.mode, n_q1=m.n_q1, n_perp=m.n_perp, q_max=m.q_max, scale=m.scale),
            left=JuttnerSideModel(n=b.left.n, u=b.left.u[0], beta=b.left.beta),
            right=JuttnerSideModel(n=b.right.n, u=b.right.u[0], beta=b.right.beta),
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )


class ConstantsResponse(BaseModel):
    w: float
    a_l: float
    a_u: float
    lambda_: float = Field(alias="lambda")
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

    model_config = {"populate_by_name": True}


class SolveResponse(BaseModel):
    report: dict
    profiles_csv: str
    constants: ConstantsResponse


class VerifyRequest(BaseModel):
    problem: ProblemModel = Field(default_factory=ProblemModel)
    seed: int = 0
    n_fields: int = Field(default=20, ge=1)
    n_pairs: int = Field(default=100, ge=1)


class CheckRecordModel(BaseModel):
    name: str
    margin: Optional[float]
    tolerance: float
    passed: bool = Field(alias="pass")
    detail: dict = Field(default_factory=dict)

    model_config = {"populate_by_name": True}


class VerifyResponse(BaseModel):
    passed: bool
    records: List[CheckRecordModel]


class SweepRequest(BaseModel):
    problem: ProblemModel = Field(default_factory=ProblemModel)
    w_list: List[float] = Field(min_length=1)
    workers: Optional[int] = Field(default=None, ge=1)


class SweepRow(BaseModel):
    w: float
    within_theorem: bool
    kappa: Optional[float] = None
    empirical_contraction: Optional[float] = None
    iterations: Optional[int] = None
    converged: bool
    error: Optional[str] = None


class SweepResponse(BaseModel):
    eps: float
    rows: List[SweepRow]


class ErrorResponse(BaseModel):
    kind: Literal["configuration", "failure"]
    error: str
    message: str
    residual_history: Optional[List[float]] = None
