"""Stationary relativistic BGK (Marle) model on a slab: Picard solver and certified constants."""

__version__ = "0.1.0"

from .analysis import ProblemConstants, contraction_factor, epsilon_threshold, kernel_bound, problem_constants
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    HypothesisViolationError,
    InfeasibleConfigurationError,
    InvariantBreachError,
    MatchingError,
    OutOfRangeError,
    RelBGKError,
)
from .fields import MacroFields, eckart_fields, juttner_field
from .grid import DistField, MomentumGridSpec, build_momentum_grid, build_slab_grid, integrate_q, l1_distance, moment_vector
from .omega import check_omega
from .solver import SolveConfig, default_boundary, flux_diagnostics, picard_solve
from .specfun import bessel_k, ell, invert_k_ratio, k_ratio, k_ratio_prime, m_of_beta
from .transport import BoundaryData, JuttnerSide, apply_phi, load_boundary_csv
from .verify import verify_lemmas
