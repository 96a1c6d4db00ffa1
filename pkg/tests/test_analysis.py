import math
from dataclasses import replace

import numpy as np
import pytest

from relbgk.analysis import (
    boundary_constants,
    contraction_factor,
    envelope_constants,
    epsilon_threshold,
    kernel_bound,
    lipschitz_constants,
    problem_constants,
)
from relbgk.errors import DomainError, HypothesisViolationError, InfeasibleConfigurationError, MatchingError
from relbgk.grid import build_momentum_grid, build_slab_grid
from relbgk.specfun import ell, k_ratio_prime, m_of_beta, mean_energy
from relbgk.transport import BoundaryData, JuttnerSide, load_boundary_csv

from . import oracles

M1 = 20.418327788876817


@pytest.fixture(scope="module")
def coarse():
    return build_slab_grid(17), build_momentum_grid(n_q1=32, n_perp=24)


def test_a_u_for_unit_exponential(grid, slab):
    # f_LR = e^{-q0} on both half-spaces: a_u = 2 M(1) = 40.836655577753634 (mpmath)
    side = JuttnerSide(M1, 0.0, 1.0)
    bc = boundary_constants(BoundaryData.juttner(side, side), 0.1, slab, grid)
    assert bc.a_u == pytest.approx(40.836655577753634, rel=1e-8)
    assert 0 < bc.a_l <= bc.a_u
    assert 0 < bc.lam < 1


def test_vanishing_inflow_violates_hypothesis(tmp_path, coarse):
    s, g = coarse
    path = tmp_path / "zero.csv"
    rows = ["side,q1,q_perp,value"]
    for q1 in (0.5, 1.0, 2.0):
        for qp in (0.0, 1.0):
            rows += [f"L,{q1},{qp},0", f"R,{-q1},{qp},0"]
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(HypothesisViolationError):
        boundary_constants(load_boundary_csv(path), 0.1, s, g)


def test_lambda_below_one_and_per_node(boundary, slab, grid):
    bc = boundary_constants(boundary, 1e-3, slab, grid)
    assert np.all(bc.lam_per_x < 1)
    assert bc.lam == pytest.approx(bc.lam_per_x.max())
    assert bc.mass == pytest.approx(0.5 * bc.a_u)


def test_envelope_beta_l_from_ratio():
    # k_ratio(beta) = 0.37044 at beta = 0.9999952740756247 (mpmath root)
    env = envelope_constants(0.37044, 1.0, 0.5)
    assert env["beta_l"] == pytest.approx(0.9999952740756247, rel=1e-10)


def test_envelope_c0():
    # a_u / a_l = 2: C0 = sqrt(1 + 8) - 2 sqrt(2) = 3 - 2 sqrt(2)
    env = envelope_constants(0.5, 1.0, 0.9)
    assert env["C0"] == pytest.approx(0.17157287525381, rel=1e-12)


def test_envelope_formulas():
    a_l, a_u, lam = 0.3, 2.0, 0.8
    env = envelope_constants(a_l, a_u, lam)
    assert env["beta_l"] <= env["beta_u"]
    assert env["C1"] == pytest.approx(a_u / m_of_beta(env["beta_u"]))
    assert env["C2"] == pytest.approx(env["beta_l"] * env["C0"])
    assert env["C4"] == pytest.approx(env["C2"] / 2)
    q0 = np.geomspace(1.0, 1e4, 2000)
    assert np.all(q0 * np.exp(-env["C2"] * q0) <= env["C3"] * np.exp(-env["C4"] * q0) * (1 + 1e-12))


def test_degenerate_bracket_is_flagged_not_raised():
    env = envelope_constants(0.5, 1.0, 0.25)
    assert env["beta_l"] == pytest.approx(env["beta_u"], rel=1e-12)


def test_ratio_cap_at_one_cannot_bracket():
    with pytest.raises(MatchingError):
        envelope_constants(0.5, 1.0, 1.0)


def test_kernel_bound_closed_form():
    assert kernel_bound(0.01, 1.0, 1.0) == pytest.approx(2.068579552069636, rel=1e-14)
    for w, cn, ce in [(0.2, 3.0, 0.5), (1e-4, 1e5, 1e-2), (0.9, 1.0, 7.0)]:
        assert kernel_bound(w, cn, ce) == pytest.approx(oracles.kernel_bound(w, cn, ce), rel=1e-13)


def test_kernel_bound_monotone_and_vanishing():
    ws = np.linspace(1e-6, 0.3, 400)
    vals = [kernel_bound(w, 1.0, 1.0) for w in ws]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert kernel_bound(1e-300, 1.0, 1.0) < 1e-295


@pytest.mark.parametrize("w", [0.0, 1.0, -0.1, 2.0])
def test_kernel_bound_domain(w):
    with pytest.raises(DomainError):
        kernel_bound(w, 1.0, 1.0)


def test_lipschitz_constants_on_unit_bracket():
    lip = lipschitz_constants(0.5, 1.0, 1.0, 2.0, C1=1.0, C2=0.4, C3=2.0, C4=0.2)
    # k_ratio_prime decreases on [1, 2]: minimum at 2 is 0.13055483305398387 (mpmath)
    assert lip["C5"] == pytest.approx(7.659616856822943, rel=1e-9)
    assert lip["C6"] == pytest.approx(3.370441174631418, rel=1e-12)  # mean energy at beta = 1
    assert lip["C8"] == pytest.approx(0.2)
    assert lip["C5"] <= 1.0 / lip["ell_min"]


def test_c6_is_max_mean_energy(pc):
    betas = np.linspace(pc.beta_l, pc.beta_u, 200)
    assert pc.C6 == pytest.approx(max(mean_energy(b) for b in betas), rel=1e-12)
    assert pc.C6 == pytest.approx(mean_energy(pc.beta_l), rel=1e-12)


def test_c5_against_grid_minimum(pc):
    betas = np.geomspace(pc.beta_l, pc.beta_u, 2000)
    grid_min = min(k_ratio_prime(b) for b in betas)
    assert 1.0 / pc.C5 <= grid_min * (1 + 1e-9)
    assert 1.0 / pc.C5 == pytest.approx(grid_min, rel=1e-4)
    assert pc.ell_min <= min(ell(b) for b in betas)


def test_c9_assembly(pc):
    rho = pc.a_u / pc.a_l
    C7 = pc.C5 * pc.C1 * (pc.C6 + 2 * pc.C3 * math.sqrt(1 + 4 * rho**2))
    C9 = (pc.a_u / pc.a_l**2) * (
        4 * pc.C1 + 2 * pc.C1 * pc.beta_u * pc.C3 * (math.sqrt(2) + 8 * rho) + C7 * (1 + 4 * rho)
    )
    assert pc.C7 == pytest.approx(C7, rel=1e-14)
    assert pc.C9 == pytest.approx(C9, rel=1e-14)
    assert pc.C8 == min(pc.C2, pc.C4)


def test_problem_constants_invariants(pc):
    assert 0 < pc.a_l <= pc.a_u
    assert 0 < pc.lam < 1
    assert pc.beta_l <= pc.beta_u
    for name in ("C0", "C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9"):
        assert getattr(pc, name) > 0
    assert pc.kappa < 1
    assert pc.w < pc.eps
    assert pc.beta_bracket.beta_l == pc.beta_l


def test_eps_contract(boundary, slab, grid, eps_result, pc):
    eps = eps_result.eps
    assert eps_result.monotone
    assert min(eps_result.slacks.values()) >= 0
    assert contraction_factor(eps / 2, pc) < contraction_factor(eps, eps_result.constants) <= 0.9
    # equality at the active condition within the bisection width
    active = eps_result.active
    assert eps_result.slacks[active] < 1e-5
    above = problem_constants(boundary, eps * (1 + 2e-6), slab, grid, with_eps=False)
    assert contraction_factor(eps * (1 + 2e-6), above) > 0.9 or active != "contraction"


def test_eps_invariant_under_data_scaling(boundary, coarse):
    s, g = coarse
    e1 = epsilon_threshold(boundary, s, g).eps
    e2 = epsilon_threshold(boundary.scaled(4.0), s, g).eps
    # a_l, a_u and the mass scale together; the proof constants do not change
    assert e2 <= e1 * (1 + 1e-5)
    assert e2 == pytest.approx(e1, rel=1e-5)


def test_contraction_grows_with_a_u_at_fixed_a_l():
    w = 1e-40
    factors = []
    for a_u in (2.0, 4.0, 8.0):
        env = envelope_constants(0.3, a_u, 0.8)
        lip = lipschitz_constants(0.3, a_u, env["beta_l"], env["beta_u"], env["C1"], env["C2"], env["C3"], env["C4"])
        factors.append(kernel_bound(w, lip["C9"], lip["C8"]))
    assert factors[0] < factors[1] < factors[2]


def test_infeasible_window(boundary, coarse):
    s, g = coarse
    with pytest.raises(InfeasibleConfigurationError):
        epsilon_threshold(boundary, s, g, w_floor=1e-3, w_cap=0.3)


def test_bad_window(boundary, coarse):
    s, g = coarse
    with pytest.raises(DomainError):
        epsilon_threshold(boundary, s, g, w_floor=0.5, w_cap=0.3)


def test_eps_is_tiny_for_default_data(eps_result):
    # the proof constants are astronomically conservative
    assert eps_result.eps < 1e-12
    assert eps_result.active == "contraction"


def test_to_dict_roundtrip(pc):
    d = pc.to_dict()
    assert d["C9"] == pc.C9 and d["eps"] == pc.eps
    assert replace(pc, kappa=None).kappa is None
