import math

import mpmath as mp
import numpy as np
import pytest

from relbgk.errors import ConfigurationError, DomainError
from relbgk.fields import MacroFields, juttner_values
from relbgk.grid import DistField, build_momentum_grid, build_slab_grid
from relbgk.transport import (
    BoundaryData,
    JuttnerSide,
    apply_phi,
    attenuated_boundary,
    cell_weights,
    kernel_moment,
    kernel_term,
    load_boundary_csv,
    write_boundary_csv,
)

from . import oracles


@pytest.fixture(scope="module")
def small():
    return build_slab_grid(9), build_momentum_grid(n_q1=16, n_perp=12)


def test_attenuation_scalar(boundary):
    g = build_momentum_grid(n_q1=16, n_perp=12)
    s = build_slab_grid(3)
    fe = attenuated_boundary(boundary, 0.1, s, g)
    flr = boundary.f_lr(g)
    pos = g.q1 > 0
    np.testing.assert_allclose(fe[-1, pos], np.exp(-0.1 / g.q1[pos]) * flr[pos], rtol=1e-15)
    # q1 = 0.5, x = 1: factor e^{-0.2}
    assert math.exp(-0.1 * 1.0 / 0.5) == pytest.approx(0.8187307530779818, rel=1e-15)


def test_attenuation_traces_and_limits(boundary, slab, grid):
    flr = boundary.f_lr(grid)
    fe = attenuated_boundary(boundary, 0.3, slab, grid, flr)
    assert np.array_equal(fe[0, grid.q1 > 0], flr[grid.q1 > 0])
    assert np.array_equal(fe[-1, grid.q1 < 0], flr[grid.q1 < 0])
    assert np.all(fe <= flr[None, :]) and np.all(fe >= 0)
    assert np.array_equal(attenuated_boundary(boundary, 0.0, slab, grid, flr), np.tile(flr, (slab.size, 1)))
    assert np.all(attenuated_boundary(boundary, 0.1, slab, grid, flr) >= fe)
    with pytest.raises(DomainError):
        attenuated_boundary(boundary, -0.1, slab, grid)


@pytest.mark.parametrize("z", [0.0, 1e-8, 0.05, 0.0999999, 0.1, 0.1000001, 3.0, 699.9, 700.1, 1e6])
def test_cell_weights_against_mpmath(z):
    decay, a, b = cell_weights(np.array([z]))
    zz = mp.mpf(z)
    # int_0^1 z e^{-z s} (1 - s) ds and int_0^1 z e^{-z s} s ds
    ra = mp.quad(lambda s: zz * mp.exp(-zz * s) * (1 - s), [0, 1]) if z else mp.mpf(0)
    rb = mp.quad(lambda s: zz * mp.exp(-zz * s) * s, [0, 1]) if z else mp.mpf(0)
    assert a[0] == pytest.approx(float(ra), rel=1e-12, abs=1e-300)
    assert b[0] == pytest.approx(float(rb), rel=1e-12, abs=1e-300)
    assert decay[0] == pytest.approx(math.exp(-z), rel=1e-14, abs=1e-300)
    assert a[0] >= 0 and b[0] >= 0


def test_kernel_term_constant_source_closed_form(small):
    s, g = small
    w = 0.4
    J = np.tile(np.exp(-g.q0), (s.size, 1))
    K = kernel_term(J, w, s, g)
    depth = np.where(g.q1[None, :] > 0, s.x[:, None], 1 - s.x[:, None])
    expected = J * (1 - np.exp(-w * depth / np.abs(g.q1)[None, :]))
    np.testing.assert_allclose(K, expected, rtol=1e-12, atol=1e-300)


def test_kernel_term_affine_source_against_brute_force(small):
    s, g = small
    w = 0.7
    a0, a1 = 0.8, 0.5
    J = (a0 + a1 * s.x)[:, None] * np.exp(-g.q0)[None, :]
    K = kernel_term(J, w, s, g)
    for k in range(0, g.size, 37):
        c = w / abs(g.q1[k])
        amp = math.exp(-g.q0[k])
        for j in (3, s.size - 1):
            x = s.x[j]
            if g.q1[k] > 0:
                y = np.linspace(0.0, x, 10_001)
                integrand = c * np.exp(-c * (x - y)) * (a0 + a1 * y) * amp
            else:
                y = np.linspace(x, 1.0, 10_001)
                integrand = c * np.exp(-c * (y - x)) * (a0 + a1 * y) * amp
            if y[-1] == y[0]:
                assert K[j, k] == 0.0
                continue
            # trapezoid on 10^4 points, adequate while c * h stays small
            ref = np.trapezoid(integrand, y)
            if c * (y[1] - y[0]) < 1e-3:
                assert K[j, k] == pytest.approx(ref, rel=1e-8, abs=1e-14)
            exact = float(mp.quad(lambda t: c * mp.exp(-c * abs(x - t)) * (a0 + a1 * t) * amp, [y[0], y[-1]]))
            assert K[j, k] == pytest.approx(exact, rel=1e-10, abs=1e-300)


def test_kernel_term_stiff_limit_collapses_to_local_value(small):
    s, g = small
    J = np.tile(np.exp(-g.q0), (s.size, 1)) * (1 + s.x)[:, None]
    K = kernel_term(J, 1e6, s, g)
    # c h >> 1 everywhere: the kernel is a delta at y = x except at the inflow node
    np.testing.assert_allclose(K[1:-1], J[1:-1], rtol=1e-3)
    assert np.all(np.isfinite(K))


def test_apply_phi_traces_envelope_positivity(boundary, slab, grid):
    flr = boundary.f_lr(grid)
    w = 0.5
    f = DistField(attenuated_boundary(boundary, w, slab, grid, flr), slab, grid)
    out = apply_phi(f, boundary, w, f_lr=flr)
    fe = f.values
    assert np.array_equal(out.values[0, grid.q1 > 0], flr[grid.q1 > 0])
    assert np.array_equal(out.values[-1, grid.q1 < 0], flr[grid.q1 < 0])
    assert np.all(out.values >= fe)
    assert np.all(out.values >= 0)


def test_apply_phi_w_zero_returns_flr(boundary, slab, grid):
    f = DistField.broadcast(np.exp(-grid.q0), slab, grid)
    out = apply_phi(f, boundary, 0.0)
    assert np.array_equal(out.values, np.tile(boundary.f_lr(grid), (slab.size, 1)))


def test_apply_phi_negative_w(boundary, slab, grid):
    f = DistField.broadcast(np.exp(-grid.q0), slab, grid)
    with pytest.raises(DomainError):
        apply_phi(f, boundary, -1.0)


def test_kernel_monotone_in_source(small):
    s, g = small
    rng = np.random.default_rng(3)
    J1 = rng.random((s.size, g.size))
    J2 = J1 + rng.random((s.size, g.size))
    assert np.all(kernel_term(J2, 0.3, s, g) >= kernel_term(J1, 0.3, s, g))


def test_kernel_moment_unit_envelope(slab, grid):
    # J = e^{-q0} obeys the envelope with C1 = C2 = 1; the bound at w = 0.01 (mpmath)
    assert oracles.kernel_bound(0.01, 1.0, 1.0) == pytest.approx(2.068579552069636, rel=1e-14)
    f = DistField.broadcast(np.exp(-grid.q0), slab, grid)
    for weight in ("1", "1/q0"):
        vals = kernel_moment(f, 0.01, weight)
        assert np.all(vals <= 2.068579552069636)


def test_kernel_moment_vanishes_monotonically(slab, grid):
    f = DistField.broadcast(np.exp(-grid.q0), slab, grid)
    ws = [0.08, 0.02, 0.005, 1e-3, 1e-5]
    sups = [kernel_moment(f, w).max() for w in ws]
    assert all(a > b for a, b in zip(sups, sups[1:]))
    assert sups[-1] < 1e-3


@pytest.mark.parametrize("w", [0.0, 1.0, -0.5])
def test_kernel_moment_domain(slab, grid, w):
    f = DistField.broadcast(np.exp(-grid.q0), slab, grid)
    with pytest.raises(DomainError):
        kernel_moment(f, w)


def test_kernel_moment_weight_name(slab, grid):
    f = DistField.broadcast(np.exp(-grid.q0), slab, grid)
    with pytest.raises(DomainError):
        kernel_moment(f, 0.1, "q0")


def test_juttner_side_validation():
    with pytest.raises(ConfigurationError):
        JuttnerSide(0.0, 0.1, 1.0)
    with pytest.raises(ConfigurationError):
        JuttnerSide(1.0, 0.1, -1.0)


def test_scaled_boundary(boundary, grid):
    np.testing.assert_allclose(boundary.scaled(2.0).f_lr(grid), 2.0 * boundary.f_lr(grid), rtol=1e-14, atol=1e-300)


def test_boundary_csv_roundtrip(tmp_path, boundary):
    g = build_momentum_grid(n_q1=16, n_perp=12)
    path = tmp_path / "inflow.csv"
    write_boundary_csv(boundary, g, path)
    tab = load_boundary_csv(path)
    ref = boundary.f_lr(g)
    # barycentric weights at a table node are exact up to round-off, which
    # leaks neighbour values into far-tail entries
    tol = 1e-12 * ref.max()
    np.testing.assert_allclose(tab.f_lr(g), ref, rtol=1e-12, atol=tol)
    np.testing.assert_allclose(tab.scaled(3.0).f_lr(g), 3.0 * ref, rtol=1e-12, atol=3 * tol)


def test_boundary_csv_full3d(tmp_path, boundary):
    g = build_momentum_grid(mode="full3d", n_q1=8, q_max=4.0)
    path = tmp_path / "inflow3d.csv"
    write_boundary_csv(boundary, g, path)
    ref = boundary.f_lr(g)
    np.testing.assert_allclose(load_boundary_csv(path).f_lr(g), ref, rtol=1e-12, atol=1e-12 * ref.max())
    with pytest.raises(ConfigurationError):
        load_boundary_csv(path).f_lr(build_momentum_grid(n_q1=8, n_perp=6))


@pytest.mark.parametrize(
    "body,msg",
    [
        ("side,q1,value\nL,1,1\n", "expected columns"),
        ("side,q1,q_perp,value\nL,-1,0.5,1\n", "q1 > 0"),
        ("side,q1,q_perp,value\nR,1,0.5,1\n", "q1 < 0"),
        ("side,q1,q_perp,value\nL,1,0.5,-1\n", ">= 0"),
        ("side,q1,q_perp,value\nX,1,0.5,1\n", "L or R"),
        ("side,q1,q_perp,value\nL,1,abc,1\n", "could not convert"),
        ("side,q1,q_perp,value\nL,1,0.5,1\nR,-1,0.5,1\n", "too few rows"),
    ],
)
def test_boundary_csv_validation(tmp_path, body, msg):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ConfigurationError, match=msg):
        load_boundary_csv(path)


def test_juttner_side_values_match_fields(grid):
    side = JuttnerSide(1.0, 0.3, 1.0)
    np.testing.assert_array_equal(side.values(grid), juttner_values(MacroFields.from_beta(1.0, 0.3, 1.0), grid))


def test_parametric_boundary_kind(boundary):
    assert boundary.kind == "parametric_juttner"
    assert isinstance(BoundaryData.juttner(boundary.left, boundary.right), BoundaryData)
