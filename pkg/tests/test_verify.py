import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from axiswirl import midfield
from axiswirl.farfield import explicit_solution, farfield_rhs, r_star
from axiswirl.gas import FarFieldDatum, GasModel, sound_speed
from axiswirl.pipeline import solve
from axiswirl.verify import (
    RESIDUAL_TOL,
    appendix_monitors,
    jacobian_crosscheck,
    residual_check,
    s_end_convergence,
    solution_monitors,
    strong_form_rhs,
    surface_drift,
    vacuum_edge_fit,
)

GAS = GasModel(1.4)


@given(st.floats(1.5, 20.0), st.floats(0.1, 3.0), st.floats(0.0, 1.0), st.floats(0.0, 2.0))
def test_strong_form_agrees_with_far_field_form(r, rho, u, v):
    # d/ds = -r^2 d/dr
    try:
        expected = farfield_rhs(GAS, (rho, u, v), 1.0 / r)
    except Exception:
        return
    drho, du, dv, _ = strong_form_rhs(GAS, r, rho, u, v)
    got = -r * r * np.array([drho, du, dv])
    np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-12)


@given(st.floats(0.1, 3.0), st.floats(1.01, 50.0))
def test_explicit_far_field_solves_strong_form_exactly(v0, factor):
    d = FarFieldDatum(1.0, 0.0, v0)
    r = r_star(GAS, d) * factor
    s = explicit_solution(GAS, d, r)
    drho, du, dv, _ = strong_form_rhs(GAS, r, s.rho, s.u, s.v)
    # analytic r-derivatives of u = v0^2/r and v = (v0/r) sqrt(r^2 - v0^2)
    exact_du = -v0 * v0 / (r * r)
    exact_dv = v0 ** 3 / (r * r * math.sqrt(r * r - v0 * v0))
    assert abs(drho) < 1e-12
    assert du == pytest.approx(exact_du, rel=1e-12, abs=1e-15)
    assert dv == pytest.approx(exact_dv, rel=1e-12, abs=1e-15)


def test_residuals_of_Ia(fig_solution):
    rep = residual_check(fig_solution)
    assert rep.max_residual < RESIDUAL_TOL
    assert rep.max_mismatch < 1e-6
    by_kind = {p.kind: p for p in rep.pieces}
    # finite differencing limits the closed-form piece to about 1e-10
    assert by_kind["explicit_farfield"].max_h2 < 1e-9
    assert rep.invariant_drifts["explicit_surface"] < 1e-13


def test_constant_core_residual_is_zero():
    c0 = sound_speed(GAS, 1.0)
    sol = solve(GAS, FarFieldDatum(1.0, 0.5 * c0, 0.0))
    rep = residual_check(sol)
    core = [p for p in rep.pieces if p.kind == "constant_core"]
    assert core and core[0].max_h == 0.0 and core[0].max_h2 == 0.0
    assert rep.invariant_drifts["max_abs_v"] == 0.0


def test_residual_mesh_convergence(fig_solution):
    coarse = residual_check(fig_solution, n=200)
    fine = residual_check(fig_solution, n=400)
    assert coarse.max_residual < RESIDUAL_TOL and fine.max_residual < RESIDUAL_TOL
    for p in fine.pieces:
        # halving the stencil step changes nothing at the reported scale
        assert p.consistency < 0.1 * RESIDUAL_TOL


def test_monitors_vacuum_orbit_gamma_16():
    gas = GasModel(1.6)
    sol = solve(gas, FarFieldDatum(1.0, 0.0, 5.0 * sound_speed(gas, 1.0)))
    (rep,) = solution_monitors(sol)
    assert rep.ok, rep.violations
    assert 0.0 < rep.epsilon < 1.0
    assert rep.beta > 2.0
    assert rep.s_end_rel_change < 1e-4


def test_monitors_flux_gamma_12():
    gas = GasModel(1.2)
    c0 = sound_speed(gas, 1.0)
    mh = midfield.find_Ih(gas).M_h
    sol = solve(gas, FarFieldDatum(1.0, 0.0, 1.5 * mh * c0))
    (rep,) = solution_monitors(sol)
    assert rep.ok, rep.violations
    assert rep.entry_flux_max < 0.0


def test_s_end_finite_for_edge_orbit():
    c0 = sound_speed(GAS, 1.0)
    out = midfield.classify_midfield(GAS, FarFieldDatum(1.0, 0.4 * c0, 0.4 * c0))
    assert out.kind == "edge"
    assert math.isfinite(out.s_end)
    assert s_end_convergence(GAS, out.trajectory) < 1e-4


def test_monitor_report_direct():
    out = midfield.classify_launch(GAS, 0.9)
    assert out.kind == "vacuum"
    assert appendix_monitors(GAS, out.trajectory).ok


@pytest.mark.parametrize("g", [1.1, 1.4, 1.7])
def test_jacobian_crosscheck(g):
    checks = jacobian_crosscheck(GasModel(g))
    assert len(checks) == 11
    bad = [c for c in checks if not c.ok]
    assert not bad, bad


def test_jacobian_crosscheck_values():
    checks = {c.where: c for c in jacobian_crosscheck(GAS, alphas=[0.25])}
    np.testing.assert_allclose(checks["hyperbolic_point"].expected, [-0.15244, -0.017493, 0.012491], atol=1e-5)
    np.testing.assert_allclose(checks["edge alpha=0.25"].expected, [-1.40625, -0.28125, 0.0], atol=1e-14)
    np.testing.assert_allclose(checks["inner origin"].computed, [-2.0, 0.0, 2.0], atol=1e-8)


def test_surface_drift():
    assert surface_drift(GAS) < 1e-8


def test_vacuum_edge_fit():
    sol = solve(GAS, FarFieldDatum(1.0, 0.0, 5.0 * sound_speed(GAS, 1.0)))
    fit = vacuum_edge_fit(sol)
    assert fit.slope_u_minus_r == pytest.approx(-1.0 / 3.0, rel=0.02)
    assert fit.slope_c == pytest.approx(0.21082, rel=0.02)
    assert fit.swirl_exponent == pytest.approx(3.0, rel=0.05)
    assert fit.pseudo_mach == pytest.approx(1.58114, rel=0.01)
