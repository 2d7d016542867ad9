import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from axiswirl.errors import DomainError, ValidationError
from axiswirl.farfield import explicit_solution, r_star
from axiswirl.gas import (
    FarFieldDatum,
    GasModel,
    InnerState,
    MidState,
    PrimitiveState,
    e_point,
    e_to_inner_target,
    from_degenerate,
    from_inner,
    from_mid,
    mach_numbers,
    sound_speed,
    to_degenerate,
    to_inner,
    to_mid,
)

gammas = st.floats(1.0, 1.99)
gammas_poly = st.floats(1.01, 1.99)


def test_sound_speed_examples():
    assert sound_speed(GasModel(1.4), 1.0) == pytest.approx(1.18322, abs=1e-5)
    assert sound_speed(GasModel(1.5), 0.0) == 0.0
    assert sound_speed(GasModel(1.0, a2=4.0), 7.0) == 2.0


@given(gammas, st.floats(0.1, 10.0), st.floats(1e-3, 1e3))
def test_sound_speed_definition(g, a2, rho):
    c = sound_speed(GasModel(g, a2), rho)
    assert c * c == pytest.approx(g * a2 * rho ** (g - 1.0), rel=1e-12)


def test_sound_speed_vectorized():
    c = sound_speed(GasModel(1.4), np.array([0.0, 1.0, 2.0]))
    assert c.shape == (3,)
    assert c[0] == 0.0


@pytest.mark.parametrize("g", [0.99, 2.0, 2.5, math.nan])
def test_gamma_range(g):
    with pytest.raises(ValidationError, match="gamma out of supported range"):
        GasModel(g)


def test_datum_validation():
    with pytest.raises(ValidationError):
        FarFieldDatum(0.0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        FarFieldDatum(1.0, -0.1, 1.0)
    d, sign = FarFieldDatum.normalized(1.0, 0.2, -0.5)
    assert (d.v0, sign) == (0.5, -1)


def test_negative_density_rejected():
    with pytest.raises(DomainError):
        PrimitiveState(1.0, -1.0, 0.0, 0.0)


def test_pseudo_mach_at_r_star():
    # c0 = 1 needs gamma a2 = 1; v0 = 1 gives M0 = 1
    gas = GasModel(1.4, a2=1.0 / 1.4)
    d = FarFieldDatum(1.0, 0.0, 1.0)
    rs = r_star(gas, d)
    mp = mach_numbers(gas, explicit_solution(gas, d, rs))
    # closed form along the explicit far field: M_s = sqrt(r^2 - v0^2)/c0
    assert mp.pseudo_mach == pytest.approx(math.sqrt(rs * rs - 1.0), abs=1e-12)
    # at r* this is (sqrt(M0^2 + 1/4) + 1/2)^(1/2), since r*^2 = r* + M0^2 when c0 = 1
    assert mp.pseudo_mach == pytest.approx(math.sqrt(math.sqrt(1.25) + 0.5), abs=1e-12)
    assert mp.pseudo_mach > 1.0


@given(st.floats(0.01, 20.0))
def test_pseudo_mach_at_r_star_formula(m0):
    gas = GasModel(1.4, a2=1.0 / 1.4)
    d = FarFieldDatum(1.0, 0.0, m0)
    mp = mach_numbers(gas, explicit_solution(gas, d, r_star(gas, d)))
    assert mp.pseudo_mach == pytest.approx(math.sqrt(math.sqrt(m0 * m0 + 0.25) + 0.5), rel=1e-12)


def test_mach_of_still_state():
    gas = GasModel(1.4)
    st_ = PrimitiveState(2.0, 1.0, 0.0, 0.0)
    mp = mach_numbers(gas, st_)
    assert mp.mach == 0.0
    assert mp.pseudo_mach == pytest.approx(2.0 / sound_speed(gas, 1.0))


@given(gammas, st.floats(0.01, 3.0), st.floats(1.0, 50.0))
def test_mach_constant_on_explicit_far_field(g, v0, factor):
    gas = GasModel(g)
    d = FarFieldDatum(1.0, 0.0, v0)
    r = r_star(gas, d) * factor
    assert mach_numbers(gas, explicit_solution(gas, d, r)).mach == pytest.approx(
        v0 / sound_speed(gas, 1.0), rel=1e-12)


def test_to_mid_example():
    # c = 1 at rho = 1 needs gamma a2 = 1
    gas = GasModel(1.4, a2=1.0 / 1.4)
    m = to_mid(PrimitiveState(2.0, 1.0, 1.0, 0.5), gas)
    assert (m.I, m.J, m.K, m.s) == pytest.approx((0.5, 0.25, 0.5, 0.5), abs=1e-15)


@given(gammas_poly, st.floats(0.1, 10.0), st.floats(1e-3, 1e3), st.floats(-5, 5), st.floats(-5, 5))
def test_mid_round_trip(g, xi, rho, u, v):
    gas = GasModel(g)
    s = PrimitiveState(xi, rho, u, v)
    back = from_mid(to_mid(s, gas), gas)
    assert back.xi == pytest.approx(xi, rel=1e-14)
    assert back.rho == pytest.approx(rho, rel=1e-13)
    assert back.u == pytest.approx(u, rel=1e-14, abs=1e-300)
    assert back.v == pytest.approx(v, rel=1e-14, abs=1e-300)


@given(st.floats(0.1, 10.0), st.floats(1e-3, 1e3), st.floats(-5, 5), st.floats(0, 5))
def test_inner_round_trips(xi, rho, u, v):
    gas = GasModel(1.3)
    s = PrimitiveState(xi, rho, u, v)
    inner = to_inner(s, gas)
    back = from_inner(inner, gas)
    assert (back.xi, back.rho, back.u, back.v) == pytest.approx((xi, rho, u, v), rel=1e-12, abs=1e-15)
    U, V, R = from_degenerate(to_degenerate(inner))
    assert (U, V, R) == pytest.approx((inner.U, inner.V, inner.R), rel=1e-12, abs=1e-15)


def test_isothermal_from_mid_needs_density():
    gas = GasModel(1.0)
    with pytest.raises(DomainError):
        from_mid(MidState(0.1, 0.1, 0.5, 0.5), gas)
    assert from_mid(MidState(0.1, 0.1, 0.5, 0.5), gas, rho=3.0).rho == 3.0
    assert from_inner(InnerState(0.1, 0.2, 1.0, 1.0), gas, rho=2.0).rho == 2.0


def test_e_point_examples():
    assert e_point(0.5) == pytest.approx((0.5, 0.5, 0.5))
    assert e_point(0.25) == pytest.approx((0.25, 0.43301, 0.75), abs=1e-5)
    assert e_point(1e-12) == pytest.approx((0.0, 0.0, 1.0), abs=1e-5)
    with pytest.raises(DomainError):
        e_point(1.0)


def test_e_to_inner_target_examples():
    assert e_to_inner_target(1.0 / 3.0) == pytest.approx((0.5, 0.70711, 1.5), abs=1e-5)
    assert e_to_inner_target(1e-14) == pytest.approx((0.0, 0.0, 1.0), abs=1e-6)


@given(st.floats(1e-6, 0.4999))
def test_inner_target_relations(a):
    U, V, R = e_to_inner_target(a)
    assert R - U == pytest.approx(1.0, abs=1e-15)
    # back to the edge through I = U/R, J = V/R, K = 1/R
    assert (U / R, V / R, 1.0 / R) == pytest.approx(e_point(a), rel=1e-12, abs=1e-15)
