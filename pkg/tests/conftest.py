"""Shared fixtures: the case matrix of assembled solutions."""

import math

import pytest

from axiswirl import midfield, pipeline, zeroswirl
from axiswirl.gas import FarFieldDatum, GasModel, sound_speed

MATRIX_GAMMAS = (1.1, 1.4, 1.7)
MATRIX_CASES = (
    "Ia", "Ib", "Ic", "Id", "II_smooth", "II_vacuum", "II_cavity",
    "zeroswirl_core", "zeroswirl_vacuum",
)


def matrix_builders(gamma: float) -> dict:
    """Callables solving each matrix case for one gamma.

    Data: Ia at M0 = 1, Ib halfway between sqrt(2) and M_h, Id at 1.5 M_h,
    the u0 = v0 ray at 0.5 and 1.5 times its threshold, zero swirl at 0.5
    and 1.5 times its threshold. Ic and II_smooth are the critical orbits.
    """
    gas = GasModel(gamma)
    c0 = float(sound_speed(gas, 1.0))
    mh = midfield.find_Ih(gas).M_h
    ray = pipeline.critical_mach(gas, ratio=1.0).M_h
    zt = zeroswirl.find_transitional_mach_zeroswirl(gas)[0]
    h = math.sqrt(2.0)

    def ray_datum(m):
        q = m * c0 / h
        return FarFieldDatum(1.0, q, q)

    return {
        "Ia": lambda: pipeline.solve(gas, FarFieldDatum(1.0, 0.0, c0)),
        "Ib": lambda: pipeline.solve(gas, FarFieldDatum(1.0, 0.0, 0.5 * (h + mh) * c0)),
        "Ic": lambda: pipeline.solve_transitional(gas),
        "Id": lambda: pipeline.solve(gas, FarFieldDatum(1.0, 0.0, 1.5 * mh * c0)),
        "II_smooth": lambda: pipeline.solve_transitional(gas, ratio=1.0),
        "II_vacuum": lambda: pipeline.solve(gas, ray_datum(1.5 * ray)),
        "II_cavity": lambda: pipeline.solve(gas, ray_datum(0.5 * ray)),
        "zeroswirl_core": lambda: pipeline.solve(gas, FarFieldDatum(1.0, 0.5 * zt * c0, 0.0)),
        "zeroswirl_vacuum": lambda: pipeline.solve(gas, FarFieldDatum(1.0, 1.5 * zt * c0, 0.0)),
    }


def solve_matrix() -> dict:
    out = {}
    for g in MATRIX_GAMMAS:
        for name, build in matrix_builders(g).items():
            out[(g, name)] = build()
    return out


@pytest.fixture(scope="session")
def matrix():
    return solve_matrix()


@pytest.fixture(scope="session")
def gas14():
    return GasModel(1.4)


@pytest.fixture(scope="session")
def fig_solution(gas14):
    """The u0 = 0, v0 = 1, rho0 = a2 = 1 swirling datum at gamma = 1.4."""
    return pipeline.solve(gas14, FarFieldDatum(1.0, 0.0, 1.0))
