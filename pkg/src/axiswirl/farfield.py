"""Far-field behaviour: the ODE in ``s = 1/xi``, its start at ``s = 0`` and the
closed-form solution available when ``u0 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError, ValidationError
from .gas import FarFieldDatum, GasModel, PrimitiveState, sound_speed

__all__ = [
    "CharacteristicQuantities",
    "characteristic_quantities",
    "r_star",
    "explicit_solution",
    "explicit_mid",
    "farfield_rhs",
    "series_start",
    "series_state",
    "invariant_surface_value",
    "endpoint_alpha",
    "DEFAULT_S_INIT",
]

DEFAULT_S_INIT = 1e-6


@dataclass(frozen=True)
class CharacteristicQuantities:
    delta: float
    theta: float
    sigma: float


def characteristic_quantities(r, u, v, c) -> CharacteristicQuantities:
    """``Delta = c^2 - (u-r)^2``, ``Theta = v^2 - u(r-u)``, ``Sigma = (r-u)Theta - u Delta``."""
    delta = c * c - (u - r) ** 2
    theta = v * v - u * (r - u)
    sigma = (r - u) * theta - u * delta
    return CharacteristicQuantities(delta, theta, sigma)


def _require_still(datum: FarFieldDatum) -> None:
    if datum.u0 != 0.0:
        raise ValidationError("closed-form far field requires u0 = 0")


def r_star(gas: GasModel, datum: FarFieldDatum) -> float:
    """Radius where the closed-form far field meets the sonic line."""
    _require_still(datum)
    c0 = sound_speed(gas, datum.rho0)
    return 0.5 * (math.sqrt(c0 * c0 + 4.0 * datum.v0**2) + c0)


def explicit_solution(gas: GasModel, datum: FarFieldDatum, r: float) -> PrimitiveState:
    """Constant-density swirling far field ``u = v0^2/r``, ``v = (v0/r) sqrt(r^2 - v0^2)``."""
    rs = r_star(gas, datum)
    if r < rs * (1.0 - 1e-14):
        raise DomainError(f"closed form used below r* = {rs!r}: r = {r!r}")
    if math.isinf(r):
        return PrimitiveState(r, datum.rho0, 0.0, datum.v0)
    v0 = datum.v0
    return PrimitiveState(r, datum.rho0, v0 * v0 / r, v0 / r * math.sqrt(r * r - v0 * v0))


def explicit_mid(gas: GasModel, datum: FarFieldDatum, s: float) -> tuple[float, float, float]:
    """Closed-form far field in ``(I, J, K)`` at ``s = 1/xi``."""
    _require_still(datum)
    v0 = datum.v0
    c0 = sound_speed(gas, datum.rho0)
    q = s * v0
    return q * q, q * math.sqrt(max(0.0, 1.0 - q * q)), s * c0


def endpoint_alpha(gas: GasModel, datum: FarFieldDatum) -> float:
    """``I`` at ``r*`` on the closed-form far field, ``M0^2 / (r*/c0)^2``."""
    c0 = sound_speed(gas, datum.rho0)
    m0 = datum.v0 / c0
    rs = 0.5 * (math.sqrt(1.0 + 4.0 * m0 * m0) + 1.0)
    return m0 * m0 / (rs * rs)


def invariant_surface_value(s: float, u: float, v: float) -> float:
    """``s v^2 - u (1 - u s)``; zero on the invariant surface of the far-field ODE."""
    return s * v * v - u * (1.0 - u * s)


def farfield_rhs(gas: GasModel, y, s: float) -> np.ndarray:
    """Derivative of ``(rho, u, v)`` with respect to ``s = 1/xi``."""
    rho, u, v = (float(x) for x in y)
    c = sound_speed(gas, rho)
    w = 1.0 - u * s
    den = s * s * c * c - w * w
    if den == 0.0 or w == 0.0:
        raise SingularityError(f"far-field ODE singular at s={s!r}")
    drho = -rho * (s * v * v - u * w) / den
    du = -(w * v * v - u * s * c * c) / den
    dv = -u * v / w
    return np.array([drho, du, dv])


def series_start(gas: GasModel, datum: FarFieldDatum, s_init: float = DEFAULT_S_INIT) -> np.ndarray:
    """First-order Taylor state ``(rho, u, v)`` at ``s_init``."""
    if not 0.0 < s_init < 1e-2:
        raise DomainError("series start needs 0 < s_init << 1")
    return series_state(datum, s_init)


def series_state(datum: FarFieldDatum, s):
    """Taylor polynomial of the far field about ``s = 0``; vectorized in ``s``."""
    rho0, u0, v0 = datum.rho0, datum.u0, datum.v0
    s = np.asarray(s, dtype=float)
    out = np.stack(
        [rho0 - rho0 * u0 * s, u0 + v0 * v0 * s, v0 - u0 * v0 * s], axis=-1
    )
    return out
