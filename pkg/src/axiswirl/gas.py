"""Polytropic gas law, state containers and the coordinate maps between them.

Four coordinate systems describe the same self-similar state:

* primitive ``(xi, rho, u, v)`` with ``xi = r/t``;
* intermediate ``(I, J, K, s) = (s u, s v, s c, 1/xi)``;
* inner ``(U, V, R, c) = (u/c, v/c, xi/c, c)``;
* degenerate inner ``(X, V2, R2) = (U/R, V**2, R**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "GasModel",
    "PrimitiveState",
    "FarFieldDatum",
    "MidState",
    "InnerState",
    "DegenerateInnerState",
    "MachPair",
    "sound_speed",
    "density_from_sound_speed",
    "mach_numbers",
    "to_mid",
    "from_mid",
    "to_inner",
    "from_inner",
    "to_degenerate",
    "from_degenerate",
    "e_point",
    "e_to_inner_target",
]


@dataclass(frozen=True)
class GasModel:
    """Polytropic gas ``p = a2 * rho**gamma`` with ``1 <= gamma < 2``."""

    gamma: float
    a2: float = 1.0

    def __post_init__(self) -> None:
        if not (1.0 <= self.gamma < 2.0) or not math.isfinite(self.gamma):
            raise ValidationError(
                f"gamma out of supported range [1,2): {self.gamma!r}"
            )
        if not (self.a2 > 0.0) or not math.isfinite(self.a2):
            raise ValidationError(f"a2 must be positive, got {self.a2!r}")

    @property
    def lam(self) -> float:
        """``(gamma - 1)/2``, the exponent linking c to rho."""
        return 0.5 * (self.gamma - 1.0)

    @property
    def isothermal(self) -> bool:
        return self.gamma == 1.0


@dataclass(frozen=True)
class PrimitiveState:
    """Density and radial/tangential velocity at ``xi = r/t``.

    In a vacuum ``rho == 0`` and ``u``, ``v`` are ``None``.
    """

    xi: float
    rho: float
    u: Optional[float]
    v: Optional[float]

    def __post_init__(self) -> None:
        if self.rho < 0.0:
            raise DomainError(f"negative density {self.rho!r}")
        if self.rho > 0.0 and (self.u is None or self.v is None):
            raise DomainError("non-vacuum state needs both velocity components")

    @property
    def is_vacuum(self) -> bool:
        return self.rho == 0.0

    @classmethod
    def vacuum(cls, xi: float) -> "PrimitiveState":
        return cls(xi, 0.0, None, None)


@dataclass(frozen=True)
class FarFieldDatum:
    """Constant initial state ``(rho0, u0, v0)``; swirl normalized to ``v0 >= 0``."""

    rho0: float
    u0: float = 0.0
    v0: float = 0.0

    def __post_init__(self) -> None:
        if not (self.rho0 > 0.0):
            raise ValidationError(f"rho0 must be positive, got {self.rho0!r}")
        if self.u0 < 0.0:
            raise ValidationError(
                f"u0 must be non-negative (inward swirl is not supported), got {self.u0!r}"
            )
        if self.v0 < 0.0:
            raise ValidationError(
                "v0 must be non-negative; flip the sign of v (see FarFieldDatum.normalized)"
            )

    @classmethod
    def normalized(cls, rho0: float, u0: float, v0: float) -> tuple["FarFieldDatum", int]:
        """Return the datum with ``|v0|`` and the sign to re-apply to ``v``."""
        sign = -1 if v0 < 0 else 1
        return cls(rho0, u0, abs(v0)), sign


@dataclass(frozen=True)
class MidState:
    I: float
    J: float
    K: float
    s: float


@dataclass(frozen=True)
class InnerState:
    U: float
    V: float
    R: float
    c: float


@dataclass(frozen=True)
class DegenerateInnerState:
    X: float
    V2: float
    R2: float


@dataclass(frozen=True)
class MachPair:
    mach: float
    pseudo_mach: float


def sound_speed(gas: GasModel, rho):
    """``c = sqrt(gamma a2 rho**(gamma-1))``; accepts scalars or arrays."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0.0):
        raise DomainError("sound speed of negative density")
    if gas.isothermal:
        if np.any(rho_arr == 0.0):
            raise DomainError("isothermal sound speed needs rho > 0")
        out = np.full_like(rho_arr, math.sqrt(gas.a2))
    else:
        out = np.sqrt(gas.gamma * gas.a2 * rho_arr ** (gas.gamma - 1.0))
    return float(out) if out.ndim == 0 else out


def density_from_sound_speed(gas: GasModel, c):
    """Inverse of :func:`sound_speed`; undefined in the isothermal case."""
    if gas.isothermal:
        raise DomainError("density is not recoverable from c when gamma == 1")
    c_arr = np.asarray(c, dtype=float)
    if np.any(c_arr < 0.0):
        raise DomainError("negative sound speed")
    out = (c_arr**2 / (gas.gamma * gas.a2)) ** (1.0 / (gas.gamma - 1.0))
    return float(out) if out.ndim == 0 else out


def mach_numbers(gas: GasModel, state: PrimitiveState) -> MachPair:
    if state.is_vacuum:
        raise DomainError("Mach numbers are undefined in a vacuum")
    c = sound_speed(gas, state.rho)
    u, v = state.u, state.v
    return MachPair(math.hypot(u, v) / c, math.hypot(u - state.xi, v) / c)


def to_mid(state: PrimitiveState, gas: GasModel) -> MidState:
    if not state.xi > 0.0:
        raise DomainError("intermediate variables need xi > 0")
    if state.is_vacuum:
        raise DomainError("vacuum has no intermediate-field representation")
    s = 1.0 / state.xi
    c = sound_speed(gas, state.rho)
    return MidState(s * state.u, s * state.v, s * c, s)


def from_mid(mid: MidState, gas: GasModel, rho: Optional[float] = None) -> PrimitiveState:
    """Invert :func:`to_mid`. For ``gamma == 1`` the density must be supplied."""
    if not mid.s > 0.0:
        raise DomainError("from_mid needs s > 0")
    if rho is None:
        rho = density_from_sound_speed(gas, mid.K / mid.s)
    return PrimitiveState(1.0 / mid.s, rho, mid.I / mid.s, mid.J / mid.s)


def to_inner(state: PrimitiveState, gas: GasModel) -> InnerState:
    if state.is_vacuum:
        raise DomainError("vacuum has no inner-field representation")
    c = sound_speed(gas, state.rho)
    return InnerState(state.u / c, state.v / c, state.xi / c, c)


def from_inner(inner: InnerState, gas: GasModel, rho: Optional[float] = None) -> PrimitiveState:
    if not inner.c > 0.0:
        raise DomainError("inner variables need c > 0")
    if rho is None:
        rho = density_from_sound_speed(gas, inner.c)
    c = inner.c
    return PrimitiveState(inner.R * c, rho, inner.U * c, inner.V * c)


def to_degenerate(inner: InnerState) -> DegenerateInnerState:
    if not inner.R > 0.0:
        raise DomainError("X = U/R needs R > 0")
    return DegenerateInnerState(inner.U / inner.R, inner.V**2, inner.R**2)


def from_degenerate(deg: DegenerateInnerState) -> tuple[float, float, float]:
    """Return ``(U, V, R)`` with ``V >= 0``."""
    if deg.R2 < 0.0 or deg.V2 < 0.0:
        raise DomainError("V2 and R2 must be non-negative")
    R = math.sqrt(deg.R2)
    return deg.X * R, math.sqrt(deg.V2), R


def e_point(alpha: float) -> tuple[float, float, float]:
    """Point of the stationary edge ``K = 1 - I, J**2 = I(1 - I)`` at ``I = alpha``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"edge parameter must lie in (0, 1), got {alpha!r}")
    return alpha, math.sqrt(alpha * (1.0 - alpha)), 1.0 - alpha


def e_to_inner_target(alpha: float) -> tuple[float, float, float]:
    """Edge point expressed as the inner stationary point ``(U*, V*, R*)``.

    Uses ``I = U/R, J = V/R, K = 1/R``; the result satisfies ``R* - U* = 1``
    and ``V*^2 = U*``.
    """
    if not 0.0 < alpha < 0.5:
        raise DomainError(
            f"inner-field continuation needs 0 < alpha < 1/2, got {alpha!r}"
        )
    R = 1.0 / (1.0 - alpha)
    U = alpha * R
    return U, math.sqrt(U), R
