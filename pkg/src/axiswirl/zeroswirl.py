"""Zero-swirl flows (``v0 = 0``): the planar ``(I, K)`` portrait, its separatrix
and the constant core or vacuum that closes the solution at the centre.

Integration uses the state ``(I, K, ln s, ln rho)`` with the field divided by
``1 - I``. That is a pure reparametrization of the orbits; it turns the
algebraic approach to ``(1, 0)`` into an exponential one so proximity events
fire in a bounded parameter span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import odeint
from .errors import ClassificationError, DomainError, InvariantBreach, SingularityError, ValidationError
from .farfield import DEFAULT_S_INIT, series_start
from .gas import FarFieldDatum, GasModel, sound_speed

__all__ = [
    "ZeroSwirlOutcome",
    "VacuumEdge",
    "saddle_point",
    "zeroswirl_rhs_tau",
    "rescaled_rhs",
    "zeroswirl_start",
    "classify_zeroswirl",
    "transitional_L_rhs",
    "find_transitional_mach_zeroswirl",
    "continue_core",
    "continue_vacuum",
    "vacuum_edge_slopes",
    "PROXIMITY",
]

PROXIMITY = 1e-6
POLISH = 1e-12
# keeps DOP853 well inside its stability region at the attracting endpoints
MAX_STEP = 1.0


def saddle_point(gas: GasModel) -> tuple[float, float]:
    g = gas.gamma
    return 1.0 / g, (1.0 - 1.0 / g) / math.sqrt(2.0)


def zeroswirl_rhs_tau(gas: GasModel, y) -> np.ndarray:
    """``d(I, K, s)/dtau`` of the zero-swirl system (polynomial field)."""
    I, K, s = (float(x) for x in y)
    w = 1.0 - I
    a = 2.0 * w * w - (gas.gamma - 1.0) * I * w - 2.0 * K * K
    return np.array([I * (w * w - 2.0 * K * K), 0.5 * K * a, s * (w * w - K * K)])


def rescaled_rhs(gas: GasModel):
    """Field on ``(I, K, ln s, ln rho)`` divided by ``1 - I``."""
    gm1 = gas.gamma - 1.0

    def f(t, y):
        I, K = y[0], y[1]
        w = 1.0 - I
        if w == 0.0:
            return np.full(4, np.nan)
        k2 = K * K
        dI = I * (w * w - 2.0 * k2) / w
        dK = 0.5 * K * (2.0 * w * w - gm1 * I * w - 2.0 * k2) / w
        dls = (w * w - k2) / w
        return np.array([dI, dK, dls, -I])

    return f


def transitional_L_rhs(gas: GasModel, I: float, L: float) -> float:
    """``dL/dI`` for ``L = (K/I)^2`` along zero-swirl orbits."""
    if not 0.0 < I < 1.0:
        raise DomainError("L-form needs 0 < I < 1")
    den = (1.0 - I) ** 2 - 2.0 * I * I * L
    if den == 0.0:
        raise SingularityError("L-form denominator vanishes")
    return -L * ((gas.gamma - 1.0) * (1.0 - I) - 2.0 * I * L) / den


@dataclass
class ZeroSwirlOutcome:
    """Endpoint of a zero-swirl orbit.

    ``kind`` is ``"core"``, ``"vacuum"`` or ``"transitional"``. ``s_end`` is
    infinite for the transitional case. ``rho_end`` is the core density and
    ``u_end`` the radial speed of the vacuum edge.
    """

    kind: str
    s_end: float
    rho_end: Optional[float] = None
    u_end: Optional[float] = None
    saddle_distance: float = math.inf
    trajectory: Optional[odeint.Trajectory] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def r_end(self) -> float:
        return 0.0 if math.isinf(self.s_end) else 1.0 / self.s_end


@dataclass(frozen=True)
class VacuumEdge:
    """Vacuum region ``0 <= xi < r_edge`` and the expected one-sided slopes there."""

    r_edge: float
    slope_u_minus_r: float
    slope_c: float
    pseudo_mach: float
    swirl_exponent: Optional[float] = None


def vacuum_edge_slopes(gas: GasModel) -> tuple[float, float, float]:
    """Slopes of ``u - r`` and ``c`` in ``r - r_edge`` and the limiting pseudo-Mach number."""
    g = gas.gamma
    return (
        -2.0 * (g - 1.0) / (g + 1.0),
        (g - 1.0) * math.sqrt(3.0 - g) / (g + 1.0),
        2.0 / math.sqrt(3.0 - g),
    )


def zeroswirl_start(gas: GasModel, datum: FarFieldDatum, s_init: float = DEFAULT_S_INIT) -> np.ndarray:
    rho, u, _ = series_start(gas, datum, s_init)
    c = sound_speed(gas, rho)
    return np.array([s_init * u, s_init * c, math.log(s_init), math.log(rho)])


def _events(gas: GasModel, radius: float):
    Ih, Kh = saddle_point(gas)
    return [
        odeint.proximity_to_point("core", (0.0, 1.0), radius, indices=(0, 1)),
        odeint.proximity_to_point("vacuum", (1.0, 0.0), radius, indices=(0, 1)),
        odeint.proximity_to_point("saddle", (Ih, Kh), radius, indices=(0, 1), terminal=False),
        odeint.surface_crossing("left_region", lambda y: y[0] + 1e-9, direction=-1),
        odeint.surface_crossing("below_region", lambda y: y[1] + 1e-9, direction=-1),
    ]


def _saddle_distance(gas, traj) -> float:
    Ih, Kh = saddle_point(gas)
    return float(np.min(np.hypot(traj.y[:, 0] - Ih, traj.y[:, 1] - Kh)))


def _vacuum_log_s_end(f, y) -> float:
    """Extrapolate ``ln s`` to ``I = 1`` with the local slope ``d ln s/dI``."""
    d = f(0.0, y)
    return y[2] + d[2] / d[0] * (1.0 - y[0]) if d[0] > 0 else y[2]


def polish(f, traj: odeint.Trajectory, point, radius=POLISH, span=200.0, indices=(0, 1)):
    """Continue a trajectory that has entered a proximity ball deeper into it."""
    ev = odeint.proximity_to_point("polished", point, radius, indices=indices)
    more = odeint.integrate(f, traj.y_end, t0=traj.t_end, events=[ev], max_span=span, max_step=MAX_STEP)
    return more


def join(a: odeint.Trajectory, b: odeint.Trajectory) -> odeint.Trajectory:
    """Concatenate two trajectories sharing the end/start node."""
    if len(b.t) <= 1:
        return a
    out = odeint.Trajectory(
        np.concatenate([a.t, b.t[1:]]),
        np.vstack([a.y, b.y[1:]]),
        b.termination if b.termination != "max_span" else a.termination,
        a.event,
        a.message,
        a.event_log + b.event_log,
    )
    out._pieces = a._pieces + b._pieces
    return out


def classify_zeroswirl(
    gas: GasModel,
    datum: FarFieldDatum,
    *,
    s_init: float = DEFAULT_S_INIT,
    rtol: float = odeint.DEFAULT_RTOL,
    atol: float = odeint.DEFAULT_ATOL,
    max_span: float = odeint.DEFAULT_MAX_SPAN,
    radius: float = PROXIMITY,
    refine: bool = True,
) -> ZeroSwirlOutcome:
    """Follow a zero-swirl datum from the far field to its centre endpoint."""
    if datum.v0 != 0.0:
        raise ValidationError("zero-swirl classification needs v0 = 0")
    if not datum.u0 > 0.0:
        raise ValidationError("zero-swirl classification needs u0 > 0")
    f = rescaled_rhs(gas)
    y0 = zeroswirl_start(gas, datum, s_init)
    traj = odeint.integrate(
        f, y0, rtol=rtol, atol=atol, events=_events(gas, radius), max_span=max_span, max_step=MAX_STEP
    )
    dsad = _saddle_distance(gas, traj)
    if traj.termination == "event" and traj.event in ("core", "vacuum"):
        kind = traj.event
    elif traj.termination == "max_span" and dsad < 10 * radius:
        Ih, Kh = saddle_point(gas)
        if math.hypot(traj.y_end[0] - Ih, traj.y_end[1] - Kh) < 10 * radius:
            return ZeroSwirlOutcome("transitional", math.inf, saddle_distance=dsad, trajectory=traj)
        raise ClassificationError(f"zero-swirl orbit undecided after span {max_span}")
    elif traj.termination == "event":
        raise InvariantBreach(f"zero-swirl orbit left the trapping region ({traj.event})")
    else:
        raise ClassificationError(
            f"zero-swirl orbit not classified: {traj.termination} {traj.message}"
        )
    if gas.isothermal and kind == "vacuum":
        raise InvariantBreach("isothermal zero-swirl orbit reached the vacuum point")

    if refine:
        point = (0.0, 1.0) if kind == "core" else (1.0, 0.0)
        traj = join(traj, polish(f, traj, point))
    y = traj.y_end
    if kind == "core":
        ls = y[2]
        s_end = math.exp(ls)
        rho = math.exp(y[3]) if gas.isothermal else _rho_from_c(gas, 1.0 / s_end)
        return ZeroSwirlOutcome("core", s_end, rho_end=rho, saddle_distance=dsad, trajectory=traj)
    s_end = math.exp(_vacuum_log_s_end(f, y))
    return ZeroSwirlOutcome("vacuum", s_end, u_end=1.0 / s_end, saddle_distance=dsad, trajectory=traj)


def _rho_from_c(gas, c):
    return (c * c / (gas.gamma * gas.a2)) ** (1.0 / (gas.gamma - 1.0))


def _kind_at_mach(gas: GasModel, m0: float) -> str:
    c0 = sound_speed(gas, 1.0)
    return classify_zeroswirl(gas, FarFieldDatum(1.0, m0 * c0, 0.0), refine=False).kind


@lru_cache(maxsize=64)
def find_transitional_mach_zeroswirl(gas: GasModel, width: float = 1e-9) -> tuple[float, float]:
    """Bracket ``(lo, hi)`` of the zero-swirl threshold Mach number ``u0/c0``.

    Data just below ``lo`` reach the core, data above ``hi`` reach the vacuum.
    """
    if not 1.0 < gas.gamma < 2.0:
        raise ValidationError("zero-swirl threshold needs 1 < gamma < 2")
    bound = math.sqrt(2.0) / (gas.gamma - 1.0)
    hi = bound
    if _kind_at_mach(gas, hi) != "vacuum":
        raise InvariantBreach(f"datum at the upper bound {bound} does not reach the vacuum")
    lo = 0.05 * bound
    while _kind_at_mach(gas, lo) != "core":
        lo *= 0.5
        if lo < 1e-6:
            raise InvariantBreach("no core-bound datum found below the upper bound")
    while hi - lo > width * hi:
        mid = 0.5 * (lo + hi)
        try:
            kind = _kind_at_mach(gas, mid)
        except ClassificationError:
            break
        if kind == "core":
            lo = mid
        elif kind == "vacuum":
            hi = mid
        else:
            lo = hi = mid
            break
    return lo, hi


def continue_core(gas: GasModel, outcome: ZeroSwirlOutcome) -> dict:
    """Constant core ``u = v = 0``, ``rho = rho_end`` on ``0 <= xi < 1/s_end``."""
    if outcome.kind != "core":
        raise ValidationError("core continuation needs a core outcome")
    r = outcome.r_end
    return {"r_edge": r, "rho": outcome.rho_end, "c": r}


def continue_vacuum(gas: GasModel, outcome: ZeroSwirlOutcome) -> VacuumEdge:
    if outcome.kind != "vacuum":
        raise ValidationError("vacuum continuation needs a vacuum outcome")
    su, sc, ms = vacuum_edge_slopes(gas)
    return VacuumEdge(outcome.u_end, su, sc, ms)
