"""Intermediate field with swirl: the polynomial ``(I, J, K, s)`` system, its
stationary edge and hyperbolic point, launch directions off the edge and the
critical edge parameter ``I_h`` separating vacuum from cavity outcomes.

Orbits are integrated on ``(I, J, K, ln s, ln rho)`` with the polynomial
field divided by ``(1 - I)^2``. Orbits are unchanged; the cubic degeneracy
at the vacuum point ``(1, 0, 0)`` becomes a hyperbolic approach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import odeint
from .errors import ClassificationError, DomainError, InvariantBreach, ValidationError
from .farfield import DEFAULT_S_INIT, series_start
from .gas import FarFieldDatum, GasModel, e_point, sound_speed
from .zeroswirl import join

__all__ = [
    "SurfaceValues",
    "EdgeEigenData",
    "P66Eigen",
    "MidOutcome",
    "IhResult",
    "hyperbolic_point",
    "surface_values",
    "midfield_rhs_tau",
    "rescaled_rhs",
    "edge_distance",
    "eigen_at_edge",
    "edge_jacobian",
    "polynomial_jacobian",
    "eigen_at_p66",
    "launch_from_edge",
    "farfield_mid_start",
    "classify_midfield",
    "classify_launch",
    "find_Ih",
    "mach_from_alpha",
    "alpha_from_mach",
    "PROXIMITY",
]

PROXIMITY = 1e-6
POLISH = 1e-12
# keeps DOP853 inside its stability region near the attracting edge, where
# the rescaled transverse eigenvalue reaches about -2(1 + alpha)
MAX_STEP = 1.0


@dataclass(frozen=True)
class SurfaceValues:
    H: float
    A: float
    B: float
    Ja: float
    Jb: float


def surface_values(gas: GasModel, I: float, J: float, K: float) -> SurfaceValues:
    g = gas.gamma
    w = 1.0 - I
    H = J * J - I * w
    A = 2.0 * w * w + (g - 1.0) * H - 2.0 * K * K
    B = w * (J * J + I * w) - 2.0 * I * K * K
    Ja = (g + 3.0 - 2.0 * (g + 1.0) * I) * w * (1.0 - g * I) + (g - 1.0) ** 2 * J * J * (1.0 - 2.0 * I)
    Jb = (g * I - 1.0) * w - (2.0 - g) * J * J
    return SurfaceValues(H, A, B, Ja, Jb)


def hyperbolic_point(gas: GasModel) -> tuple[float, float, float]:
    g = gas.gamma
    return 1.0 / g, 0.0, (1.0 - 1.0 / g) / math.sqrt(2.0)


def midfield_rhs_tau(gas: GasModel, y) -> np.ndarray:
    """``d(I, J, K, s)/dtau`` of the polynomial system."""
    I, J, K, s = (float(x) for x in y)
    sv = surface_values(gas, I, J, K)
    w = 1.0 - I
    d = w * w - K * K
    return np.array([w * sv.B, J * (1.0 - 2.0 * I) * d, 0.5 * K * w * sv.A, s * w * d])


def rescaled_rhs(gas: GasModel):
    """Field on ``(I, J, K, ln s, ln rho)`` divided by ``(1 - I)^2``."""
    gm1 = gas.gamma - 1.0

    def f(t, y):
        I, J, K = y[0], y[1], y[2]
        w = 1.0 - I
        if w == 0.0:
            return np.full(5, np.nan)
        j2, k2 = J * J, K * K
        H = j2 - I * w
        d = w * w - k2
        B = w * (j2 + I * w) - 2.0 * I * k2
        A = 2.0 * w * w + gm1 * H - 2.0 * k2
        return np.array([B / w, J * (1.0 - 2.0 * I) * d / (w * w), 0.5 * K * A / w, d / w, H / w])

    return f


def edge_distance(y) -> float:
    """Approximate distance from ``(I, J, K)`` to the stationary edge."""
    I = min(max(float(y[0]), 0.0), 1.0)
    return math.sqrt(
        (y[1] - math.sqrt(I * (1.0 - I))) ** 2 + (y[2] - (1.0 - I)) ** 2
    )


@dataclass(frozen=True)
class EdgeEigenData:
    alpha: float
    lambda2: float
    lambda3: float
    n3: np.ndarray
    v2: np.ndarray


def eigen_at_edge(gas: GasModel, alpha: float) -> EdgeEigenData:
    """Non-zero eigenvalues and eigenvectors of the polynomial field at ``E(alpha)``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("edge parameter must lie in (0, 1)")
    g, a = gas.gamma, alpha
    w = 1.0 - a
    lam2 = -2.0 * w * w * (1.0 + a)
    lam3 = -w * w * (1.0 - 2.0 * a)
    rt = math.sqrt(a * w)
    n3 = np.array([
        2.0 * w * (2.0 * (g - 1.0) * a - 1.0),
        -2.0 * (g + 1.0) * rt * (2.0 * a - 1.0),
        -w * (2.0 * (3.0 * g - 1.0) * a - (g + 3.0)),
    ])
    v2 = np.array([2.0 * math.sqrt(a), (1.0 - 2.0 * a) / math.sqrt(w), w / math.sqrt(a)])
    return EdgeEigenData(a, lam2, lam3, n3, v2)


def edge_jacobian(gas: GasModel, alpha: float) -> np.ndarray:
    """Analytic Jacobian of the ``(I, J, K)`` polynomial field at ``E(alpha)``."""
    I, J, K = e_point(alpha)
    return polynomial_jacobian(gas, I, J, K)


def polynomial_jacobian(gas: GasModel, I: float, J: float, K: float) -> np.ndarray:
    g = gas.gamma
    w = 1.0 - I
    sv = surface_values(gas, I, J, K)
    d = w * w - K * K
    # partials of B, A, d
    B_I = -(J * J + I * w) + w * (w - I) - 2.0 * K * K
    B_J = 2.0 * w * J
    B_K = -4.0 * I * K
    A_I = -4.0 * w + (g - 1.0) * (2.0 * I - 1.0)
    A_J = 2.0 * (g - 1.0) * J
    A_K = -4.0 * K
    d_I = -2.0 * w
    d_K = -2.0 * K
    return np.array([
        [-sv.B + w * B_I, w * B_J, w * B_K],
        [J * (-2.0 * d + (1.0 - 2.0 * I) * d_I), (1.0 - 2.0 * I) * d, J * (1.0 - 2.0 * I) * d_K],
        [0.5 * K * (-sv.A + w * A_I), 0.5 * K * w * A_J, 0.5 * (w * sv.A + K * w * A_K)],
    ])


@dataclass(frozen=True)
class P66Eigen:
    lam_plus: float
    lam_minus: float
    lam2: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    v2: np.ndarray


def eigen_at_p66(gas: GasModel) -> P66Eigen:
    """Closed-form eigendata at the hyperbolic point; ``lam_minus`` is the unstable one."""
    g = gas.gamma
    if not 1.0 < g < 2.0:
        raise DomainError("hyperbolic point is degenerate unless 1 < gamma < 2")
    root = math.sqrt((g + 1.0) ** 2 + 4.0 * g * (g - 1.0))
    pre = -((g - 1.0) ** 2) / (2.0 * g**3)
    lp = pre * (g + 1.0 + root)
    lm = pre * (g + 1.0 - root)
    l2 = -(2.0 - g) * (g - 1.0) ** 2 / (2.0 * g**3)
    vp = np.array([4.0 * math.sqrt(2.0), 0.0, g - 3.0 + root])
    vm = np.array([4.0 * math.sqrt(2.0), 0.0, g - 3.0 - root])
    return P66Eigen(lp, lm, l2, vp, vm, np.array([0.0, 1.0, 0.0]))


def launch_from_edge(gas: GasModel, alpha: float, delta: float = 1e-7) -> np.ndarray:
    """Edge point ``E(alpha)`` displaced by ``delta`` along the unit ``n3``.

    The sign is pinned by region membership: for ``alpha > 1/2`` the point
    must satisfy ``H < 0`` and ``K < 1 - I``, for ``alpha < 1/2`` ``H > 0``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("edge parameter must lie in (0, 1)")
    if abs(alpha - 0.5) < 1e-12:
        raise DomainError("launch direction degenerates at alpha = 1/2")
    if not 0.0 < delta <= 1e-4:
        raise DomainError("launch offset must lie in (0, 1e-4]")
    n = eigen_at_edge(gas, alpha).n3
    n = n / np.linalg.norm(n)
    p = np.array(e_point(alpha))
    for sign in (1.0, -1.0):
        q = p + sign * delta * n
        sv = surface_values(gas, *q)
        if alpha > 0.5 and sv.H < 0.0 and q[0] + q[2] < 1.0:
            return q
        if alpha < 0.5 and sv.H > 0.0:
            return q
    raise InvariantBreach(f"no launch sign enters the required region at alpha={alpha}")


@dataclass
class MidOutcome:
    """Endpoint of an intermediate-field orbit.

    ``kind`` is ``"vacuum"``, ``"edge"`` or ``"hyperbolic_point"``.
    """

    kind: str
    s_end: float
    alpha_end: Optional[float] = None
    u_end: Optional[float] = None
    c_end: Optional[float] = None
    rho_end: Optional[float] = None
    p66_distance: float = math.inf
    trajectory: Optional[odeint.Trajectory] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def r_end(self) -> float:
        return 0.0 if math.isinf(self.s_end) else 1.0 / self.s_end


def farfield_mid_start(gas: GasModel, datum: FarFieldDatum, s_init: float = DEFAULT_S_INIT) -> np.ndarray:
    rho, u, v = series_start(gas, datum, s_init)
    c = sound_speed(gas, rho)
    return np.array([s_init * u, s_init * v, s_init * c, math.log(s_init), math.log(rho)])


def _events(gas: GasModel, f, radius: float, eps_rhs: float):
    P = hyperbolic_point(gas)

    def frhs(t, y):
        return f(t, y)[:3]

    return [
        odeint.proximity_to_point("vacuum", (1.0, 0.0, 0.0), radius, indices=(0, 1, 2)),
        odeint.stationary_approach("edge", frhs, edge_distance, eps_rhs=eps_rhs, eps_set=radius),
        odeint.proximity_to_point("hyperbolic_point", P, radius, indices=(0, 1, 2), terminal=False),
        odeint.surface_crossing("negative_J", lambda y: y[1] + 1e-12, direction=-1),
        odeint.surface_crossing("negative_K", lambda y: y[2] + 1e-12, direction=-1),
        odeint.surface_crossing("top_exit", lambda y: 1.0 + 1e-9 - y[0] - y[2], direction=-1),
    ]


def _edge_polish(f, traj):
    ev = odeint.stationary_approach(
        "polished", lambda t, y: f(t, y)[:3], edge_distance, eps_rhs=1e-15, eps_set=POLISH
    )
    return odeint.integrate(f, traj.y_end, t0=traj.t_end, events=[ev], max_span=2000.0, max_step=MAX_STEP)


def _vacuum_polish(f, traj):
    ev = odeint.proximity_to_point("polished", (1.0, 0.0, 0.0), POLISH, indices=(0, 1, 2))
    return odeint.integrate(f, traj.y_end, t0=traj.t_end, events=[ev], max_span=400.0, max_step=MAX_STEP)


def _p66_distance(gas, traj) -> float:
    P = np.array(hyperbolic_point(gas))
    return float(np.min(np.linalg.norm(traj.y[:, :3] - P, axis=1)))


def _rho(gas, c, log_rho):
    if gas.isothermal:
        return math.exp(log_rho)
    return (c * c / (gas.gamma * gas.a2)) ** (1.0 / (gas.gamma - 1.0))


def integrate_mid(
    gas: GasModel,
    y0,
    *,
    rtol: float = odeint.DEFAULT_RTOL,
    atol: float = odeint.DEFAULT_ATOL,
    max_span: float = odeint.DEFAULT_MAX_SPAN,
    radius: float = PROXIMITY,
    eps_rhs: float = 1e-10,
    refine: bool = True,
    stop_at_saddle: bool = False,
) -> MidOutcome:
    """Integrate a state ``(I, J, K, ln s, ln rho)`` to its endpoint and classify it."""
    f = rescaled_rhs(gas)
    evs = _events(gas, f, radius, eps_rhs)
    if stop_at_saddle:
        evs[2].terminal = True
    traj = odeint.integrate(f, y0, rtol=rtol, atol=atol, events=evs, max_span=max_span, max_step=MAX_STEP)
    dp = _p66_distance(gas, traj)
    P = np.array(hyperbolic_point(gas))
    if traj.termination == "event" and traj.event == "hyperbolic_point":
        return MidOutcome("hyperbolic_point", math.inf, p66_distance=dp, trajectory=traj)
    if traj.termination == "max_span" and np.linalg.norm(traj.y_end[:3] - P) < 10 * radius:
        return MidOutcome("hyperbolic_point", math.inf, p66_distance=dp, trajectory=traj)
    if traj.termination != "event":
        raise ClassificationError(
            f"intermediate orbit not classified: {traj.termination} {traj.message} at {traj.y_end[:3]}"
        )
    if traj.event not in ("vacuum", "edge"):
        raise InvariantBreach(f"intermediate orbit left its region: {traj.event} at {traj.y_end[:3]}")
    if traj.event == "vacuum":
        if gas.isothermal:
            raise InvariantBreach("isothermal orbit reached the vacuum point")
        if refine:
            traj = join(traj, _vacuum_polish(f, traj))
        y = traj.y_end
        d = f(0.0, y)
        ls = y[3] + d[3] / d[0] * (1.0 - y[0]) if d[0] > 0 else y[3]
        s_end = math.exp(ls)
        return MidOutcome("vacuum", s_end, u_end=1.0 / s_end, rho_end=0.0, p66_distance=dp, trajectory=traj)
    if refine:
        traj = join(traj, _edge_polish(f, traj))
    y = traj.y_end
    alpha = float(y[0])
    if alpha >= 0.5:
        raise InvariantBreach(f"interior orbit reached the edge at alpha={alpha} >= 1/2")
    s_end = math.exp(y[3])
    c = y[2] / s_end
    return MidOutcome(
        "edge",
        s_end,
        alpha_end=alpha,
        u_end=y[0] / s_end,
        c_end=c,
        rho_end=_rho(gas, c, y[4]),
        p66_distance=dp,
        trajectory=traj,
    )


def classify_midfield(gas: GasModel, datum: FarFieldDatum, *, s_init: float = DEFAULT_S_INIT, **kw) -> MidOutcome:
    """Follow a swirling datum with ``u0 > 0`` from the far field to its endpoint."""
    if not (datum.v0 > 0.0 and datum.u0 > 0.0):
        raise ValidationError("far-field classification needs u0 > 0 and v0 > 0")
    return integrate_mid(gas, farfield_mid_start(gas, datum, s_init), **kw)


def classify_launch(
    gas: GasModel, alpha: float, *, delta: float = 1e-7, s0: float = 1.0, rho0: float = 1.0, **kw
) -> MidOutcome:
    """Launch off ``E(alpha)`` (``alpha > 1/2``) into the intermediate region and classify."""
    if not 0.5 < alpha < 1.0:
        raise DomainError("intermediate launch needs 1/2 < alpha < 1")
    q = launch_from_edge(gas, alpha, delta)
    ls = math.log(s0)
    if gas.isothermal:
        # keep c = K/s at its edge value; c is constant when gamma = 1
        ls += math.log(q[2] / (1.0 - alpha))
    return integrate_mid(gas, np.array([q[0], q[1], q[2], ls, math.log(rho0)]), **kw)


def mach_from_alpha(alpha: float) -> float:
    """Swirl Mach number ``v0/c0`` of the still far field ending at ``E(alpha)``."""
    return math.sqrt(alpha) / (1.0 - alpha)


def alpha_from_mach(m0: float) -> float:
    rs = 0.5 * (math.sqrt(1.0 + 4.0 * m0 * m0) + 1.0)
    return m0 * m0 / (rs * rs)


@dataclass(frozen=True)
class IhResult:
    I_h: float
    M_h: float
    lo: float
    hi: float


@lru_cache(maxsize=64)
def find_Ih(gas: GasModel, width: float = 1e-4, delta: float = 1e-7) -> IhResult:
    """Critical edge parameter by bisection of launch outcomes (edge below, vacuum above)."""
    g = gas.gamma
    if not 1.0 < g < 2.0:
        raise ValidationError("critical edge parameter needs 1 < gamma < 2")
    lo = 1.0 / g
    hi = min(1.0, 1.0 / (2.0 * (g - 1.0))) - 1e-3

    def kind(a):
        try:
            return classify_launch(gas, a, delta=delta, refine=False).kind
        except ClassificationError:
            return "undecided"

    if kind(lo + 1e-9) != "edge" or kind(hi) != "vacuum":
        raise InvariantBreach(f"no edge/vacuum sign change for gamma={g} in ({lo}, {hi})")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        k = kind(mid)
        if k == "edge":
            lo = mid
        elif k == "vacuum":
            hi = mid
        else:
            break
    ih = 0.5 * (lo + hi)
    return IhResult(ih, mach_from_alpha(ih), lo, hi)
