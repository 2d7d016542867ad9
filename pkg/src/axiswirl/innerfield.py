"""Inner field: the flow between a stationary edge point with ``alpha < 1/2``
and the centre, where density vanishes at a single point.

Orbits live on the two-dimensional centre-unstable manifold of the
degenerate origin of the ``(X, V2, R2)`` system. Each orbit is labelled by
one number ``C`` (the invariant ``1/((2 - gamma) V2) + ln R2 / 2`` to
leading order near the origin); an orbit is seeded on the centre manifold
far from the edge and ``C`` is shot until the orbit lands on the requested
edge point. ``ln R2`` is carried instead of ``R2`` so seeds can sit
hundreds of e-folds inside the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import odeint
from .errors import ClassificationError, DomainError, ValidationError
from .gas import GasModel, e_to_inner_target
from .zeroswirl import join

__all__ = [
    "InnerAux",
    "inner_aux",
    "inner_rhs_uvr",
    "inner_rhs_degenerate",
    "degenerate_rhs_log",
    "cm_approx",
    "cm_flow_coefficient",
    "incoming_direction",
    "InnerOrbit",
    "CenterAsymptote",
    "landing_alpha",
    "solve_inner",
    "SEED_DEPTH",
    "SMALL_ALPHA",
    "SmallAlphaInner",
    "small_alpha_inner",
]

SEED_DEPTH = 200.0
# below this edge parameter the inner field is taken at leading order in alpha;
# shooting would need seeds C ~ 1/alpha and a landing radius below alpha
SMALL_ALPHA = 1e-6
MAX_STEP = 1.0
# isothermal cap on R2; the trapping domains are unbounded when gamma = 1
R2_CAP = 1e6


@dataclass(frozen=True)
class InnerAux:
    delta_t: float
    theta_t: float
    sigma_t: float
    A1: float
    B1: float
    C1: float


def inner_aux(gas: GasModel, U: float, V: float, R: float) -> InnerAux:
    lam = gas.lam
    dt = 1.0 - (U - R) ** 2
    th = V * V - U * (R - U)
    sg = (R - U) * th - U * dt
    A1 = (R - U) * sg - lam * U * (R - U) * th
    C1 = U * V * dt - lam * V * (R - U) * th
    B1 = R * (R - U) * dt - lam * R * (R - U) * th
    return InnerAux(dt, th, sg, A1, B1, C1)


def inner_rhs_uvr(gas: GasModel, y) -> np.ndarray:
    """``d(U, V, R)/dtau`` of the sound-speed-scaled system."""
    a = inner_aux(gas, *(float(v) for v in y))
    return np.array([a.A1, a.C1, a.B1])


def inner_rhs_degenerate(gas: GasModel, y) -> np.ndarray:
    """``d(X, V2, R2)/dtau'`` with ``dtau' = R dtau``."""
    X, V2, R2 = (float(v) for v in y)
    lam = gas.lam
    w = 1.0 - X
    q = V2 - X * w * R2
    return np.array([
        w * (V2 * w - 2.0 * X + X * w * w * R2),
        2.0 * V2 * (X - X * w * w * R2 - lam * w * q),
        2.0 * R2 * w * (1.0 - w * w * R2 - lam * q),
    ])


def degenerate_rhs_log(gas: GasModel):
    """Field on ``(X, V2, ln R2, ln rho)``."""
    lam = gas.lam

    def f(t, y):
        X, V2, lr2 = y[0], y[1], y[2]
        R2 = math.exp(lr2) if lr2 < 700.0 else math.inf
        w = 1.0 - X
        q = V2 - X * w * R2
        return np.array([
            w * (V2 * w - 2.0 * X + X * w * w * R2),
            2.0 * V2 * (X - X * w * w * R2 - lam * w * q),
            2.0 * w * (1.0 - w * w * R2 - lam * q),
            w * q,
        ])

    return f


def cm_approx(gas: GasModel, v2: float) -> tuple[float, float]:
    """Centre-manifold graph ``(X, R2) = (g(V2), h(V2))`` truncated at second order."""
    if not 0.0 <= v2 <= 0.2:
        raise DomainError("centre-manifold approximation valid for 0 <= V2 <= 0.2")
    return 0.5 * v2 - 0.25 * (3.0 - gas.gamma) * v2 * v2, 0.0


def cm_flow_coefficient(gas: GasModel, lo: float = 0.01, hi: float = 0.05, n: int = 41) -> float:
    """Least-squares ``a`` in ``dV2/dtau' = a V2^2 + b V2^3`` along the centre manifold."""
    v = np.linspace(lo, hi, n)
    rate = np.array([inner_rhs_degenerate(gas, (cm_approx(gas, x)[0], x, 0.0))[1] for x in v])
    coef, *_ = np.linalg.lstsq(np.stack([v**2, v**3], axis=1), rate, rcond=None)
    return float(coef[0])


def incoming_direction(gas: GasModel, alpha: float) -> np.ndarray:
    """Unit tangent, in ``(U, V, R)``, of orbits arriving at the target for ``alpha``."""
    g = gas.gamma
    U, _, _ = e_to_inner_target(alpha)
    n = np.array([
        2.0 + 3.0 * (3.0 - g) * U - 5.0 * (g - 1.0) * U * U,
        math.sqrt(U) * ((7.0 - 3.0 * g) * U - (g - 1.0)),
        (1.0 + U) * (g + 3.0 - 5.0 * (g - 1.0) * U),
    ])
    return n / np.linalg.norm(n)


def _target_distance(y) -> float:
    X, V2, lr2 = y[0], y[1], y[2]
    w = 1.0 - X
    if w <= 0.0:
        return math.inf
    return math.hypot(V2 - X / w, lr2 + 2.0 * math.log(w))


def _seed(gas: GasModel, C: float, depth: float) -> np.ndarray:
    p = 1.0 / ((2.0 - gas.gamma) * (depth + C))
    if not 0.0 < p <= 0.2:
        raise DomainError(f"seed V2={p} outside the centre-manifold window")
    X, _ = cm_approx(gas, p)
    return np.array([X, p, -2.0 * depth, 0.0])


def _shoot(gas, C, depth, eps_set, rtol, atol):
    f = degenerate_rhs_log(gas)
    evs = [
        odeint.stationary_approach(
            "landed", lambda t, y: f(t, y)[:3], _target_distance, eps_rhs=eps_set * 1e-3, eps_set=eps_set
        ),
        odeint.surface_crossing("overshoot", lambda y: 0.5 - y[0], direction=-1),
        odeint.surface_crossing("r2_cap", lambda y: math.log(R2_CAP) - y[2], direction=-1),
        odeint.surface_crossing("negative_X", lambda y: y[0] + 1e-300, direction=-1),
    ]
    span = 20.0 * (depth + abs(C)) + 2000.0
    return odeint.integrate(f, _seed(gas, C, depth), rtol=rtol, atol=atol, events=evs, max_span=span, max_step=MAX_STEP)


def landing_alpha(gas: GasModel, C: float, depth: float = SEED_DEPTH, eps_set: float = 1e-8,
                  rtol: float = 1e-11, atol: float = 1e-13):
    """Edge parameter reached from the seed labelled ``C``; ``None`` on overshoot."""
    traj = _shoot(gas, C, depth, eps_set, rtol, atol)
    if traj.termination == "event" and traj.event == "landed":
        return float(traj.y_end[0]), traj
    if traj.termination == "event" and traj.event in ("overshoot", "r2_cap"):
        return None, traj
    raise ClassificationError(f"inner orbit C={C} not classified: {traj.termination} {traj.event}")


@dataclass(frozen=True)
class CenterAsymptote:
    """``u = a r / l``, ``v = k / l^a``, ``rho = d / l^(2a)`` with ``l = ln(sigma/r)``.

    ``sigma`` is stored as its logarithm; it can exceed the float range.
    """

    a: float
    log_sigma: float
    k: float
    d: float
    r_max: float

    def log_term(self, r):
        return self.log_sigma - np.log(np.asarray(r, dtype=float))

    def u(self, r):
        return self.a * np.asarray(r, dtype=float) / self.log_term(r)

    def v(self, r):
        return self.k / self.log_term(r) ** self.a

    def rho(self, r):
        return self.d / self.log_term(r) ** (2.0 * self.a)


@dataclass
class InnerOrbit:
    """Inner-field orbit from the centre to the matching edge point.

    Arrays are ordered by increasing radius. ``r``, ``u``, ``v``, ``c``,
    ``rho`` are physical; ``X``, ``V2``, ``R2`` are the degenerate variables.
    """

    alpha: float
    alpha_landed: float
    C: float
    target: tuple
    r: np.ndarray
    X: np.ndarray
    V2: np.ndarray
    log_r2: np.ndarray
    log_rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    c: np.ndarray
    rho: np.ndarray
    dlogr: np.ndarray
    dstate: np.ndarray
    center: CenterAsymptote
    trajectory: odeint.Trajectory
    diagnostics: dict = field(default_factory=dict)


def _find_C(gas, alpha, depth, tol):
    def h(C):
        a, _ = landing_alpha(gas, C, depth)
        return 1.0 if a is None else a - alpha

    # alpha(C) decreases with C; overshoot counts as "alpha too large"
    hi = max(1.0, 0.5 / alpha)
    while h(hi) > 0.0:
        hi *= 2.0
        if hi > 1e7:
            raise ClassificationError(f"no seed reaches alpha={alpha}")
    lo = hi / 2.0
    while h(lo) < 0.0:
        lo = lo - max(1.0, abs(lo))
        if lo < -0.9 * depth:
            raise ClassificationError(f"no seed overshoots alpha={alpha}")
    # bisect through the overshoot band until both ends land
    while True:
        a_lo, _ = landing_alpha(gas, lo, depth)
        if a_lo is not None:
            break
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, abs(hi)):
            raise ClassificationError(f"alpha={alpha} lies beyond the landing range")
    return brentq(h, lo, hi, xtol=tol, rtol=1e-15, maxiter=200)


def solve_inner(
    gas: GasModel,
    alpha: float,
    c_match: float,
    r_match: float,
    rho_match: Optional[float] = None,
    *,
    depth: float = SEED_DEPTH,
    polish_radius: float = 1e-12,
) -> InnerOrbit:
    """Orbit from the centre to the edge point ``E(alpha)`` at ``r_match``.

    ``rho_match`` is required when ``gamma == 1``; otherwise density follows
    from the sound speed.
    """
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"inner field needs 0 < alpha < 1/2, got {alpha}")
    if not c_match > 0.0:
        raise ValidationError("c_match must be positive")
    U_t, V_t, R_t = e_to_inner_target(alpha)
    if abs(r_match - R_t * c_match) > 1e-6 * r_match:
        raise ValidationError(
            f"r_match={r_match} inconsistent with R* c_match={R_t * c_match}"
        )
    if gas.isothermal and rho_match is None:
        raise ValidationError("isothermal inner field needs rho_match")

    C = _find_C(gas, alpha, depth, tol=1e-13)
    a_land, traj = landing_alpha(gas, C, depth)
    if a_land is None:
        raise ClassificationError("final inner shot overshot")
    f = degenerate_rhs_log(gas)
    ev = odeint.stationary_approach(
        "polished", lambda t, y: f(t, y)[:3], _target_distance, eps_rhs=1e-15, eps_set=polish_radius
    )
    more = odeint.integrate(f, traj.y_end, t0=traj.t_end, events=[ev], max_span=2000.0, max_step=MAX_STEP)
    traj = join(traj, more)
    a_land = float(traj.y_end[0])

    Y = traj.y
    X, V2, lr2, lrho = Y[:, 0], Y[:, 1], Y[:, 2], Y[:, 3]
    lam = gas.lam
    lrho_end = lrho[-1]
    if gas.isothermal:
        c = np.full_like(X, c_match)
        rho = rho_match * np.exp(lrho - lrho_end)
    else:
        c = c_match * np.exp(lam * (lrho - lrho_end))
        rho = (c * c / (gas.gamma * gas.a2)) ** (1.0 / (gas.gamma - 1.0))
    R = np.exp(0.5 * lr2)
    r = R * c
    u = X * r
    v = np.sqrt(np.maximum(V2, 0.0)) * c
    dY = np.array([f(0.0, y) for y in Y])
    dlogr = 0.5 * dY[:, 2] + lam * dY[:, 3]

    a = 1.0 / (2.0 * (2.0 - gas.gamma))
    ell = a / X[0]
    center = CenterAsymptote(
        a=a,
        log_sigma=float(math.log(r[0]) + ell),
        k=float(v[0] * ell**a),
        d=float(rho[0] * ell ** (2.0 * a)),
        r_max=float(r[0]),
    )
    orbit = InnerOrbit(
        alpha=alpha,
        alpha_landed=a_land,
        C=C,
        target=(U_t, V_t, R_t),
        r=r, X=X, V2=V2, log_r2=lr2, log_rho=lrho,
        u=u, v=v, c=c, rho=rho,
        dlogr=dlogr, dstate=dY,
        center=center,
        trajectory=traj,
    )
    orbit.diagnostics = inner_diagnostics(gas, orbit)
    return orbit


def inner_diagnostics(gas: GasModel, orbit: InnerOrbit) -> dict:
    """Limit behaviour at the centre, approach tangent at the edge and region monitors."""
    X, V2, R2 = orbit.X, orbit.V2, np.exp(orbit.log_r2)
    U = X * np.sqrt(R2)
    V = np.sqrt(V2)
    R = np.sqrt(R2)
    mach = np.sqrt(U * U + V * V)
    pseudo = np.sqrt((U - R) ** 2 + V * V)
    r = orbit.r
    lr = np.log(r)
    # the two smallest decades of r actually resolved by the orbit
    low = lr <= lr[0] + 2.0 * math.log(10.0)
    dec1 = lr <= lr[0] + math.log(10.0)
    ratio = V2[dec1] / X[dec1]
    ctr = orbit.center
    shape = orbit.u[dec1] / (r[dec1] / ctr.log_term(r[dec1]))
    k_rel = ctr.k**2 * (2.0 - gas.gamma) / (gas.gamma * gas.a2 * ctr.d ** (gas.gamma - 1.0))

    # approach tangent at the target, in (U, V, R)
    tgt = np.array(orbit.target)
    pts = np.stack([U, V, R], axis=1)
    dist = np.linalg.norm(pts - tgt, axis=1)
    sel = np.nonzero((dist < 1e-4) & (dist > 1e-9))[0]
    tangent_cos = math.nan
    if sel.size:
        d = pts[sel[0]] - tgt
        tangent_cos = float(abs(d @ incoming_direction(gas, orbit.alpha)) / np.linalg.norm(d))

    aux = [inner_aux(gas, *p) for p in pts]
    A1 = np.array([q.A1 for q in aux])
    B1 = np.array([q.B1 for q in aux])
    C1 = np.array([q.C1 for q in aux])
    far = dist > 1e-6
    return {
        "v2_over_x_center": float(ratio[0]),
        "v2_over_x_decade_max_dev": float(np.max(np.abs(ratio / 2.0 - 1.0))),
        "mach_monotone_center": bool(np.all(np.diff(mach[low]) > 0.0)),
        "pseudo_mach_monotone_center": bool(np.all(np.diff(pseudo[low]) > 0.0)),
        "mach_center": float(mach[0]),
        "pseudo_mach_center": float(pseudo[0]),
        "profile_shape_ratio": float(np.median(shape) / ctr.a),
        "k2_relation_ratio": float(k_rel),
        "c_increasing": bool(np.all(np.diff(orbit.c) >= -1e-12 * orbit.c[1:])),
        "r_increasing": bool(np.all(np.diff(r) > 0.0)),
        "tangent_cos": tangent_cos,
        "min_A1": float(np.min(A1[far])) if far.any() else math.nan,
        "min_B1": float(np.min(B1[far])) if far.any() else math.nan,
        "min_C1": float(np.min(C1[far])) if far.any() else math.nan,
        "landing_error": abs(orbit.alpha_landed - orbit.alpha),
        "r_center": float(r[0]),
        "flow_coefficient": cm_flow_coefficient(gas),
    }


@dataclass(frozen=True)
class SmallAlphaInner:
    """Inner field for a tiny edge parameter, to leading order in ``alpha``.

    With ``X, V2 = O(alpha)`` the degenerate system decouples: ``V2`` is
    constant, ``R2`` follows ``d ln R2 = 2 (1 - R2)`` and ``X`` solves a
    linear equation, giving ``X = alpha (1 - sqrt(1 - R^2)) / R^2``. The
    density picks up ``d ln rho / d ln R2 = alpha / (2 sqrt(1 - R2))``,
    so ``rho = rho_match ((1 + sqrt(1 - R^2)) / R)^(-alpha)``.
    Neglected terms are ``O(alpha^2)``.
    """

    gas: GasModel
    alpha: float
    c_match: float
    r_match: float
    rho_match: float

    def state(self, r) -> np.ndarray:
        """``(n, 3)`` array of ``(rho, u, v)`` for ``0 < r <= r_match``."""
        r = np.asarray(r, dtype=float)
        a = self.alpha
        R = np.clip(r / self.r_match, 1e-300, 1.0)
        R2 = R * R
        s = np.sqrt(1.0 - R2)
        # (1 - s)/R2 written as 1/(1 + s) to avoid cancellation at small R
        X = a / (1.0 + s)
        # integral of the density equation from the edge: -(a/2) ln((1+s)/(1-s))
        lrho = -a * np.log((1.0 + s) / R)
        rho = self.rho_match * np.exp(lrho)
        c = self.c_match if self.gas.isothermal else self.c_match * np.exp(self.gas.lam * lrho)
        v = np.sqrt(a / (1.0 - a)) * c
        out = np.empty((r.size, 3))
        out[:, 0] = rho
        out[:, 1] = X * r
        out[:, 2] = v
        return out

    def center(self, r_c: float) -> CenterAsymptote:
        """Centre asymptote continuing the leading-order field below ``r_c``."""
        rho, u, v = self.state(np.array([r_c]))[0]
        a = 1.0 / (2.0 * (2.0 - self.gas.gamma))
        ell = a * r_c / u
        return CenterAsymptote(a=a, log_sigma=math.log(r_c) + ell, k=v * ell**a,
                               d=rho * ell ** (2.0 * a), r_max=r_c)


def small_alpha_inner(gas: GasModel, alpha: float, c_match: float, r_match: float,
                      rho_match: float) -> SmallAlphaInner:
    if not 0.0 < alpha < SMALL_ALPHA:
        raise DomainError(f"leading-order inner field needs 0 < alpha < {SMALL_ALPHA}")
    return SmallAlphaInner(gas, alpha, c_match, r_match, rho_match)
