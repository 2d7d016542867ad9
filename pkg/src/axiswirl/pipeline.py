"""Assembly of complete self-similar solutions.

A solution is an ordered list of pieces covering ``0 <= xi < inf``. Each
piece carries everything needed to evaluate it without re-integration:
closed forms, cubic Hermite interpolants in the orbit parameter built from the
integrator's dense output, or asymptotic tails at the centre.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import midfield, zeroswirl
from .errors import AssemblyError, ClassificationError, DomainError, ValidationError
from .farfield import DEFAULT_S_INIT, endpoint_alpha, r_star, series_state
from .gas import FarFieldDatum, GasModel, PrimitiveState, sound_speed
from .innerfield import (
    SMALL_ALPHA,
    CenterAsymptote,
    InnerOrbit,
    degenerate_rhs_log,
    small_alpha_inner,
    solve_inner,
)

__all__ = [
    "CaseLabel",
    "Piece",
    "PiecewiseSolution",
    "CriticalMach",
    "OrbitInterpolant",
    "solve",
    "solve_transitional",
    "predict_case",
    "critical_mach",
    "evaluate",
    "evaluate_many",
    "sample_field",
    "profile_table",
    "CONTINUITY_TOL",
]

CONTINUITY_TOL = 1e-6
# node spacing of the Hermite interpolants: state moves at most this much
NODE_DELTA = 0.004
# and ln xi moves at most NODE_DELTA / LOG_XI_WEIGHT
LOG_XI_WEIGHT = 0.2
# parameter spacing where orbits bend fastest: within FINE_WINDOW e-folds of
# radius from an end that sits on an equilibrium of the rescaled field
FINE_DT = 0.005
FINE_WINDOW = 6.0
# the leading-order small-alpha inner field hands over to the centre asymptote here
SMALL_ALPHA_CENTER = 1e-6
# |alpha - 1/2| below this is the degenerate boundary between cases Ia and Ib
DEGENERATE_ALPHA = 1e-12


class CaseLabel(str, enum.Enum):
    Ia = "Ia"
    Ib = "Ib"
    Ic = "Ic"
    Id = "Id"
    II_smooth = "II_smooth"
    II_vacuum = "II_vacuum"
    II_cavity = "II_cavity"
    zeroswirl_core = "zeroswirl_core"
    zeroswirl_vacuum = "zeroswirl_vacuum"
    zeroswirl_transitional = "zeroswirl_transitional"
    isothermal_cavity = "isothermal_cavity"

    def __str__(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# pieces


@dataclass
class Piece:
    """One smooth piece on ``lo <= xi < hi``.

    ``kind`` is one of ``explicit_farfield``, ``farfield_series``,
    ``ode_arc``, ``inner_arc``, ``inner_small_alpha``, ``constant_core``,
    ``vacuum``, ``asymptotic_center`` or ``transitional_center``. ``fn`` maps an array
    of radii to an ``(n, 3)`` array of ``(rho, u, v)``; vacuum rows have
    ``u = v = nan``.
    """

    kind: str
    lo: float
    hi: float
    fn: object = field(repr=False)
    info: dict = field(default_factory=dict)

    def evaluate(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return np.asarray(self.fn(xi), dtype=float).reshape(xi.size, 3)

    @property
    def asymptotic(self) -> bool:
        return self.kind in ("asymptotic_center", "transitional_center")


def _rho_from_c(gas: GasModel, c):
    return (np.asarray(c) ** 2 / (gas.gamma * gas.a2)) ** (1.0 / (gas.gamma - 1.0))


def _constant_piece(kind, lo, hi, rho, u=0.0, v=0.0) -> Piece:
    def fn(xi):
        out = np.empty((xi.size, 3))
        out[:] = (rho, u, v)
        return out

    return Piece(kind, lo, hi, fn, {"rho": rho})


def _vacuum_piece(hi: float, r_edge: float) -> Piece:
    def fn(xi):
        out = np.full((xi.size, 3), np.nan)
        out[:, 0] = 0.0
        return out

    return Piece("vacuum", 0.0, hi, fn, {"r_edge": r_edge})


def _explicit_piece(gas: GasModel, datum: FarFieldDatum) -> Piece:
    rs = r_star(gas, datum)
    v0, rho0 = datum.v0, datum.rho0

    def fn(xi):
        out = np.empty((xi.size, 3))
        out[:, 0] = rho0
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.maximum(xi, rs)
            out[:, 1] = np.where(np.isinf(xi), 0.0, v0 * v0 / r)
            out[:, 2] = np.where(np.isinf(xi), v0, v0 / r * np.sqrt(np.maximum(r * r - v0 * v0, 0.0)))
        return out

    return Piece("explicit_farfield", rs, math.inf, fn, {"r_star": rs})


def _series_piece(datum: FarFieldDatum, s_init: float) -> Piece:
    def fn(xi):
        with np.errstate(divide="ignore"):
            s = np.where(np.isinf(xi), 0.0, 1.0 / xi)
        return series_state(datum, s)

    return Piece("farfield_series", 1.0 / s_init, math.inf, fn, {"s_init": s_init})


class OrbitInterpolant:
    """Cubic Hermite splines of an orbit in its own parameter ``tau``, queried by ``ln xi``.

    States are smooth in ``tau`` even where they are only Hoelder
    continuous in ``xi`` (orbits ending on an equilibrium), so the
    interpolation is done in ``tau`` and ``ln xi(tau)`` is inverted by
    bisection inside the bracketing node interval.
    """

    def __init__(self, tau, Y, F, x, dx):
        order = np.argsort(tau)
        tau, Y, F, x, dx = tau[order], Y[order], F[order], x[order], dx[order]
        keep = np.concatenate([[True], np.diff(tau) > 0.0])
        tau, Y, F, x, dx = tau[keep], Y[keep], F[keep], x[keep], dx[keep]
        sign = 1.0 if x[-1] > x[0] else -1.0
        # the polished end sits on the equilibrium within rounding; cut it once x stalls
        mono = np.concatenate([[True], sign * np.diff(x) > 0.0])
        stop = int(np.argmin(mono)) if not mono.all() else x.size
        if stop < 2:
            raise AssemblyError("orbit has fewer than two monotone nodes")
        self.tau, self.x = tau[:stop], x[:stop]
        self.sign = sign
        self.Y = CubicHermiteSpline(self.tau, Y[:stop], F[:stop], axis=0)
        self.X = CubicHermiteSpline(self.tau, self.x, dx[:stop])
        self.x_lo, self.x_hi = float(np.min(self.x)), float(np.max(self.x))

    @property
    def nodes(self) -> int:
        return int(self.tau.size)

    def tau_of(self, lx) -> np.ndarray:
        lx = np.clip(np.asarray(lx, dtype=float), self.x_lo, self.x_hi)
        sx = self.sign * self.x
        k = np.clip(np.searchsorted(sx, self.sign * lx), 1, self.tau.size - 1)
        a, b = self.tau[k - 1].copy(), self.tau[k].copy()
        target = self.sign * lx
        for _ in range(64):
            m = 0.5 * (a + b)
            below = self.sign * self.X(m) < target
            a = np.where(below, m, a)
            b = np.where(below, b, m)
        return 0.5 * (a + b)

    def __call__(self, lx) -> np.ndarray:
        return self.Y(self.tau_of(lx))


def _mid_arc_piece(gas: GasModel, traj, zero_swirl: bool) -> Piece:
    """Piece from a ``(I, [J,] K, ln s, ln rho)`` orbit."""
    f = zeroswirl.rescaled_rhs(gas) if zero_swirl else midfield.rescaled_rhs(gas)

    def full(y):
        return np.array([y[0], 0.0, y[1], y[2], y[3]]) if zero_swirl else np.asarray(y)

    def key(y):
        z = full(y)
        return np.array([z[0], z[1], z[2], LOG_XI_WEIGHT * z[3]])

    x_ends = (-traj.y[0][-2 if zero_swirl else 3], -traj.y_end[-2 if zero_swirl else 3])

    def max_dt(y):
        x = -y[-2]
        near = min(abs(x - x_ends[0]), abs(x - x_ends[1])) < FINE_WINDOW
        return FINE_DT if near else math.inf

    tau, Y = traj.resample(NODE_DELTA, key=key, max_dt=max_dt)
    Z = np.array([full(y) for y in Y])
    F = np.array([full(f(0.0, y)) for y in Y])
    if zero_swirl:
        F[:, 1] = 0.0
    interp = OrbitInterpolant(tau, Z, F, -Z[:, 3], -F[:, 3])
    iso = gas.isothermal

    def fn(xi):
        I, J, K, _, lr = interp(np.log(xi)).T
        out = np.empty((xi.size, 3))
        out[:, 0] = np.exp(lr) if iso else _rho_from_c(gas, np.maximum(K, 0.0) * xi)
        out[:, 1] = I * xi
        out[:, 2] = J * xi
        return out

    return Piece("ode_arc", math.exp(interp.x_lo), math.exp(interp.x_hi), fn,
                 {"nodes": interp.nodes, "interpolant": interp, "trajectory": traj})


def _inner_arc_piece(gas: GasModel, orbit: InnerOrbit, c_match: float, r_match: float,
                     rho_match: Optional[float]) -> Piece:
    f = degenerate_rhs_log(gas)
    lam = 0.0 if gas.isothermal else gas.lam
    iso = gas.isothermal
    lrho_end = float(orbit.log_rho[-1])
    lc_match = math.log(c_match)

    def key(y):
        return np.array([y[0], y[1], lam * y[3], LOG_XI_WEIGHT * (0.5 * y[2] + lam * y[3])])

    def xof(y):
        return 0.5 * y[2] + lc_match + lam * (y[3] - lrho_end)

    x_end = math.log(r_match)

    def max_dt(y):
        return FINE_DT if x_end - xof(y) < FINE_WINDOW else math.inf

    tau, Y = orbit.trajectory.resample(NODE_DELTA, key=key, max_dt=max_dt)
    F = np.array([f(0.0, y) for y in Y])
    x = np.array([xof(y) for y in Y])
    interp = OrbitInterpolant(tau, Y, F, x, 0.5 * F[:, 2] + lam * F[:, 3])

    def fn(xi):
        X, V2, _, lrho = interp(np.log(xi)).T
        if iso:
            c = np.full_like(X, c_match)
            rho = rho_match * np.exp(lrho - lrho_end)
        else:
            c = c_match * np.exp(lam * (lrho - lrho_end))
            rho = _rho_from_c(gas, c)
        out = np.empty((xi.size, 3))
        out[:, 0] = rho
        out[:, 1] = X * xi
        out[:, 2] = np.sqrt(np.maximum(V2, 0.0)) * c
        return out

    return Piece("inner_arc", math.exp(interp.x_lo), r_match, fn,
                 {"nodes": interp.nodes, "alpha": orbit.alpha, "interpolant": interp})


def _center_piece(center: CenterAsymptote, hi: float) -> Piece:
    def fn(xi):
        out = np.zeros((xi.size, 3))
        pos = xi > 0.0
        r = xi[pos]
        out[pos, 0] = center.rho(r)
        out[pos, 1] = center.u(r)
        out[pos, 2] = center.v(r)
        return out

    return Piece("asymptotic_center", 0.0, hi, fn, {"a": center.a, "log_sigma": center.log_sigma,
                                                   "k": center.k, "d": center.d})


def _transitional_center(gas: GasModel, end_state: np.ndarray, hi: float) -> Piece:
    """Linearized centre below a near-hyperbolic endpoint: ``u, c ~ xi`` and ``v ~ xi^p``.

    ``p = 1/(gamma - 1)`` comes from the decay of ``J`` along the neutral
    direction of the hyperbolic point relative to ``d ln s``.
    """
    I, J, K = (float(v) for v in end_state[:3])
    lr = float(end_state[4]) if end_state.size > 4 else 0.0
    iso = gas.isothermal
    p = math.inf if iso else 1.0 / (gas.gamma - 1.0)

    def fn(xi):
        out = np.empty((xi.size, 3))
        t = xi / hi
        out[:, 0] = math.exp(lr) if iso else _rho_from_c(gas, K * xi)
        out[:, 1] = I * xi
        out[:, 2] = J * hi * t**p if J > 0.0 else 0.0
        return out

    return Piece("transitional_center", 0.0, hi, fn, {"I": I, "J": J, "K": K, "swirl_exponent": p})


# ---------------------------------------------------------------------------
# solution container


@dataclass
class PiecewiseSolution:
    """Pieces ordered from the centre outward; ``breakpoints[i]`` joins pieces ``i`` and ``i+1``."""

    gas: GasModel
    datum: FarFieldDatum
    case: CaseLabel
    pieces: list
    breakpoints: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    swirl_sign: int = 1

    def piece_index(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        edges = np.array(self.breakpoints, dtype=float)
        return np.searchsorted(edges, xi, side="right")

    @property
    def max_mismatch(self) -> float:
        return max(self.mismatches, default=0.0)


def _scales(gas: GasModel, datum: FarFieldDatum):
    c0 = sound_speed(gas, datum.rho0)
    return datum.rho0, max(datum.u0, datum.v0, float(c0))


def _mismatch(a: np.ndarray, b: np.ndarray, rho_ref: float, vel_ref: float) -> float:
    """Largest component gap relative to ``max(|a|, |b|, reference scale)``; vacuum velocities skipped."""
    worst = 0.0
    for k, ref in zip(range(3), (rho_ref, vel_ref, vel_ref)):
        if not (np.isfinite(a[k]) and np.isfinite(b[k])):
            continue
        den = max(abs(a[k]), abs(b[k]), ref)
        worst = max(worst, abs(a[k] - b[k]) / den)
    return worst


def _assemble(gas, datum, case, pieces, diagnostics, sign=1, strict=True) -> PiecewiseSolution:
    """Fix the domain boundaries from the centre outward and measure continuity."""
    pieces = list(pieces)
    pieces[0].lo = 0.0
    breaks = []
    for inner, outer in zip(pieces[:-1], pieces[1:]):
        b = outer.lo
        inner.hi = b
        breaks.append(b)
    pieces[-1].hi = math.inf
    rho_ref, vel_ref = _scales(gas, datum)
    mism = []
    for b, inner, outer in zip(breaks, pieces[:-1], pieces[1:]):
        mism.append(_mismatch(inner.evaluate(b)[0], outer.evaluate(b)[0], rho_ref, vel_ref))
    sol = PiecewiseSolution(gas, datum, case, pieces, breaks, mism, diagnostics, sign)
    if strict and sol.max_mismatch > CONTINUITY_TOL:
        k = int(np.argmax(mism))
        raise AssemblyError(
            f"pieces {pieces[k].kind}/{pieces[k + 1].kind} disagree by {mism[k]:.3e} at xi={breaks[k]!r}"
        )
    return sol


# ---------------------------------------------------------------------------
# case construction


def _inner_chain(gas, alpha, c_match, r_match, rho_match, diagnostics):
    """Asymptotic centre plus inner arc ending at ``r_match``."""
    if alpha < SMALL_ALPHA:
        return _small_alpha_chain(gas, alpha, c_match, r_match, rho_match, diagnostics)
    orbit = solve_inner(gas, alpha, c_match, r_match, rho_match if gas.isothermal else None)
    diagnostics["inner"] = orbit.diagnostics
    diagnostics["inner_alpha"] = alpha
    arc = _inner_arc_piece(gas, orbit, c_match, r_match, rho_match)
    center = _center_piece(orbit.center, arc.lo)
    return [center, arc]


def _small_alpha_chain(gas, alpha, c_match, r_match, rho_match, diagnostics):
    inner = small_alpha_inner(gas, alpha, c_match, r_match, rho_match)
    r_c = SMALL_ALPHA_CENTER * r_match
    diagnostics["inner"] = {"small_alpha": True}
    diagnostics["inner_alpha"] = alpha

    def fn(xi):
        return inner.state(xi)

    arc = Piece("inner_small_alpha", r_c, r_match, fn, {"alpha": alpha})
    return [_center_piece(inner.center(r_c), r_c), arc]


def _edge_match(gas: GasModel, y: np.ndarray):
    """Physical ``(alpha, c, r, rho)`` at a polished edge endpoint of a mid orbit."""
    alpha = float(y[0])
    r = math.exp(-y[3])
    c = float(y[2]) * r
    rho = math.exp(y[4]) if gas.isothermal else float(_rho_from_c(gas, c))
    # the inner solver wants r on the exact edge point for alpha
    return alpha, c, c / (1.0 - alpha), rho


def _finish_mid(gas, datum, outcome: midfield.MidOutcome, head: list, diagnostics, labels):
    """Pieces below a classified intermediate orbit; ``labels`` maps outcome kind to a case."""
    arc = _mid_arc_piece(gas, outcome.trajectory, zero_swirl=False)
    diagnostics["mid_outcome"] = outcome.kind
    diagnostics["p66_distance"] = outcome.p66_distance
    y = outcome.trajectory.y_end
    if outcome.kind == "vacuum":
        diagnostics["vacuum_edge"] = outcome.u_end
        tail = [_vacuum_piece(arc.lo, outcome.u_end)]
    elif outcome.kind == "edge":
        alpha, c, r, rho = _edge_match(gas, y)
        diagnostics["edge_radius"] = r
        tail = _inner_chain(gas, alpha, c, r, rho, diagnostics)
        arc.lo = r
    else:
        tail = [_transitional_center(gas, y, arc.lo)]
        diagnostics["center_swirl_exponent"] = tail[0].info["swirl_exponent"]
    case = labels[outcome.kind]
    return _assemble(gas, datum, case, tail + [arc] + head, diagnostics)


def _solve_zeroswirl(gas, datum, s_init) -> PiecewiseSolution:
    out = zeroswirl.classify_zeroswirl(gas, datum, s_init=s_init)
    arc = _mid_arc_piece(gas, out.trajectory, zero_swirl=True)
    tail_piece = _series_piece(datum, s_init)
    diag = {"zeroswirl_outcome": out.kind, "saddle_distance": out.saddle_distance}
    if out.kind == "core":
        diag["core_radius"] = out.r_end
        diag["core_density"] = out.rho_end
        centre = [_constant_piece("constant_core", 0.0, arc.lo, out.rho_end)]
        case = CaseLabel.zeroswirl_core
    elif out.kind == "vacuum":
        diag["vacuum_edge"] = out.u_end
        centre = [_vacuum_piece(arc.lo, out.u_end)]
        case = CaseLabel.zeroswirl_vacuum
    else:
        y = out.trajectory.y_end
        state = np.array([y[0], 0.0, y[1], y[2], y[3]])
        centre = [_transitional_center(gas, state, arc.lo)]
        case = CaseLabel.zeroswirl_transitional
    return _assemble(gas, datum, case, centre + [arc, tail_piece], diag)


def _still_alpha(gas: GasModel, datum: FarFieldDatum) -> float:
    alpha = endpoint_alpha(gas, datum)
    if abs(alpha - 0.5) < DEGENERATE_ALPHA:
        raise DomainError(
            "swirl Mach number sqrt(2) puts the far-field endpoint on the degenerate edge point I = 1/2"
        )
    return alpha


def _solve_still(gas, datum) -> PiecewiseSolution:
    """``u0 = 0``: closed-form far field down to ``r*``, then per the endpoint ``I*``."""
    outer = _explicit_piece(gas, datum)
    rs = outer.lo
    alpha = _still_alpha(gas, datum)
    c0 = float(sound_speed(gas, datum.rho0))
    diag = {"r_star": rs, "I_star": alpha}
    iso_label = CaseLabel.isothermal_cavity if gas.isothermal else None
    if alpha < 0.5:
        pieces = _inner_chain(gas, alpha, c0, rs, datum.rho0, diag) + [outer]
        return _assemble(gas, datum, iso_label or CaseLabel.Ia, pieces, diag)
    out = midfield.classify_launch(gas, alpha, s0=1.0 / rs, rho0=datum.rho0)
    labels = {"edge": CaseLabel.Ib, "vacuum": CaseLabel.Id, "hyperbolic_point": CaseLabel.Ic}
    if iso_label:
        labels = {k: iso_label for k in labels}
    return _finish_mid(gas, datum, out, [outer], diag, labels)


def _solve_swirling(gas, datum, s_init) -> PiecewiseSolution:
    out = midfield.classify_midfield(gas, datum, s_init=s_init)
    labels = {"edge": CaseLabel.II_cavity, "vacuum": CaseLabel.II_vacuum,
              "hyperbolic_point": CaseLabel.II_smooth}
    if gas.isothermal:
        labels = {k: CaseLabel.isothermal_cavity for k in labels}
    return _finish_mid(gas, datum, out, [_series_piece(datum, s_init)], {}, labels)


def solve(gas: GasModel, datum: FarFieldDatum, *, s_init: float = DEFAULT_S_INIT) -> PiecewiseSolution:
    """Self-similar solution for a constant swirling initial state.

    Raises
    ------
    DomainError
        For the degenerate swirl Mach number ``sqrt(2)`` with ``u0 = 0``.
    AssemblyError
        If adjacent pieces disagree by more than ``CONTINUITY_TOL``.
    """
    if not isinstance(gas, GasModel) or not isinstance(datum, FarFieldDatum):
        raise ValidationError("solve expects a GasModel and a FarFieldDatum")
    if datum.u0 == 0.0 and datum.v0 == 0.0:
        piece = _constant_piece("constant_core", 0.0, math.inf, datum.rho0)
        return PiecewiseSolution(gas, datum, CaseLabel.zeroswirl_core, [piece], [], [], {"trivial": True})
    if datum.v0 == 0.0:
        return _solve_zeroswirl(gas, datum, s_init)
    if datum.u0 == 0.0:
        return _solve_still(gas, datum)
    return _solve_swirling(gas, datum, s_init)


def predict_case(gas: GasModel, datum: FarFieldDatum) -> CaseLabel:
    """Case label for ``u0 = 0`` data from ``I*`` alone, without assembling the solution."""
    if datum.u0 != 0.0 or datum.v0 <= 0.0:
        raise ValidationError("case prediction covers u0 = 0, v0 > 0 only")
    alpha = _still_alpha(gas, datum)
    if gas.isothermal:
        return CaseLabel.isothermal_cavity
    if alpha < 0.5:
        return CaseLabel.Ia
    ih = midfield.find_Ih(gas)
    if alpha < ih.lo:
        return CaseLabel.Ib
    if alpha > ih.hi:
        return CaseLabel.Id
    return CaseLabel.Ic


def _truncate_closest(traj, point):
    """Trajectory cut at its sample nearest ``point`` in ``(I, J, K)``."""
    d = np.linalg.norm(traj.y[:, :3] - np.asarray(point), axis=1)
    k = int(np.argmin(d))
    out = type(traj)(traj.t[: k + 1], traj.y[: k + 1], "truncated", None, "", [])
    out._pieces = traj._pieces[:k]
    return out, float(d[k])


def solve_transitional(gas: GasModel, rho0: float = 1.0, ratio: Optional[float] = None) -> PiecewiseSolution:
    """Best-effort solution for the critical datum (case Ic, or II_smooth along ``u0/v0 = ratio``).

    The critical orbit is only known within a bisection bracket. The
    cavity-side orbit of the bracket is followed to its closest approach
    to the hyperbolic point and closed there with the linearized centre;
    the approach distance is reported as ``p66_distance``.
    """
    crit = critical_mach(gas, ratio=ratio)
    c0 = float(sound_speed(gas, rho0))
    P = np.array(midfield.hyperbolic_point(gas))
    if ratio is None:
        m = crit.lo
        datum = FarFieldDatum(rho0, 0.0, m * c0)
        head = [_explicit_piece(gas, datum)]
        alpha = _still_alpha(gas, datum)
        out = midfield.classify_launch(gas, alpha, s0=1.0 / head[0].lo, rho0=rho0)
        diag = {"r_star": head[0].lo, "I_star": alpha}
        case = CaseLabel.Ic
    else:
        m = crit.lo
        speed = m * c0
        datum = FarFieldDatum(rho0, speed * ratio / math.hypot(1.0, ratio), speed / math.hypot(1.0, ratio))
        head = [_series_piece(datum, DEFAULT_S_INIT)]
        out = midfield.classify_midfield(gas, datum)
        diag = {}
        case = CaseLabel.II_smooth
    traj, dist = _truncate_closest(out.trajectory, P)
    arc = _mid_arc_piece(gas, traj, zero_swirl=False)
    centre = _transitional_center(gas, traj.y_end, arc.lo)
    diag.update({"p66_distance": dist, "bracket": (crit.lo, crit.hi), "mach": m,
                 "center_swirl_exponent": centre.info["swirl_exponent"], "best_effort": True})
    return _assemble(gas, datum, case, [centre, arc] + head, diag)


# ---------------------------------------------------------------------------
# critical Mach numbers


@dataclass(frozen=True)
class CriticalMach:
    """Threshold Mach number ``M_h`` with its bisection bracket; ``I_h`` only for ``u0 = 0``."""

    M_h: float
    lo: float
    hi: float
    I_h: Optional[float] = None

    @property
    def infinite(self) -> bool:
        return math.isinf(self.M_h)


def _ray_kind(gas: GasModel, m: float, ratio: float) -> str:
    c0 = float(sound_speed(gas, 1.0))
    h = math.hypot(1.0, ratio)
    datum = FarFieldDatum(1.0, m * c0 * ratio / h, m * c0 / h)
    try:
        return midfield.classify_midfield(gas, datum, refine=False).kind
    except ClassificationError:
        return "undecided"


def critical_mach(gas: GasModel, ratio: Optional[float] = None, width: float = 1e-4) -> CriticalMach:
    """Threshold between cavity and vacuum outcomes.

    ``ratio=None`` is the ``u0 = 0`` family, parametrized by ``v0/c0``.
    Otherwise the ray ``u0/v0 = ratio`` is parametrized by
    ``sqrt(u0^2 + v0^2)/c0``.
    """
    if gas.isothermal:
        return CriticalMach(math.inf, math.inf, math.inf, 1.0 if ratio is None else None)
    if ratio is None:
        ih = midfield.find_Ih(gas)
        return CriticalMach(ih.M_h, midfield.mach_from_alpha(ih.lo), midfield.mach_from_alpha(ih.hi), ih.I_h)
    if not ratio > 0.0:
        raise ValidationError("ray ratio u0/v0 must be positive")
    lo, hi = 0.05, 2.0 * midfield.find_Ih(gas).M_h
    if _ray_kind(gas, lo, ratio) != "edge":
        raise ClassificationError(f"ray u0/v0={ratio} has no cavity outcome at Mach {lo}")
    while _ray_kind(gas, hi, ratio) != "vacuum":
        hi *= 2.0
        if hi > 1e3:
            raise ClassificationError(f"ray u0/v0={ratio} reaches no vacuum below Mach 1e3")
    while hi - lo > width * hi:
        mid = 0.5 * (lo + hi)
        k = _ray_kind(gas, mid, ratio)
        if k == "edge":
            lo = mid
        elif k == "vacuum":
            hi = mid
        else:
            lo = hi = mid
    return CriticalMach(0.5 * (lo + hi), lo, hi)


# ---------------------------------------------------------------------------
# evaluation


def evaluate_many(sol: PiecewiseSolution, xi) -> np.ndarray:
    """``(n, 3)`` array of ``(rho, u, v)``; vacuum rows carry ``nan`` velocities."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi < 0.0):
        raise DomainError("radius must be non-negative")
    idx = sol.piece_index(xi)
    out = np.empty((xi.size, 3))
    for k in np.unique(idx):
        sel = idx == k
        out[sel] = sol.pieces[k].evaluate(xi[sel])
    out[:, 2] *= sol.swirl_sign
    return out


def evaluate(sol: PiecewiseSolution, xi: float) -> PrimitiveState:
    rho, u, v = evaluate_many(sol, [xi])[0]
    if rho == 0.0:
        return PrimitiveState.vacuum(float(xi))
    return PrimitiveState(float(xi), float(rho), float(u), float(v))


def sample_field(sol: PiecewiseSolution, t: float, extent: float, n: int, workers: int = 1):
    """Planar field on the ``n x n`` node grid covering ``|x|, |y| <= extent`` at time ``t``.

    Returns ``(x, y, rho, ux, uy)`` as ``(n, n)`` arrays indexed ``[row, col]``
    with rows running along ``y``. Vacuum nodes have ``nan`` velocities.
    Row blocks are evaluated on ``workers`` threads; the solution is only
    read, so the result does not depend on the thread count.
    """
    if not t > 0.0:
        raise ValidationError("time must be positive")
    if not extent > 0.0 or n < 2:
        raise ValidationError("field grid needs extent > 0 and n >= 2")
    if workers < 1:
        raise ValidationError("workers must be at least 1")
    ax = np.linspace(-extent, extent, n)
    X, Y = np.meshgrid(ax, ax)
    R = np.hypot(X, Y)
    th = np.arctan2(Y, X)
    vals = np.empty((n, n, 3))

    def rows(block):
        vals[block] = evaluate_many(sol, (R[block] / t).ravel()).reshape(-1, n, 3)

    blocks = [slice(a, min(a + max(1, n // (4 * workers)), n)) for a in range(0, n, max(1, n // (4 * workers)))]
    if workers == 1:
        for b in blocks:
            rows(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(rows, blocks))
    rho, u, v = vals[..., 0], vals[..., 1], vals[..., 2]
    cos, sin = np.cos(th), np.sin(th)
    ux = u * cos - v * sin
    uy = u * sin + v * cos
    return X, Y, rho, ux, uy


def profile_table(sol: PiecewiseSolution, xi: Sequence[float]) -> np.ndarray:
    """Rows ``(xi, rho, u, v, c, mach, pseudo_mach, piece_index)``."""
    xi = np.asarray(xi, dtype=float)
    vals = evaluate_many(sol, xi)
    rho, u, v = vals.T
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(rho > 0.0, sound_speed(sol.gas, np.maximum(rho, 1e-300)), np.nan)
        mach = np.hypot(u, v) / c
        pseudo = np.hypot(u - xi, v) / c
    return np.column_stack([xi, rho, u, v, c, mach, pseudo, sol.piece_index(xi)])
