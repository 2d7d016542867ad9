"""Independent checks of assembled solutions and orbits.

Residuals are measured in the strong radial form of the self-similar
equations by finite differences of the stored interpolants, so they test
the assembly and the interpolation as well as the integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import odeint
from .gas import GasModel, e_point, sound_speed
from .innerfield import inner_rhs_degenerate
from .midfield import (
    eigen_at_edge,
    eigen_at_p66,
    hyperbolic_point,
    midfield_rhs_tau,
    rescaled_rhs,
    surface_values,
)
from .pipeline import PiecewiseSolution, evaluate_many
from .zeroswirl import rescaled_rhs as zs_rescaled_rhs
from .zeroswirl import vacuum_edge_slopes

__all__ = [
    "RESIDUAL_TOL",
    "PieceResidual",
    "ResidualReport",
    "strong_form_rhs",
    "residual_check",
    "MonitorReport",
    "appendix_monitors",
    "solution_monitors",
    "s_end_convergence",
    "numerical_jacobian",
    "EigenCheck",
    "jacobian_crosscheck",
    "VacuumEdgeFit",
    "vacuum_edge_fit",
    "surface_drift",
]


def strong_form_rhs(gas: GasModel, r, rho, u, v):
    """Radial derivatives ``(rho_r, u_r, v_r)`` from the local state.

    With ``Delta = c^2 - (u - r)^2``, ``Theta = v^2 - u(r - u)`` and
    ``Sigma = (r - u) Theta - u Delta``::

        rho_r = rho Theta / (r Delta),  u_r = Sigma / (r Delta),  v_r = u v / (r (r - u))
    """
    c2 = np.asarray(sound_speed(gas, rho)) ** 2
    delta = c2 - (u - r) ** 2
    theta = v * v - u * (r - u)
    sigma = (r - u) * theta - u * delta
    return rho * theta / (r * delta), sigma / (r * delta), u * v / (r * (r - u)), delta


def _fd(fn, x, h):
    """Fourth-order central difference of a vector-valued ``fn`` at points ``x`` with steps ``h``."""
    hh = h[:, None]
    # paired differences first, so a constant function differences to exactly zero
    return (8 * (fn(x + h) - fn(x - h)) - (fn(x + 2 * h) - fn(x - 2 * h))) / (12 * hh)

# acceptance bound on the relative strong-form residual
RESIDUAL_TOL = 1e-5


@dataclass
class PieceResidual:
    index: int
    kind: str
    checked: int
    skipped: int
    max_h: float
    max_h2: float
    mean_h2: float
    asymptotic: bool
    xi_at_max: float = math.nan

    @property
    def consistency(self) -> float:
        """Gap between the two step sizes; small when differencing error is negligible."""
        return abs(self.max_h - self.max_h2)


@dataclass
class ResidualReport:
    pieces: list
    breakpoint_mismatches: list
    invariant_drifts: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    skipped_log: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        """Largest residual over pieces that are solutions rather than leading-order tails."""
        vals = [p.max_h2 for p in self.pieces if not p.asymptotic and p.checked]
        return max(vals, default=0.0)

    @property
    def max_mismatch(self) -> float:
        return max(self.breakpoint_mismatches, default=0.0)


def _mesh(lo: float, hi: float, n: int, exclude: float, margin: float) -> np.ndarray:
    """Check points on ``[lo, hi]`` minus end neighbourhoods.

    Each end loses ``max(exclude * span, margin * xi_end)`` (or the log
    equivalent). Pieces spanning more than a decade get a log-spaced set
    merged with a uniform one, so both the small radii and the bulk are
    sampled.
    """
    ea = max(exclude * (hi - lo), margin * lo)
    eb = max(exclude * (hi - lo), margin * hi)
    uniform = np.linspace(lo + ea, hi - eb, n)
    if lo > 0.0 and hi / lo > 10.0:
        a, b = math.log(lo), math.log(hi)
        e = max(exclude * (b - a), margin)
        return np.union1d(np.exp(np.linspace(a + e, b - e, n)), uniform)
    return uniform


# Ends of integrated pieces can be Hoelder singular, q ~ |xi - xi_end|^p. A
# fourth-order stencil of step h has relative error about 0.8 (h/delta)^4
# there, so check points keep delta >= STENCIL_MARGIN * h.
STENCIL_MARGIN = 24.0


def residual_check(
    sol: PiecewiseSolution,
    n: int = 400,
    h_rel: float = 1e-5,
    exclude: float = 1e-4,
    tail_factor: float = 100.0,
) -> ResidualReport:
    """Strong-form residuals of every non-vacuum piece.

    The residual of component ``q`` at ``xi`` is
    ``xi |q_fd - q_rhs| / (xi |q_rhs| + q_ref)`` with ``q_ref`` the far-field
    density or the far-field speed scale: a relative error of the
    logarithmic derivative that stays meaningful where ``q_r`` vanishes.
    Pieces unbounded above are checked on ``[lo, tail_factor * lo]``; the
    centre tails on the last decade below their outer edge.
    """
    gas = sol.gas
    rows, log = [], []
    for k, piece in enumerate(sol.pieces):
        if piece.kind == "vacuum":
            continue
        lo, hi = piece.lo, piece.hi
        if math.isinf(hi):
            hi = tail_factor * max(lo, 1.0)
        if lo == 0.0:
            lo = hi * 1e-1 if piece.asymptotic else 0.0
        xi = _mesh(lo, hi, n, exclude, STENCIL_MARGIN * h_rel)
        xi = xi[xi > 0.0]

        def fn(x, piece=piece):
            return piece.evaluate(x)

        rho, u, v = fn(xi).T
        rr, ru, rv, delta = strong_form_rhs(gas, xi, rho, u, v)
        rhs = np.stack([rr, ru, rv], axis=1)
        bad = (np.abs(delta) < 1e-12 * np.maximum(xi, 1.0) ** 2) | (np.abs(xi - u) < 1e-12 * xi)
        diffs = [_fd(fn, xi, h * xi) for h in (h_rel, 0.5 * h_rel)]
        good = ~bad & np.all(np.isfinite(rhs), axis=1)
        for d in diffs:
            good &= np.all(np.isfinite(d), axis=1)
        log.extend((k, piece.kind, float(x)) for x in xi[~good])
        rows.append((k, piece, xi[good], rhs[good], [d[good] for d in diffs], int((~good).sum())))

    c0 = float(sound_speed(gas, sol.datum.rho0))
    ref = np.array([sol.datum.rho0, *(2 * [max(sol.datum.u0, sol.datum.v0, c0)])])
    out = []
    for k, piece, xi, rhs, diffs, nbad in rows:
        if rhs.size == 0:
            out.append(PieceResidual(k, piece.kind, 0, nbad, 0.0, 0.0, 0.0, piece.asymptotic))
            continue
        x = xi[:, None]
        den = x * np.abs(rhs) + ref
        res = [np.max(x * np.abs(d - rhs) / den, axis=1) for d in diffs]
        out.append(PieceResidual(k, piece.kind, rhs.shape[0], nbad, float(np.max(res[0])),
                                 float(np.max(res[1])), float(np.mean(res[1])), piece.asymptotic,
                                 float(xi[np.argmax(res[1])])))
    report = ResidualReport(out, list(sol.mismatches), skipped_log=log)
    if sol.datum.v0 == 0.0:
        xi = np.concatenate([[0.0], _mesh(1e-3, 1e3, 200, 0.0, 0.0)])
        v = evaluate_many(sol, xi)[:, 2]
        report.invariant_drifts["max_abs_v"] = float(np.nanmax(np.abs(v)))
    for p in sol.pieces:
        if p.kind == "explicit_farfield":
            xi = p.lo * np.linspace(1.0, 50.0, 100)
            rho, u, v = p.evaluate(xi).T
            s = 1.0 / xi
            report.invariant_drifts["explicit_surface"] = float(np.max(np.abs(s * v * v - u * (1.0 - u * s))))
    return report


# ---------------------------------------------------------------------------
# appendix monitors


@dataclass
class MonitorReport:
    """Numeric checks along one intermediate orbit; ``violations`` empty when all hold."""

    epsilon: Optional[float] = None
    max_C_eps: Optional[float] = None
    beta: Optional[float] = None
    I_tilde: Optional[float] = None
    entry_flux_max: Optional[float] = None
    entered_domain: Optional[bool] = None
    s_end_rel_change: Optional[float] = None
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _cylinder(Y):
    """``epsilon`` at the first sample with ``I >= 1/2`` and the largest ``C_eps`` after it."""
    I, J = Y[:, 0], Y[:, 1]
    idx = np.nonzero(I >= 0.5)[0]
    if idx.size == 0:
        return None, None
    k = idx[0]
    eps = J[k] ** 2 / (I[k] * (1.0 - I[k]))
    tail = slice(k + 1, None)
    sel = (I[tail] > 0.5) & (I[tail] < 1.0)
    if not sel.any():
        return eps, -math.inf
    C = J[tail][sel] ** 2 - eps * I[tail][sel] * (1.0 - I[tail][sel])
    return eps, float(np.max(C))


def _beta_tail(Y, I_tilde):
    I, J, K = Y[:, 0], Y[:, 1], Y[:, 2]
    sel = (I > I_tilde) & (I < 1.0) & (K > 0.0)
    if not sel.any():
        return None
    ratio = ((1.0 - I[sel]) * J[sel] ** 2 + I[sel] * (1.0 - I[sel]) ** 2) / (I[sel] * K[sel] ** 2)
    return float(np.min(ratio))


def _entry_flux(gas: GasModel, n_eps=9, n_I=40, n_K=20) -> float:
    """Largest inward-test flux over the boundary of ``(2-g) J^2 <= eps (g I - 1)(1 - I)`` for ``I > 1/2``."""
    g = gas.gamma
    worst = -math.inf
    for eps in np.linspace(0.1, 0.9, n_eps):
        for I in np.linspace(max(0.5, 1.0 / g) + 1e-3, 1.0 - 1e-3, n_I):
            J2 = eps * (g * I - 1.0) * (1.0 - I) / (2.0 - g)
            J = math.sqrt(J2)
            # K up to the surface B = 0, which bounds the region from above
            kmax = math.sqrt((1.0 - I) * (J2 + I * (1.0 - I)) / (2.0 * I))
            for K in np.linspace(0.0, kmax, n_K):
                f = midfield_rhs_tau(gas, (I, J, K, 1.0))[:3]
                normal = np.array([-eps * (g + 1.0 - 2.0 * g * I), 2.0 * (2.0 - g) * J, 0.0])
                worst = max(worst, float(normal @ f))
    return worst


def _entered_domain(gas: GasModel, Y) -> bool:
    g = gas.gamma
    I, J = Y[:, 0], Y[:, 1]
    return bool(np.any((I > 0.5) & ((2.0 - g) * J**2 <= (g * I - 1.0) * (1.0 - I))))


def s_end_convergence(gas: GasModel, traj: odeint.Trajectory) -> float:
    """Relative change of the extrapolated ``s_end`` when the orbit's span is doubled.

    Accepts swirling ``(I, J, K, ln s, ln rho)`` and zero-swirl
    ``(I, K, ln s, ln rho)`` orbits.
    """
    swirl = traj.y.shape[1] == 5
    f = rescaled_rhs(gas) if swirl else zs_rescaled_rhs(gas)
    ls = 3 if swirl else 2

    def s_end(y):
        d = f(0.0, y)
        if y[0] > 0.5 and d[0] > 0.0:
            return math.exp(y[ls] + d[ls] / d[0] * (1.0 - y[0]))
        return math.exp(y[ls])

    span = traj.t_end - traj.t[0]
    vac = traj.y_end[0] > 0.5
    point = (1.0, 0.0, 0.0) if swirl else (1.0, 0.0)
    idx = (0, 1, 2) if swirl else (0, 1)
    evs = [odeint.proximity_to_point("deep", point, 1e-14, indices=idx)] if vac else []
    more = odeint.integrate(f, traj.y_end, t0=traj.t_end, events=evs, max_span=span, max_step=1.0)
    a, b = s_end(traj.y_end), s_end(more.y_end)
    return abs(b - a) / abs(a)


def appendix_monitors(gas: GasModel, traj: odeint.Trajectory, I_tilde: float = 0.95) -> MonitorReport:
    """Cylinder, surface and finiteness checks along an intermediate orbit.

    Zero-swirl orbits get the finiteness check only.
    """
    rep = MonitorReport()
    Y = traj.y
    vac = Y[-1, 0] > 0.5
    if vac and gas.gamma > 1.0 and Y.shape[1] == 5:
        rep.epsilon, rep.max_C_eps = _cylinder(Y)
        if rep.epsilon is not None:
            if not 0.0 < rep.epsilon < 1.0:
                rep.violations.append(f"epsilon={rep.epsilon} outside (0, 1)")
            if rep.max_C_eps > 1e-14:
                rep.violations.append(f"orbit leaves the cylinder: max C_eps={rep.max_C_eps}")
        if gas.gamma >= 1.5:
            rep.I_tilde = I_tilde
            rep.beta = _beta_tail(Y, I_tilde)
            if rep.beta is None or not (2.0 < rep.beta < math.inf):
                rep.violations.append(f"no beta > 2 keeps the tail below the surface: beta={rep.beta}")
        else:
            rep.entry_flux_max = _entry_flux(gas)
            rep.entered_domain = _entered_domain(gas, Y)
            if rep.entry_flux_max >= 0.0:
                rep.violations.append(f"boundary flux not negative: {rep.entry_flux_max}")
    rep.s_end_rel_change = s_end_convergence(gas, traj)
    if rep.s_end_rel_change >= 1e-4:
        rep.violations.append(f"s_end not converged: relative change {rep.s_end_rel_change}")
    return rep


def solution_monitors(sol: PiecewiseSolution) -> list:
    """Appendix monitors on every vacuum-bound orbit piece of an assembled solution."""
    out = []
    for p in sol.pieces:
        traj = p.info.get("trajectory") if p.kind == "ode_arc" else None
        if traj is not None and traj.termination == "event" and traj.y_end[0] > 0.5:
            out.append(appendix_monitors(sol.gas, traj))
    return out


# ---------------------------------------------------------------------------
# eigenvalue cross-checks


def numerical_jacobian(f, y, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``y`` with relative step ``h``."""
    y = np.asarray(y, dtype=float)
    n = y.size
    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * max(1.0, abs(y[j]))
        jac[:, j] = (np.asarray(f(y + e)) - np.asarray(f(y - e))) / (2.0 * e[j])
    return jac


@dataclass
class EigenCheck:
    where: str
    expected: np.ndarray
    computed: np.ndarray
    error: float

    @property
    def ok(self) -> bool:
        return self.error <= 1e-6


def _compare(where, expected, jac) -> EigenCheck:
    expected = np.sort(np.asarray(expected, dtype=float))
    ev = np.linalg.eigvals(jac)
    computed = np.sort(ev.real)
    scale = max(np.max(np.abs(expected)), 1e-300)
    # zero eigenvalues are compared against the spectral scale
    err = float(np.max(np.abs(computed - expected) / np.maximum(np.abs(expected), scale * (expected == 0))))
    err = max(err, float(np.max(np.abs(ev.imag))) / scale)
    return EigenCheck(where, expected, computed, err)


def jacobian_crosscheck(gas: GasModel, alphas=None) -> list:
    """Closed-form eigenvalues against central-difference Jacobians."""
    alphas = np.round(np.arange(1, 10) / 10.0, 10) if alphas is None else alphas
    checks = []

    def poly(y):
        return midfield_rhs_tau(gas, (y[0], y[1], y[2], 1.0))[:3]

    ep = eigen_at_p66(gas)
    P = hyperbolic_point(gas)
    checks.append(_compare("hyperbolic_point", [ep.lam_plus, ep.lam_minus, ep.lam2], numerical_jacobian(poly, P)))
    for a in alphas:
        ed = eigen_at_edge(gas, a)
        checks.append(_compare(f"edge alpha={a:g}", [0.0, ed.lambda2, ed.lambda3],
                               numerical_jacobian(poly, e_point(a))))
    checks.append(_compare("inner origin", [-2.0, 0.0, 2.0],
                           numerical_jacobian(lambda y: inner_rhs_degenerate(gas, y), np.zeros(3))))
    return checks


def surface_drift(gas: GasModel, I0: float = 0.3, K0: float = 0.5, span: float = 50.0) -> float:
    """Largest ``|H|`` along an orbit seeded on ``H = J^2 - I(1 - I) = 0``."""
    f = rescaled_rhs(gas)
    J0 = math.sqrt(I0 * (1.0 - I0))
    traj = odeint.integrate(f, [I0, J0, K0, 0.0, 0.0], max_span=span, max_step=1.0)
    _, Y = traj.resample(0.01)
    return float(np.max(np.abs([surface_values(gas, *y[:3]).H for y in Y])))


# ---------------------------------------------------------------------------
# vacuum edge


@dataclass
class VacuumEdgeFit:
    r_edge: float
    slope_u_minus_r: float
    slope_c: float
    swirl_exponent: float
    pseudo_mach: float
    expected_slope_u_minus_r: float
    expected_slope_c: float
    expected_swirl_exponent: float
    expected_pseudo_mach: float


def vacuum_edge_fit(sol: PiecewiseSolution, lo: float = 1e-6, hi: float = 1e-4, n: int = 60) -> VacuumEdgeFit:
    """Fit the one-sided behaviour at the vacuum edge from samples ``r = r_edge (1 + x)``."""
    vac = [p for p in sol.pieces if p.kind == "vacuum"]
    if not vac:
        raise ValueError("solution has no vacuum piece")
    gas = sol.gas
    r_edge = vac[0].info["r_edge"]
    x = np.logspace(math.log10(lo), math.log10(hi), n)
    r = r_edge * (1.0 + x)
    rho, u, v = evaluate_many(sol, r).T
    c = np.asarray(sound_speed(gas, rho))
    dr = r - r_edge
    A = np.stack([dr, dr * dr], axis=1)
    su = float(np.linalg.lstsq(A, u - r, rcond=None)[0][0])
    sc = float(np.linalg.lstsq(A, c, rcond=None)[0][0])
    ms = np.hypot(u - r, v) / c
    pm = float(np.polyfit(dr, ms, 1)[1])
    beta = math.nan
    if np.all(v > 0.0):
        beta = float(np.polyfit(np.log(dr), np.log(v), 1)[0])
    eu, ec, em = vacuum_edge_slopes(gas)
    g = gas.gamma
    return VacuumEdgeFit(r_edge, su, sc, beta, pm, eu, ec, (g + 1.0) / (2.0 * (g - 1.0)), em)
