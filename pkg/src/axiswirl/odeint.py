"""Adaptive explicit integration with dense output and located events.

Steps are taken with scipy's DOP853 (8th order, embedded 5/3 error
estimators). Events are scalar functions ``g(t, y)`` whose sign change
inside an accepted step is pinned down by Brent's method on the step's
dense interpolant, so classification does not depend on where the
stepper happened to land.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

__all__ = [
    "Event",
    "Trajectory",
    "integrate",
    "surface_crossing",
    "proximity_to_point",
    "proximity_to_curve",
    "stationary_approach",
    "component_bound",
    "reference_fixed_step",
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
    "DEFAULT_MAX_SPAN",
]

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-16
DEFAULT_MAX_SPAN = 1e4

Rhs = Callable[[float, np.ndarray], np.ndarray]


@dataclass
class Event:
    """Scalar event ``g(t, y)``; fires when ``g`` changes sign.

    ``direction`` follows the scipy convention: ``-1`` fires only on a
    positive-to-negative crossing, ``+1`` only the reverse, ``0`` both.
    An event whose ``g`` starts on the firing side is armed only once the
    trajectory has moved to the other side, so a state that starts inside
    a proximity ball does not terminate immediately.
    """

    name: str
    g: Callable[[float, np.ndarray], float]
    direction: int = -1
    terminal: bool = True
    xtol: float = 1e-12


def surface_crossing(name, fn, direction=0, terminal=True) -> Event:
    """Sign change of ``fn(y)``."""
    return Event(name, lambda t, y: fn(y), direction, terminal)


def proximity_to_point(name, point, radius, indices=None, terminal=True) -> Event:
    """Euclidean distance to ``point`` drops below ``radius``."""
    p = np.asarray(point, dtype=float)
    idx = slice(None) if indices is None else list(indices)

    def g(t, y):
        return float(np.linalg.norm(y[idx] - p)) - radius

    return Event(name, g, -1, terminal)


def proximity_to_curve(name, distance, radius, terminal=True) -> Event:
    """``distance(y)`` to a curve drops below ``radius``."""
    return Event(name, lambda t, y: distance(y) - radius, -1, terminal)


def stationary_approach(
    name, rhs: Rhs, distance, eps_rhs=1e-10, eps_set=1e-6, terminal=True
) -> Event:
    """Both ``|rhs| < eps_rhs`` and ``distance(y) < eps_set``.

    The event function is the larger of the two scaled excesses, which is
    negative exactly when both conditions hold.
    """

    def g(t, y):
        f = float(np.linalg.norm(rhs(t, y)))
        return max(f / eps_rhs - 1.0, distance(y) / eps_set - 1.0)

    return Event(name, g, -1, terminal)


def component_bound(name, index, bound, terminal=True) -> Event:
    """``|y[index]|`` exceeds ``bound``."""
    return Event(name, lambda t, y: bound - abs(y[index]), -1, terminal)


@dataclass
class Trajectory:
    """Accepted-step samples plus a piecewise dense interpolant.

    ``termination`` is one of ``"event"``, ``"max_span"``,
    ``"already_stationary"``, ``"step_underflow"``, ``"nonfinite"`` or
    ``"max_steps"``. For ``"event"`` the name of the event is in
    ``event``; the final sample is the located event point.
    """

    t: np.ndarray
    y: np.ndarray
    termination: str
    event: Optional[str] = None
    message: str = ""
    event_log: list = field(default_factory=list)
    _pieces: list = field(default_factory=list, repr=False)

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.y[-1]

    @property
    def ok(self) -> bool:
        return self.termination in ("event", "max_span", "already_stationary")

    def resample(self, max_delta: float, key=None, max_sub: int = 400, max_dt=None):
        """Nodes plus interior dense points so ``key(y)`` moves by about ``max_delta`` per interval.

        Each step is split uniformly in the parameter according to the jump
        of ``key`` across it. ``key`` maps a state to a vector of monitored quantities; it
        defaults to the state itself. ``max_dt(y)``, if given, also caps the
        parameter spacing near state ``y``.
        """
        key = key or (lambda y: y)
        ts, ys = [self.t[0]], [self.y[0]]
        for i, piece in enumerate(self._pieces):
            ta, tb = self.t[i], self.t[i + 1]
            jump = np.max(np.abs(np.asarray(key(self.y[i + 1])) - np.asarray(key(self.y[i]))))
            n = max(1.0, np.ceil(jump / max_delta))
            if max_dt is not None:
                n = max(n, np.ceil(abs(tb - ta) / min(max_dt(self.y[i]), max_dt(self.y[i + 1]))))
            n = int(min(max_sub, n))
            for k in range(1, n):
                tk = ta + (tb - ta) * k / n
                ts.append(tk)
                ys.append(piece(tk))
            ts.append(tb)
            ys.append(self.y[i + 1])
        return np.array(ts), np.array(ys)

    def __call__(self, t):
        """Dense evaluation; accepts a scalar or an array of parameter values."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((ts.size, self.y.shape[1]))
        if not self._pieces:
            out[:] = self.y[0]
            return out[0] if scalar else out
        forward = self.t[-1] >= self.t[0]
        for k, tk in enumerate(ts):
            # node j bounds piece j-1 / j
            j = np.searchsorted(self.t, tk) if forward else np.searchsorted(-self.t, -tk)
            j = min(max(j - 1, 0), len(self._pieces) - 1)
            out[k] = self._pieces[j](tk)
        return out[0] if scalar else out


def _locate(ev: Event, dense, ta: float, tb: float, ga: float) -> float:
    def g(t):
        return ev.g(t, dense(t))

    gb = g(tb)
    if ga == 0.0:
        return ta
    if gb == 0.0 or np.sign(ga) == np.sign(gb):
        return tb
    return brentq(g, ta, tb, xtol=ev.xtol * max(1.0, abs(tb)), rtol=4 * np.finfo(float).eps)


def _fires(ev: Event, g0: float, g1: float) -> bool:
    if ev.direction < 0:
        return g0 > 0.0 and g1 <= 0.0
    if ev.direction > 0:
        return g0 < 0.0 and g1 >= 0.0
    return (g0 > 0.0 and g1 <= 0.0) or (g0 < 0.0 and g1 >= 0.0)


def integrate(
    rhs: Rhs,
    y0: Sequence[float],
    *,
    t0: float = 0.0,
    direction: int = 1,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    events: Sequence[Event] = (),
    max_span: float = DEFAULT_MAX_SPAN,
    max_steps: int = 200_000,
    stationary_rhs: Optional[float] = None,
    first_step: Optional[float] = None,
    max_step: float = np.inf,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` for at most ``max_span``.

    Parameters
    ----------
    direction
        ``+1`` forward, ``-1`` backward in the parameter.
    stationary_rhs
        If given and ``|rhs(t0, y0)|`` is below it, return a length-zero
        trajectory tagged ``"already_stationary"``.
    """
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    y0 = np.asarray(y0, dtype=float)
    f0 = np.asarray(rhs(t0, y0), dtype=float)
    if not np.all(np.isfinite(f0)) or not np.all(np.isfinite(y0)):
        return Trajectory(np.array([t0]), y0[None, :].copy(), "nonfinite",
                          message="rhs not finite at initial state")
    if stationary_rhs is not None and np.linalg.norm(f0) < stationary_rhs:
        return Trajectory(np.array([t0]), y0[None, :].copy(), "already_stationary")

    t_bound = t0 + direction * max_span
    kw = {} if first_step is None else {"first_step": first_step}
    solver = DOP853(rhs, t0, y0, t_bound, rtol=rtol, atol=atol, max_step=max_step, **kw)

    ts = [t0]
    ys = [y0.copy()]
    pieces = []
    g_prev = [ev.g(t0, y0) for ev in events]
    # an event is armed once g sits on the non-firing side
    armed = [
        (gp > 0.0 if ev.direction < 0 else gp < 0.0 if ev.direction > 0 else gp != 0.0)
        for ev, gp in zip(events, g_prev)
    ]
    log = []
    termination, event_name, message = "max_span", None, ""

    for _ in range(max_steps):
        status = solver.step()
        if solver.status == "failed" or status is not None:
            termination = "step_underflow"
            message = str(status)
            break
        t_new, y_new = solver.t, solver.y
        if not np.all(np.isfinite(y_new)):
            termination = "nonfinite"
            message = "non-finite state after step"
            break
        dense = solver.dense_output()
        t_old = ts[-1]
        hit_t, hit_idx = None, None
        g_new = []
        for i, ev in enumerate(events):
            gn = ev.g(t_new, y_new)
            g_new.append(gn)
            if not armed[i]:
                if (ev.direction < 0 and gn > 0.0) or (ev.direction > 0 and gn < 0.0) or (
                    ev.direction == 0 and gn != 0.0
                ):
                    armed[i] = True
                continue
            if _fires(ev, g_prev[i], gn):
                te = _locate(ev, dense, t_old, t_new, g_prev[i])
                log.append((ev.name, te))
                if ev.terminal and (hit_t is None or direction * (te - hit_t) < 0):
                    hit_t, hit_idx = te, i
        g_prev = g_new
        if hit_t is not None:
            pieces.append(dense)
            ts.append(hit_t)
            ys.append(dense(hit_t))
            termination, event_name = "event", events[hit_idx].name
            break
        pieces.append(dense)
        ts.append(t_new)
        ys.append(y_new.copy())
        if solver.status == "finished":
            termination = "max_span"
            break
    else:
        termination = "max_steps"

    traj = Trajectory(np.array(ts), np.array(ys), termination, event_name, message, log)
    traj._pieces = pieces
    return traj


def reference_fixed_step(rhs: Rhs, y0, t0: float, t1: float, n: int) -> np.ndarray:
    """Classical RK4 on a uniform grid; used as an independent check."""
    y = np.asarray(y0, dtype=float).copy()
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y
