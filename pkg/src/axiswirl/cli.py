"""Command-line front end.

Commands: ``solve``, ``classify``, ``critical``, ``field``, ``phase`` and
``verify``. Gas and datum come from flags, optionally seeded by a JSON
config file whose keys match the long flag names; flags win. Exit codes:
0 on success, 1 when a computation fails, 2 when the input is invalid.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import __version__
from .errors import AxiswirlError, DomainError, ValidationError
from .gas import FarFieldDatum, GasModel, sound_speed
from .pipeline import (
    PiecewiseSolution,
    critical_mach,
    predict_case,
    profile_table,
    sample_field,
    solve,
    solve_transitional,
)

SCHEMA_VERSION = 1
PROFILE_COLUMNS = ("xi", "rho", "u", "v", "c", "mach", "pseudo_mach", "piece_index")
CRITICAL_COLUMNS = ("gamma", "I_h", "M_h", "lower_bound", "upper_bound_or_NA")

EXIT_OK, EXIT_COMPUTE, EXIT_VALIDATION = 0, 1, 2


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def fmt(x) -> str:
    """17 significant digits; empty for ``nan``; ``inf`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def csv_text(header, rows, int_cols=()) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = [str(int(v)) if i in int_cols else fmt(v) for i, v in enumerate(row)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(path: Optional[Path], header, rows, int_cols=()) -> None:
    text = csv_text(header, rows, int_cols)
    if path is None:
        click.echo(text, nl=False)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_COMPUTE, f"cannot write {path}: {exc.strerror}") from exc


def write_pgm(path: Path, rho: np.ndarray) -> None:
    """Binary greyscale (P5), linear ``[0, rho_max] -> [0, 255]``, top row at largest ``y``."""
    top = float(np.nanmax(rho)) if np.any(rho > 0) else 1.0
    img = np.clip(np.rint(255.0 * np.nan_to_num(rho) / top), 0, 255).astype(np.uint8)[::-1]
    head = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    try:
        Path(path).write_bytes(head + img.tobytes())
    except OSError as exc:
        raise _Fail(EXIT_COMPUTE, f"cannot write {path}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# configuration


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _Fail(EXIT_VALIDATION, f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise _Fail(EXIT_VALIDATION, f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise _Fail(EXIT_VALIDATION, f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _resolve(ctx_kwargs: dict, defaults: dict) -> dict:
    """Flags over config file over built-in defaults."""
    cfg = _load_config(ctx_kwargs.pop("config", None))
    out = dict(defaults)
    out.update({k: v for k, v in cfg.items() if k in defaults})
    out.update({k: v for k, v in ctx_kwargs.items() if v is not None})
    return out


GAS_DEFAULTS = {"gamma": None, "a2": 1.0, "rho0": 1.0, "u0": 0.0, "v0": 0.0}


def _gas_and_datum(cfg: dict):
    if cfg["gamma"] is None:
        raise _Fail(EXIT_VALIDATION, "gamma is required (flag --gamma or config key)")
    try:
        gas = GasModel(float(cfg["gamma"]), float(cfg["a2"]))
        datum, sign = FarFieldDatum.normalized(float(cfg["rho0"]), float(cfg["u0"]), float(cfg["v0"]))
    except (TypeError, ValueError) as exc:
        raise _Fail(EXIT_VALIDATION, str(exc)) from exc
    return gas, datum, sign


def _solve(gas, datum, sign) -> PiecewiseSolution:
    sol = solve(gas, datum)
    sol.swirl_sign = sign
    return sol


def gas_options(fn):
    opts = [
        click.option("--config", type=click.Path(dir_okay=False), default=None,
                     help="JSON file with default values for any long flag."),
        click.option("--v0", type=float, default=None, help="Far-field swirl velocity."),
        click.option("--u0", type=float, default=None, help="Far-field radial velocity (>= 0)."),
        click.option("--rho0", type=float, default=None, help="Far-field density."),
        click.option("--a2", type=float, default=None, help="Pressure constant in p = a2 rho^gamma."),
        click.option("--gamma", type=float, default=None, help="Adiabatic exponent in [1, 2)."),
    ]
    for o in opts:
        fn = o(fn)
    return fn


def _guarded(fn):
    """Map library errors onto exit codes and stderr messages."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _Fail as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.code)
        except (ValidationError, DomainError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except AxiswirlError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_COMPUTE)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# metadata


def profile_grid(sol: PiecewiseSolution, n: int, xi_max: Optional[float]) -> np.ndarray:
    """Uniform grid on ``[0, xi_max]`` merged with the finite breakpoints."""
    finite = [b for b in sol.breakpoints if math.isfinite(b)]
    if xi_max is None:
        xi_max = 2.0 * max([b for b in finite if b < 1e3] or [1.0])
    grid = np.linspace(0.0, xi_max, n)
    return np.unique(np.concatenate([grid, [b for b in finite if b <= xi_max]]))


def metadata(sol: PiecewiseSolution, critical=None) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "gamma": sol.gas.gamma,
        "a2": sol.gas.a2,
        "rho0": sol.datum.rho0,
        "u0": sol.datum.u0,
        "v0": sol.swirl_sign * sol.datum.v0,
        "case": sol.case.value,
        "breakpoints": list(sol.breakpoints),
        "pieces": [p.kind for p in sol.pieces],
        "mismatches": list(sol.mismatches),
        "diagnostics": sol.diagnostics,
    }
    if critical is not None:
        meta["critical"] = {"I_h": critical.I_h, "M_h": critical.M_h}
    return jsonable(meta)


def _dump_json(path: Optional[Path], data: dict) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if path is None:
        click.echo(text, nl=False)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_COMPUTE, f"cannot write {path}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# commands


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="axiswirl")
def main():
    """Self-similar swirling solutions of the 2-D compressible Euler equations."""


@main.command("solve")
@gas_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Profile CSV (default stdout).")
@click.option("--meta", type=click.Path(dir_okay=False), default=None,
              help="Metadata JSON (default: next to --out with .json suffix).")
@click.option("--n", "n", type=int, default=None, help="Uniform profile points (default 401).")
@click.option("--xi-max", type=float, default=None, help="Largest xi in the profile.")
@click.option("--critical/--no-critical", default=False, help="Add the critical Mach data to the metadata.")
@_guarded
def cmd_solve(**kw):
    """Solve one datum; write the radial profile and its metadata."""
    cfg = _resolve(kw, {**GAS_DEFAULTS, "out": None, "meta": None, "n": 401, "xi_max": None, "critical": False})
    gas, datum, sign = _gas_and_datum(cfg)
    if int(cfg["n"]) < 2:
        raise _Fail(EXIT_VALIDATION, "--n must be at least 2")
    sol = _solve(gas, datum, sign)
    crit = critical_mach(gas) if cfg["critical"] else None
    xi = profile_grid(sol, int(cfg["n"]), cfg["xi_max"])
    write_csv(cfg["out"], PROFILE_COLUMNS, profile_table(sol, xi), int_cols=(7,))
    meta_path = cfg["meta"]
    if meta_path is None and cfg["out"] is not None:
        meta_path = str(Path(cfg["out"]).with_suffix(".json"))
    meta = metadata(sol, crit)
    if meta_path is None:
        click.echo(json.dumps(meta, sort_keys=True), err=True)
    else:
        _dump_json(meta_path, meta)


@main.command("classify")
@gas_options
@click.option("--predict/--no-predict", default=False,
              help="For u0 = 0 classify from the far-field endpoint alone, without assembling.")
@_guarded
def cmd_classify(**kw):
    """Print the case label of a datum."""
    cfg = _resolve(kw, {**GAS_DEFAULTS, "predict": False})
    gas, datum, sign = _gas_and_datum(cfg)
    if cfg["predict"]:
        click.echo(predict_case(gas, datum).value)
        return
    sol = _solve(gas, datum, sign)
    click.echo(sol.case.value)


@main.command("critical")
@click.option("--gamma", "gammas", type=float, multiple=True, required=True,
              help="Adiabatic exponent; repeat for a table.")
@click.option("--ratio", type=float, default=None, help="Ray u0/v0; omit for the u0 = 0 family.")
@click.option("--width", type=float, default=1e-4, show_default=True, help="Relative bracket width.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default stdout).")
@_guarded
def cmd_critical(gammas, ratio, width, out):
    """Threshold Mach numbers between cavity and vacuum outcomes."""
    rows = []
    for g in gammas:
        gas = GasModel(g)
        crit = critical_mach(gas, ratio=ratio, width=width)
        lower = math.sqrt(g) / (g - 1.0) if g > 1.0 else math.inf
        upper = math.sqrt(2.0 * (g - 1.0)) / (2.0 * g - 3.0) if g > 1.5 else None
        I_h = crit.I_h if crit.I_h is not None else math.nan
        rows.append((g, I_h, crit.M_h, lower, upper))
    lines = [",".join(CRITICAL_COLUMNS)]
    for g, I_h, M_h, lower, upper in rows:
        lines.append(",".join([fmt(g), fmt(I_h), fmt(M_h), fmt(lower), "NA" if upper is None else fmt(upper)]))
    text = "\n".join(lines) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise _Fail(EXIT_COMPUTE, f"cannot write {out}: {exc.strerror}") from exc


@main.command("field")
@gas_options
@click.option("--t", "t", type=float, default=None, help="Time (default 1).")
@click.option("--extent", type=float, default=None, help="Half-width of the square (default 2 r_max).")
@click.option("--n", "n", type=int, default=None, help="Nodes per side (default 256).")
@click.option("--ppm", type=click.Path(dir_okay=False), default=None, help="Density heatmap (binary P5).")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Velocity CSV with columns x, y, rho, ux, uy.")
@click.option("--workers", type=int, default=None, help="Threads over row blocks (default 1).")
@_guarded
def cmd_field(**kw):
    """Sample the planar field on a square grid at time t."""
    cfg = _resolve(kw, {**GAS_DEFAULTS, "t": 1.0, "extent": None, "n": 256, "ppm": None,
                        "csv_path": None, "workers": 1})
    gas, datum, sign = _gas_and_datum(cfg)
    if cfg["ppm"] is None and cfg["csv_path"] is None:
        raise _Fail(EXIT_VALIDATION, "give --ppm and/or --csv")
    sol = _solve(gas, datum, sign)
    t = float(cfg["t"])
    extent = cfg["extent"]
    if extent is None:
        finite = [b for b in sol.breakpoints if b < 1e3]
        extent = 2.0 * t * max(finite or [1.0])
    X, Y, rho, ux, uy = sample_field(sol, t, float(extent), int(cfg["n"]), int(cfg["workers"]))
    if cfg["ppm"] is not None:
        write_pgm(cfg["ppm"], rho)
    if cfg["csv_path"] is not None:
        rows = np.column_stack([X.ravel(), Y.ravel(), rho.ravel(), ux.ravel(), uy.ravel()])
        write_csv(cfg["csv_path"], ("x", "y", "rho", "ux", "uy"), rows)


@main.command("phase")
@gas_options
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (default stdout).")
@click.option("--transitional/--no-transitional", default=False,
              help="Sample the critical orbit instead of the given datum (u0/v0 from the datum).")
@_guarded
def cmd_phase(**kw):
    """Orbit nodes of every integrated piece in their own phase coordinates.

    Intermediate arcs give ``(I, J, K, s)``; inner arcs give
    ``(X, V2, R2)`` in the first three state columns and ``nan`` in the
    fourth.
    """
    cfg = _resolve(kw, {**GAS_DEFAULTS, "out": None, "transitional": False})
    gas, datum, sign = _gas_and_datum(cfg)
    if cfg["transitional"]:
        ratio = datum.u0 / datum.v0 if datum.u0 > 0.0 and datum.v0 > 0.0 else None
        sol = solve_transitional(gas, datum.rho0, ratio)
    else:
        sol = _solve(gas, datum, sign)
    rows = []
    for k, p in enumerate(sol.pieces):
        interp = p.info.get("interpolant")
        if interp is None:
            continue
        Y = interp.Y(interp.tau)
        if p.kind == "ode_arc":
            q = np.column_stack([Y[:, 0], Y[:, 1], Y[:, 2], np.exp(Y[:, 3])])
        else:
            q = np.column_stack([Y[:, 0], Y[:, 1], np.exp(Y[:, 2]), np.full(len(Y), np.nan)])
        for tau, row in zip(interp.tau, q):
            rows.append((k, tau, *row))
    write_csv(cfg["out"], ("piece_index", "tau", "q1", "q2", "q3", "q4"), rows, int_cols=(0,))


@main.command("verify")
@gas_options
@click.option("--n", "n", type=int, default=400, show_default=True, help="Residual mesh points per piece.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="JSON report (default stdout).")
@_guarded
def cmd_verify(**kw):
    """Residual and continuity report; exit 1 when a tolerance fails."""
    from .verify import RESIDUAL_TOL, residual_check, solution_monitors

    n = kw.pop("n")
    out = kw.pop("out")
    cfg = _resolve(kw, dict(GAS_DEFAULTS))
    gas, datum, sign = _gas_and_datum(cfg)
    sol = _solve(gas, datum, sign)
    rep = residual_check(sol, n=n)
    monitors = solution_monitors(sol)
    violations = list(rep.violations) + [v for m in monitors for v in m.violations]
    ok = rep.max_residual < RESIDUAL_TOL and rep.max_mismatch < 1e-6 and not violations
    data = jsonable({
        "case": sol.case.value,
        "ok": ok,
        "max_residual": rep.max_residual,
        "max_mismatch": rep.max_mismatch,
        "pieces": [{"kind": p.kind, "checked": p.checked, "max_residual": p.max_h2,
                    "asymptotic": p.asymptotic, "consistency": p.consistency} for p in rep.pieces],
        "invariant_drifts": rep.invariant_drifts,
        "monitors": [{k: v for k, v in vars(m).items() if k != "violations"} for m in monitors],
        "violations": violations,
    })
    _dump_json(out, data)
    if not ok:
        sys.exit(EXIT_COMPUTE)


if __name__ == "__main__":
    main()
