"""Acceptance suite: one PASS/FAIL line per criterion."""

import math

import numpy as np
import pytest

from axiswirl import midfield, odeint, zeroswirl
from axiswirl.cli import PROFILE_COLUMNS, csv_text, profile_grid
from axiswirl.farfield import endpoint_alpha, explicit_mid, explicit_solution, farfield_rhs, r_star
from axiswirl.gas import FarFieldDatum, GasModel, mach_numbers, sound_speed
from axiswirl.innerfield import cm_flow_coefficient
from axiswirl.pipeline import CaseLabel, evaluate, evaluate_many, predict_case, profile_table, solve
from axiswirl.verify import (
    RESIDUAL_TOL,
    jacobian_crosscheck,
    residual_check,
    solution_monitors,
    surface_drift,
    vacuum_edge_fit,
)

from conftest import MATRIX_CASES, MATRIX_GAMMAS, solve_matrix

VACUUM_LABELS = {"Id", "II_vacuum", "zeroswirl_vacuum"}
# (I, K) seeds on H = 0 whose orbits stay off the part of the edge (alpha > 1/2)
# where the surface is transversally unstable; there the drift measures that
# instability, not integration error
H_SEEDS = ((0.3, 0.5), (0.1, 0.9), (0.2, 0.7), (0.45, 0.6))


@pytest.fixture()
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}")
        assert ok, detail

    return emit


def test_01_r_star(report):
    rs = r_star(GasModel(1.4), FarFieldDatum(1.0, 0.0, 1.0))
    report(1, abs(rs - 1.7535) <= 5e-4, f"r* = {rs:.6f} (target 1.7535 +- 5e-4)")


def test_02_Ih_table(report):
    targets = {1.1: 0.93, 1.4: 0.77, 1.7: 0.63}
    got = {g: midfield.find_Ih(GasModel(g)).I_h for g in targets}
    ok = all(abs(got[g] - t) <= 0.02 for g, t in targets.items())
    report(2, ok, ", ".join(f"I_h({g}) = {got[g]:.4f}" for g in targets) + " (targets 0.93, 0.77, 0.63 +- 0.02)")


def test_03_Mh_bounds(report):
    bad, rows = [], []
    for g in np.round(np.arange(1.1, 1.95, 0.1), 10):
        mh = midfield.find_Ih(GasModel(g)).M_h
        lower = math.sqrt(g) / (g - 1.0)
        upper = math.sqrt(2.0 * (g - 1.0)) / (2.0 * g - 3.0) if g > 1.5 else math.inf
        rows.append(f"{g:.1f}:{mh:.4g}")
        if not lower < mh < upper:
            bad.append(g)
    report(3, not bad, f"M_h inside bounds for gamma 1.1..1.9 [{' '.join(rows)}]; violations {bad}")


def test_04_eigenvalues(report):
    worst, failing = 0.0, []
    for g in MATRIX_GAMMAS:
        for c in jacobian_crosscheck(GasModel(g)):
            worst = max(worst, c.error)
            if not c.ok:
                failing.append((g, c.where))
    report(4, not failing, f"max relative eigenvalue error {worst:.2e} at the hyperbolic point, 9 edge samples and the inner origin; failing {failing}")


def test_05_vacuum_edge(report):
    gas = GasModel(1.4)
    sol = solve(gas, FarFieldDatum(1.0, 0.0, 5.0 * sound_speed(gas, 1.0)))
    fit = vacuum_edge_fit(sol)
    checks = [
        ("u-r slope", fit.slope_u_minus_r, -1.0 / 3.0, 0.02),
        ("c slope", fit.slope_c, 0.21082, 0.02),
        ("swirl exponent", fit.swirl_exponent, 3.0, 0.05),
        ("edge pseudo Mach", fit.pseudo_mach, 1.58114, 0.01),
    ]
    ok = all(abs(v / t - 1.0) <= tol for _, v, t, tol in checks)
    report(5, ok, ", ".join(f"{n} {v:.5f} (target {t:.5f} +- {tol:.0%})" for n, v, t, tol in checks))


@pytest.fixture(scope="module")
def matrix_reports(matrix):
    out = {}
    for key, sol in matrix.items():
        out[key] = (residual_check(sol, n=200), residual_check(sol, n=400))
    return out


def test_06_residuals(report, matrix, matrix_reports):
    labels_ok = all(matrix[(g, c)].case.value == c for g in MATRIX_GAMMAS for c in MATRIX_CASES)
    res = max(max(a.max_residual, b.max_residual) for a, b in matrix_reports.values())
    mis = max(b.max_mismatch for _, b in matrix_reports.values())
    gap = max(p.consistency for _, b in matrix_reports.values() for p in b.pieces if not p.asymptotic)
    ok = labels_ok and res < RESIDUAL_TOL and mis < 1e-6
    report(6, ok, f"{len(matrix)} solutions, labels as expected {labels_ok}, max residual {res:.2e} "
                  f"at meshes 200/400 (tol 1e-5, h vs h/2 gap {gap:.1e}), max continuity {mis:.2e} (tol 1e-6)")


def test_07_invariant_surfaces(report, matrix):
    drift = max(surface_drift(GasModel(g), I0=i0, K0=k0)
                for g in MATRIX_GAMMAS for i0, k0 in H_SEEDS)
    # swirl-free data inside the swirling system
    gas = GasModel(1.4)
    f = midfield.rescaled_rhs(gas)
    y0 = midfield.farfield_mid_start(gas, FarFieldDatum(1.0, 0.8, 0.0))
    tr = odeint.integrate(f, y0, max_span=200.0, max_step=1.0)
    j_max = float(np.max(np.abs(tr.y[:, 1])))
    v_max = max(evaluate_v(matrix[(g, c)]) for g in MATRIX_GAMMAS for c in ("zeroswirl_core", "zeroswirl_vacuum"))
    ok = drift < 1e-8 and j_max < 1e-12 and v_max < 1e-12
    report(7, ok, f"max |H| on {len(H_SEEDS) * len(MATRIX_GAMMAS)} H=0 orbits {drift:.1e} (tol 1e-8); max |J| on a v0=0 orbit {j_max:.1e}, "
                  f"max |v| in zero-swirl solutions {v_max:.1e} (tol 1e-12)")


def evaluate_v(sol):
    v = evaluate_many(sol, np.geomspace(1e-6, 1e3, 500))[:, 2]
    return float(np.nanmax(np.abs(v)))


def test_08_explicit_identity(report):
    gas = GasModel(1.4, a2=1.0 / 1.4)  # c0 = 1
    worst_res, worst_m, worst_ms = 0.0, 0.0, 0.0
    for v0 in (0.3, 1.0, 2.5):
        d = FarFieldDatum(1.0, 0.0, v0)
        rs = r_star(gas, d)
        for r in rs * np.geomspace(1.01, 100.0, 100):
            st = explicit_solution(gas, d, r)
            s = 1.0 / r
            q = v0 * s
            exact = np.array([0.0, v0 * v0, -v0 * v0 * q / math.sqrt(1.0 - q * q)])
            rhs = farfield_rhs(gas, (st.rho, st.u, st.v), s)
            worst_res = max(worst_res, float(np.max(np.abs(rhs - exact))) / max(1.0, np.max(np.abs(exact))))
            worst_m = max(worst_m, abs(mach_numbers(gas, st).mach - v0))
        ms = mach_numbers(gas, explicit_solution(gas, d, rs)).pseudo_mach
        worst_ms = max(worst_ms, abs(ms - math.sqrt(math.sqrt(v0 * v0 + 0.25) + 0.5)))
    ok = worst_res < 1e-12 and worst_m < 1e-12 and worst_ms < 1e-12
    report(8, ok, f"far-field ODE residual of the closed form {worst_res:.1e} at 100 radii, |M - v0/c0| {worst_m:.1e}, "
                  f"M_s(r*) vs (sqrt(M0^2+1/4)+1/2)^(1/2) {worst_ms:.1e} (the printed +1/4 contradicts "
                  f"M_s = sqrt(r^2-v0^2)/c0; see ledger)")


def test_09_endpoint_identity(report):
    gas = GasModel(1.4, a2=1.0 / 1.4)
    worst = 0.0
    for m0 in (0.2, 0.845, 1.0, 3.0, 10.0):
        d = FarFieldDatum(1.0, 0.0, m0)
        rs = r_star(gas, d)
        worst = max(worst, abs(endpoint_alpha(gas, d) - m0 * m0 / rs**2), abs(explicit_mid(gas, d, 1.0 / rs)[0] - m0 * m0 / rs**2))
    half = endpoint_alpha(gas, FarFieldDatum(1.0, 0.0, math.sqrt(2.0)))
    ok = worst < 1e-12 and abs(half - 0.5) < 1e-12
    report(9, ok, f"I* = M0^2/r*^2 to {worst:.1e}; M0 = sqrt2 gives I* = {half!r}")


def test_10_inner_limits(report, matrix):
    ratios, mono, flows = [], True, []
    for (g, c), sol in matrix.items():
        d = sol.diagnostics.get("inner")
        if not d or d.get("small_alpha"):
            continue
        ratios.append(d["v2_over_x_center"])
        mono &= d["mach_monotone_center"] and d["pseudo_mach_monotone_center"]
    for g in MATRIX_GAMMAS:
        flows.append((g, cm_flow_coefficient(GasModel(g))))
    dev = max(abs(r / 2.0 - 1.0) for r in ratios)
    fdev = max(abs(a / (2.0 - g) - 1.0) for g, a in flows)
    ok = ratios and dev <= 0.02 and fdev <= 0.05 and mono
    report(10, ok, f"V2/X at the centre within {dev:.2%} of 2 over {len(ratios)} inner orbits (tol 2%); "
                   f"centre-manifold coefficient within {fdev:.2%} of 2-gamma (tol 5%); M, M_s monotone {mono}")


def test_11_s_end_finite(report, matrix):
    changes, violations = [], []
    for (g, c), sol in matrix.items():
        if c not in VACUUM_LABELS:
            continue
        for m in solution_monitors(sol):
            changes.append(m.s_end_rel_change)
            violations += [(g, c, v) for v in m.violations]
    worst = max(changes)
    ok = len(changes) == 3 * len(VACUUM_LABELS) and worst < 1e-4 and not violations
    report(11, ok, f"{len(changes)} vacuum-bound orbits, max relative s_end change under doubled span "
                   f"{worst:.1e} (tol 1e-4); monitor violations {violations}")


def test_12_zero_swirl_bound(report):
    rows, ok = [], True
    for g in (1.1, 1.4, 1.7, 1.9):
        lo, hi = zeroswirl.find_transitional_mach_zeroswirl(GasModel(g))
        bound = math.sqrt(2.0) / (g - 1.0)
        ok &= hi < bound
        rows.append(f"{g}:{hi:.5g}<{bound:.5g}")
    report(12, ok, "zero-swirl threshold below sqrt2/(gamma-1): " + " ".join(rows))


def test_13_isothermal(report):
    gas = GasModel(1.0)
    c0 = sound_speed(gas, 1.0)
    labels, cavities, bad = set(), 0, []
    machs = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0)
    for m in machs:
        for d in (FarFieldDatum(1.0, 0.0, m * c0), FarFieldDatum(1.0, m * c0 / math.sqrt(2), m * c0 / math.sqrt(2))):
            sol = solve(gas, d)
            labels.add(sol.case.value)
            if "vacuum" in sol.case.value or any(p.kind == "vacuum" for p in sol.pieces):
                bad.append((m, d.u0 > 0, sol.case.value))
            if evaluate(sol, 0.0).rho == 0.0:
                cavities += 1
            else:
                bad.append((m, d.u0 > 0, "rho(0) > 0"))
        if predict_case(gas, FarFieldDatum(1.0, 0.0, m * c0)) in (CaseLabel.Id, CaseLabel.II_vacuum):
            bad.append((m, "predict"))
    ok = not bad and cavities == 2 * len(machs)
    report(13, ok, f"gamma = 1, M0 in {machs} on u0 = 0 and u0 = v0: labels {sorted(labels)}, "
                   f"point cavities {cavities}/{2 * len(machs)}, problems {bad}")


def matrix_csv_bytes(solutions) -> dict:
    out = {}
    for key, sol in sorted(solutions.items()):
        table = profile_table(sol, profile_grid(sol, 401, None))
        out[key] = csv_text(PROFILE_COLUMNS, table, int_cols=(7,)).encode()
    return out


def test_14_determinism(report, matrix):
    first = matrix_csv_bytes(matrix)
    midfield.find_Ih.cache_clear()
    zeroswirl.find_transitional_mach_zeroswirl.cache_clear()
    second = matrix_csv_bytes(solve_matrix())
    diff = [k for k in first if first[k] != second[k]]
    report(14, not diff, f"{len(first)} profile CSVs re-solved from scratch; differing {diff}")
