import csv
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from axiswirl.cli import CRITICAL_COLUMNS, PROFILE_COLUMNS, fmt, main

FIG = ["--gamma", "1.4", "--a2", "1", "--rho0", "1", "--u0", "0", "--v0", "1"]


@pytest.fixture()
def run():
    runner = CliRunner()

    def go(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)

    return go


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_fmt():
    assert fmt(1.5) == "1.5"
    assert fmt(math.nan) == ""
    assert fmt(math.inf) == "inf"
    assert float(fmt(0.1)) == 0.1


def test_solve_Ia(run, tmp_path):
    out = tmp_path / "prof.csv"
    r = run("solve", *FIG, "--out", out)
    assert r.exit_code == 0, r.output
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["case"] == "Ia"
    assert any(abs(b - 1.7535) < 5e-4 for b in meta["breakpoints"])
    assert meta["schema_version"] == 1
    rows = read_csv(out)
    assert tuple(rows[0]) == PROFILE_COLUMNS
    # 401 uniform points on [0, 2 r*] merged with the breakpoints
    xi = [float(row[0]) for row in rows[1:]]
    grid = set(np.linspace(0.0, 2.0 * meta["breakpoints"][-1], 401)) | set(meta["breakpoints"])
    assert xi == sorted(grid)
    assert all(b in xi for b in meta["breakpoints"])
    assert float(rows[1][0]) == 0.0 and float(rows[1][1]) == 0.0


def test_solve_Id_lists_vacuum_edge(run, tmp_path):
    out = tmp_path / "p.csv"
    r = run("solve", "--gamma", "1.4", "--u0", "0", "--v0", "5", "--out", out)
    assert r.exit_code == 0
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["case"] == "Id"
    assert meta["pieces"][0] == "vacuum"
    assert meta["diagnostics"]["vacuum_edge"] == pytest.approx(meta["breakpoints"][0], rel=1e-6)


def test_solve_rejects_gamma(run):
    r = run("solve", "--gamma", "2.5", "--v0", "1")
    assert r.exit_code == 2
    assert "gamma out of supported range [1,2)" in r.stderr


def test_solve_rejects_bad_density(run):
    r = run("solve", "--gamma", "1.4", "--rho0", "-1", "--v0", "1")
    assert r.exit_code == 2


def test_config_file_and_flag_precedence(run, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"gamma": 1.4, "v0": 5.0}))
    assert run("classify", "--config", cfg).output.strip() == "Id"
    assert run("classify", "--config", cfg, "--v0", "1").output.strip() == "Ia"


def test_classify_predict(run):
    assert run("classify", *FIG, "--predict").output.strip() == "Ia"


def test_critical_table(run, tmp_path):
    out = tmp_path / "crit.csv"
    r = run("critical", "--gamma", "1.4", "--gamma", "1.1", "--gamma", "1", "--out", out)
    assert r.exit_code == 0
    rows = read_csv(out)
    assert tuple(rows[0]) == CRITICAL_COLUMNS
    g14, g11, g1 = rows[1:]
    assert float(g14[1]) == pytest.approx(0.77, abs=0.02)
    assert float(g11[1]) == pytest.approx(0.93, abs=0.02)
    assert g1[2] == "inf"
    assert g14[4] == "NA"
    assert float(g14[3]) < float(g14[2])


def test_field_fig_config(run, tmp_path):
    ppm, fcsv = tmp_path / "rho.pgm", tmp_path / "f.csv"
    r = run("field", *FIG, "--t", "1", "--extent", "1.7535", "--n", "256", "--ppm", ppm, "--csv", fcsv)
    assert r.exit_code == 0
    data = ppm.read_bytes()
    head = b"P5\n256 256\n255\n"
    assert data.startswith(head)
    img = np.frombuffer(data[len(head):], dtype=np.uint8).reshape(256, 256)
    rows = read_csv(fcsv)
    assert rows[0] == ["x", "y", "rho", "ux", "uy"]
    vals = np.array([[float(x) for x in row] for row in rows[1:]])
    rho = vals[:, 2].reshape(256, 256)
    for i, j in ((0, 0), (0, -1), (-1, 0), (-1, -1)):
        assert rho[i, j] == pytest.approx(1.0, abs=1e-12)
    # the heatmap maps rho_max = 1 to 255
    assert img[0, 0] == 255 and img.max() == 255


def test_field_centre_cell_is_cavity(run, tmp_path):
    fcsv = tmp_path / "f.csv"
    r = run("field", *FIG, "--extent", "1.7535", "--n", "257", "--csv", fcsv)
    assert r.exit_code == 0
    vals = np.array([[float(x) for x in row] for row in read_csv(fcsv)[1:]])
    centre = vals[np.argmin(np.hypot(vals[:, 0], vals[:, 1]))]
    assert centre[0] == 0.0 and centre[1] == 0.0
    assert centre[2] == 0.0


def test_field_zero_swirl_vacuum_disk(run, tmp_path):
    out, fcsv = tmp_path / "p.csv", tmp_path / "f.csv"
    args = ("--gamma", "1.4", "--u0", "6", "--v0", "0")
    run("solve", *args, "--out", out)
    u_edge = json.loads(out.with_suffix(".json").read_text())["diagnostics"]["vacuum_edge"]
    r = run("field", *args, "--extent", 2 * u_edge, "--n", "101", "--csv", fcsv)
    assert r.exit_code == 0
    vals = np.array([[float(x) if x else math.nan for x in row] for row in read_csv(fcsv)[1:]])
    rr = np.hypot(vals[:, 0], vals[:, 1])
    assert np.all(vals[rr < u_edge * (1 - 1e-9), 2] == 0.0)
    assert np.all(vals[rr > u_edge * (1 + 1e-9), 2] > 0.0)


def test_field_needs_output(run):
    assert run("field", *FIG).exit_code == 2


def test_phase(run, tmp_path):
    out = tmp_path / "ph.csv"
    r = run("phase", "--gamma", "1.4", "--u0", "0", "--v0", "2", "--out", out)
    assert r.exit_code == 0
    rows = read_csv(out)
    assert rows[0] == ["piece_index", "tau", "q1", "q2", "q3", "q4"]
    assert {row[0] for row in rows[1:]} == {"1", "2"}


def test_verify_report(run, tmp_path):
    out = tmp_path / "v.json"
    r = run("verify", *FIG, "--out", out)
    assert r.exit_code == 0
    rep = json.loads(out.read_text())
    assert rep["ok"] and rep["case"] == "Ia"
    assert rep["max_residual"] < 1e-5


def test_solve_is_deterministic(run, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("solve", "--gamma", "1.7", "--u0", "0.3", "--v0", "0.4", "--out", a)
    run("solve", "--gamma", "1.7", "--u0", "0.3", "--v0", "0.4", "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_version(run):
    assert "0.1.0" in run("--version").output
