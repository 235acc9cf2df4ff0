import csv
import json

import numpy as np
import pytest

from laplace_rf import cli
from laplace_rf.cli import RunConfig, ConfigError, main


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


BASE = {
    "kind": "interior_dirichlet",
    "geometry": {"gallery": "ellipse(1, 2)"},
    "data": {"gallery": "poles(6, 2.5)"},
    "N": 8,
    "tol": 1e-12,
    "outputs": {"field": {"xmin": -1.5, "xmax": 1.5, "ymin": -2.5, "ymax": 2.5, "nx": 7, "ny": 9}},
}


def test_gallery_list(capsys):
    assert main(["gallery", "--list"]) == 0
    out = capsys.readouterr().out.splitlines()
    names = {line.split()[1].split("(")[0] for line in out}
    assert {"ellipse", "trigpoly", "lshape", "two-circles", "random-ellipses",
            "poles", "monopole", "essential", "uniform-flow", "plusminus"} <= names


def test_quad_check(capsys):
    assert main(["quad-check", "--trials", "10"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["pass"] and rec["worst_relative_error"] <= 1e-12


def test_run_writes_outputs(tmp_path, capsys):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "-o", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["rational"]["delta_e"] <= 1e-10
    poles = _read_csv(out / "poles.csv")
    assert len(poles) > 0
    field = _read_csv(out / "field.csv")
    assert len(field) == 7 * 9
    valid = np.array([int(r["valid"]) for r in field], dtype=bool)
    z = np.array([float(r["x"]) + 1j * float(r["y"]) for r in field])
    inside = (z.real / 1.0) ** 2 + (z.imag / 2.0) ** 2 < 1
    assert np.array_equal(valid, inside)
    # masked points keep their row with a sentinel value
    assert all(r["U"] == "nan" for r, ok in zip(field, valid) if not ok)
    u = np.array([float(r["U"]) for r, ok in zip(field, valid) if ok])
    assert np.all(np.isfinite(u))
    assert json.loads(capsys.readouterr().out.splitlines()[-1])["status"] == "ok"


def test_field_matches_data_function(tmp_path):
    out = tmp_path / "out"
    cli.run(RunConfig.from_dict(BASE), out)
    from laplace_rf import gallery as G
    f = G.pole_data(*G.ring_poles(6, 2.5))
    rows = [r for r in _read_csv(out / "field.csv") if r["valid"] == "1"]
    z = np.array([float(r["x"]) + 1j * float(r["y"]) for r in rows])
    u = np.array([float(r["U"]) for r in rows])
    # the data is harmonic inside, so the solution is the data itself
    assert np.max(np.abs(u - f(z))) <= 1e-9


def test_missing_geometry_file(tmp_path, capsys):
    cfg = dict(BASE, geometry={"file": "nowhere.json"})
    p = _write(tmp_path, cfg)
    out = tmp_path / "out"
    assert main(["run", str(p), "-o", str(out)]) == 2
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["status"] == "error" and rec["exit_code"] == 2
    assert "geometry not found" in rec["error"]
    assert json.loads((out / "error.json").read_text()) == rec


def test_missing_config(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == 2


@pytest.mark.parametrize("bad", [
    {"kind": "interior_poisson"},
    {"method": "magic"},
    {"geometry": "ellipse"},
    {"outputs": {"field": {"xmin": 0, "xmax": 1, "ymin": 0, "ymax": 1, "nx": 0, "ny": 3}}},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(dict(BASE, **bad))


def test_kind_data_pairing_rejected(tmp_path):
    cfg = dict(BASE, kind="exterior_neumann", geometry={"gallery": "two-circles"}, data={"gallery": "plusminus"})
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(tmp_path / "o")]) == 2


def test_solver_failure_is_exit_one(tmp_path, capsys):
    cfg = dict(BASE, kind="exterior_neumann", data={"gallery": "constant(1)"})
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(tmp_path / "o")]) == 1
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["exit_code"] == 1


def test_nystrom_refuses_corners(tmp_path):
    cfg = dict(BASE, geometry={"gallery": "lshape"}, data={"gallery": "monopole(0.5, 0.5)"}, method="nystrom")
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(tmp_path / "o")]) == 2


def test_reruns_byte_identical(tmp_path):
    cfg = dict(BASE, seed=3)
    a, b = tmp_path / "a", tmp_path / "b"
    cli.run(RunConfig.from_dict(cfg), a)
    cli.run(RunConfig.from_dict(cfg), b)
    for name in ("poles.csv", "field.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ra = json.loads((a / "report.json").read_text())
    rb = json.loads((b / "report.json").read_text())
    ra["rational"].pop("wall_time")
    rb["rational"].pop("wall_time")
    assert ra == rb


def test_tabulated_data(tmp_path):
    from laplace_rf import gallery as G
    b = G.ellipse(1.0, 2.0)
    s = np.linspace(0, 1, 400, endpoint=False)
    f = G.pole_data(*G.ring_poles(6, 2.5))
    np.savetxt(tmp_path / "data.csv", np.column_stack([s, f(b.eval(s))]), delimiter=",", header="s,f", comments="")
    cfg = dict(BASE, data={"table": "data.csv"})
    cfg.pop("outputs")
    out = tmp_path / "out"
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(out)]) == 0
    de = json.loads((out / "report.json").read_text())["rational"]["delta_e"]
    # the residual is set by the spline error in the interpolated data
    from scipy.interpolate import CubicSpline
    spl = CubicSpline(np.append(s, 1.0), np.append(f(b.eval(s)), f(b.eval(0.0))), bc_type="periodic")
    sd = np.linspace(0, 1, 20001)
    exact = f(b.eval(sd))
    spline_err = np.sqrt(np.mean((spl(sd) - exact) ** 2) / np.mean(exact ** 2))
    assert de <= 10 * spline_err


def test_trigpoly_monopole_config(tmp_path):
    cfg = {"kind": "interior_dirichlet", "geometry": {"gallery": "trigpoly(1.9, 2)"},
           "data": {"gallery": "monopole"}, "N": 35, "tol": 1e-14}
    out = tmp_path / "out"
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())["rational"]
    assert rep["delta_e"] <= 1e-3
    assert 343 / 2 <= rep["K"] <= 2 * 343


def test_method_both_comparison(tmp_path):
    cfg = {"kind": "interior_dirichlet", "geometry": {"gallery": "ellipse(1, 2)"},
           "data": {"gallery": "essential(1.01)"}, "N": 25, "tol": 1e-14, "method": "both",
           "comparison": {"rational_N": [25, 30], "nystrom_n": [100, 200], "nystrom_points": 200}}
    out = tmp_path / "out"
    assert main(["run", str(_write(tmp_path, cfg)), "-o", str(out)]) == 0
    rows = _read_csv(out / "comparison.csv")
    rat = [float(r["delta_e_max"]) for r in rows if r["method"] == "rational"]
    nys = {int(r["basis_count"]): float(r["delta_e_max"]) for r in rows if r["method"] == "nystrom"}
    assert min(rat) <= 1e-8
    assert nys[200] >= 0.3
    rep = json.loads((out / "report.json").read_text())
    assert rep["nystrom"]["n"] == 200 and rep["nystrom"]["delta_e_max"] >= 0.3
