"""Command-line front end: ``laplace-rf run | gallery | quad-check``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gallery as G
from . import nystrom as Ny
from . import quadrature as Q
from . import solver as S
from .geometry import load_geometry

log = logging.getLogger("laplace_rf")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    kind: S.ProblemKind
    geometry: dict
    data: dict
    N: int = 10
    tol: float = 1e-12
    max_iter: int = 100
    adaptive: bool = False
    seed: int = 0
    method: str = "rational"
    outputs: dict = field(default_factory=dict)
    cluster: dict | None = None
    comparison: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> "RunConfig":
        try:
            kind = S.ProblemKind(d.get("kind", "interior_dirichlet"))
        except ValueError as exc:
            raise ConfigError(f"unknown problem kind {d.get('kind')!r}") from exc
        for key in ("geometry", "data"):
            if key not in d or not isinstance(d[key], dict):
                raise ConfigError(f"config needs a '{key}' object")
        method = d.get("method", "rational")
        if method not in ("rational", "nystrom", "both"):
            raise ConfigError(f"unknown method {method!r}")
        outputs = dict(d.get("outputs", {}))
        grid = outputs.get("field")
        if grid is not None and (int(grid.get("nx", 0)) <= 0 or int(grid.get("ny", 0)) <= 0):
            raise ConfigError("field grid needs positive nx and ny")
        cfg = cls(kind, dict(d["geometry"]), dict(d["data"]), int(d.get("N", 10)), float(d.get("tol", 1e-12)),
                  int(d.get("max_iter", 100)), bool(d.get("adaptive", False)), int(d.get("seed", 0)), method,
                  outputs, d.get("cluster"), dict(d.get("comparison", {})))
        for key in ("file", "table"):
            for sect in (cfg.geometry, cfg.data):
                if key in sect:
                    sect[key] = str((base / sect[key]).resolve()) if not Path(sect[key]).is_absolute() else sect[key]
        return cfg


def _params(sect: dict) -> dict:
    return {k: v for k, v in sect.get("params", {}).items()}


def build_problem(cfg: RunConfig):
    """Boundary, data and (for gallery curves) the smooth parametrization used by the baseline."""
    g = cfg.geometry
    if "file" in g:
        b = load_geometry(g["file"])
        gname = None
    elif "gallery" in g:
        gname = g["gallery"]
        if G.parse_name(gname)[0] == "random-ellipses" and "seed" not in _params(g):
            name, args = G.parse_name(gname)
            if len(args) < 2:
                g = dict(g, params=dict(_params(g), seed=cfg.seed))
        b, _ = G.gallery(gname, None, _params(g))
    else:
        raise ConfigError("geometry needs 'file' or 'gallery'")
    d = cfg.data
    if "gallery" in d:
        item, fn = G._build(G.DATA, d["gallery"], _params(d))
        data = S.BoundaryData(fn, uses_normal=item.needs_normal)
        raw = fn
    elif "table" in d:
        path = Path(d["table"])
        if not path.exists():
            raise FileNotFoundError(f"data table not found: {path}")
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        data = S.TabulatedData(arr[:, 0], arr[:, 1])
        raw = None
    else:
        raise ConfigError("data needs 'gallery' or 'table'")
    if cfg.kind is S.ProblemKind.EXTERIOR_NEUMANN and "gallery" in d and G.parse_name(d["gallery"])[0] == "plusminus":
        raise ConfigError("plusminus data pairs with Dirichlet problems")
    return b, data, raw, gname


def smooth_curves(gname: str, params: dict):
    """Smooth periodic parametrizations for the gallery curves the baseline supports."""
    name, args = G.parse_name(gname)
    item = G.GEOMETRIES[name]
    kw = dict(zip(item.params, args))
    kw.update(params)
    if name == "ellipse":
        return [Ny.SmoothCurve.ellipse(kw.get("a", 1.0), kw.get("b", 0.5))], None
    if name == "circle":
        return [Ny.SmoothCurve.circle(kw.get("R", 1.0))], None
    if name == "trigpoly":
        return [Ny.SmoothCurve.trigpoly(kw.get("gamma", 1.75), int(kw.get("nu", 2)))], None
    if name == "two-circles":
        d = kw.get("d", 0.1)
        c = [1j * (1 + d / 2), -1j * (1 + d / 2)]
        return [Ny.SmoothCurve.circle(1.0, cc) for cc in c], c
    raise ConfigError(f"the Nystrom baseline needs a smooth gallery curve, not {name!r}")


def _nystrom_run(cfg: RunConfig, raw, gname, n: int):
    curves, centers = smooth_curves(gname, _params(cfg.geometry))
    if cfg.kind is S.ProblemKind.INTERIOR_DIRICHLET:
        sol = Ny.nystrom_interior_dirichlet(curves[0], raw, n)
        return sol, Ny.nystrom_delta_e_max(sol, raw)
    if cfg.kind is S.ProblemKind.EXTERIOR_DIRICHLET:
        if centers is None:
            centers = [0.0]

        def fj(z, j):
            if getattr(raw, "__code__", None) is not None and raw.__code__.co_argcount == 3:
                return raw(z, None, np.full(z.shape, j))
            return raw(z)
        sol = Ny.nystrom_exterior_dirichlet(curves, fj, n, centers)
        return sol, Ny.nystrom_delta_e_max(sol, fj)
    raise ConfigError("the Nystrom baseline covers Dirichlet problems only")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(x) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else "nan"


def _rational_solve(cfg: RunConfig, b, data, N: int | None = None):
    p = S.ProblemSpec(cfg.kind, b, data, N=cfg.N if N is None else N, tol=cfg.tol, max_iter=cfg.max_iter,
                      adaptive=cfg.adaptive, seed=cfg.seed)
    if cfg.cluster:
        from .cluster import solve_large
        c = cfg.cluster
        model, ps, rep = solve_large(p, int(c.get("k", 10)), int(c.get("poles_per_curve", 3)),
                                     float(c.get("tol", 1e-2)), int(c.get("max_iter", cfg.max_iter)), cfg.seed)
        return model, ps, rep
    return S.solve(p)


def run(cfg: RunConfig, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    b, data, raw, gname = build_problem(cfg)
    summary: dict = {"kind": cfg.kind.value, "method": cfg.method}
    out = cfg.outputs
    if cfg.method in ("rational", "both"):
        model, ps, rep = _rational_solve(cfg, b, data)
        summary["rational"] = rep.to_dict()
        summary["rational"]["delta_e_max"] = S.delta_e_max(model, b, data, kind=cfg.kind)
        S.dump_model_csv(model, outdir / out.get("poles", "poles.csv"))
        grid = out.get("field")
        if grid:
            xs = np.linspace(float(grid["xmin"]), float(grid["xmax"]), int(grid["nx"]))
            ys = np.linspace(float(grid["ymin"]), float(grid["ymax"]), int(grid["ny"]))
            Z = xs[None, :] + 1j * ys[:, None]
            U, V, valid = S.eval_field(model, Z, b, exterior=cfg.kind.exterior)
            rows = [[_fmt(z.real), _fmt(z.imag), _fmt(u), _fmt(v), int(ok)]
                    for z, u, v, ok in zip(Z.ravel(), U.ravel(), V.ravel(), valid.ravel())]
            _write_csv(outdir / grid.get("file", "field.csv"), ["x", "y", "U", "V", "valid"], rows)
    if cfg.method in ("nystrom", "both"):
        if raw is None or gname is None:
            raise ConfigError("the Nystrom baseline needs gallery geometry and data")
        n = int(cfg.comparison.get("nystrom_points", 2 * cfg.N))
        n += n % 2
        _, err = _nystrom_run(cfg, raw, gname, n)
        summary["nystrom"] = {"n": n, "delta_e_max": err}
    if cfg.method == "both":
        rN = [int(x) for x in cfg.comparison.get("rational_N", [5, 10, 15, 20, 25, 30])]
        nn = [int(x) for x in cfg.comparison.get("nystrom_n", [50, 100, 200, 400])]

        def rat(N):
            m, _, r = _rational_solve(cfg, b, data, N)
            return ["rational", 2 * N, _fmt(S.delta_e_max(m, b, data, kind=cfg.kind)), _fmt(r.delta_e)]

        def nys(n):
            _, e = _nystrom_run(cfg, raw, gname, n + n % 2)
            return ["nystrom", n + n % 2, _fmt(e), ""]

        with ThreadPoolExecutor(2) as ex:
            fr = ex.submit(lambda: [rat(N) for N in rN])
            fn = ex.submit(lambda: [nys(n) for n in nn])
            rows = fr.result() + fn.result()
        _write_csv(outdir / out.get("comparison", "comparison.csv"),
                   ["method", "basis_count", "delta_e_max", "delta_e"], rows)
    (outdir / out.get("report", "report.json")).write_text(json.dumps(S._jsonable(summary), indent=2, sort_keys=True))
    return summary


def _error_record(exc: BaseException, code: int) -> dict:
    return {"status": "error", "exit_code": code, "type": type(exc).__name__, "error": str(exc)}


def cmd_run(args) -> int:
    path = Path(args.config)
    outdir = Path(args.out) if args.out else path.parent / (path.stem + "_out")
    try:
        if not path.exists():
            raise FileNotFoundError(f"config not found: {path}")
        cfg = RunConfig.from_dict(json.loads(path.read_text()), path.parent)
        summary = run(cfg, outdir)
    except (FileNotFoundError, ConfigError, json.JSONDecodeError, KeyError) as exc:
        rec = _error_record(exc, EXIT_INPUT)
    except Exception as exc:  # any module failure becomes an error record
        log.debug("run failed", exc_info=True)
        rec = _error_record(exc, EXIT_FAIL)
    else:
        rat = summary.get("rational", {})
        print(json.dumps({"status": "ok", "out": str(outdir), "delta_e": rat.get("delta_e"),
                          "delta_e_max": rat.get("delta_e_max")}, default=str))
        return EXIT_OK
    print(json.dumps(rec), file=sys.stderr)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "error.json").write_text(json.dumps(rec, indent=2))
    except OSError:
        pass
    return rec["exit_code"]


def cmd_gallery(args) -> int:
    for line in G.list_items():
        print(line)
    return EXIT_OK


def cmd_quad_check(args) -> int:
    worst = Q.exactness_check(args.trials, args.seed)
    x, w = Q.rational_chebyshev_rule([2.0, 2.0], 2)
    closed = abs(np.sum(w / (2.0 - x) ** 2) - 2 * np.pi / 3 ** 1.5) / (2 * np.pi / 3 ** 1.5)
    ok = worst <= 1e-12 and closed <= 1e-13
    print(json.dumps({"trials": args.trials, "worst_relative_error": worst, "closed_form_error": closed,
                      "pass": bool(ok)}))
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="laplace-rf", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="solve the problem described by a JSON config")
    r.add_argument("config")
    r.add_argument("-o", "--out", help="output directory (default: <config>_out)")
    r.set_defaults(func=cmd_run)
    g = sub.add_parser("gallery", help="list gallery geometries and data")
    g.add_argument("--list", action="store_true", default=True)
    g.set_defaults(func=cmd_gallery)
    q = sub.add_parser("quad-check", help="run the quadrature exactness checks")
    q.add_argument("--trials", type=int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_quad_check)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
