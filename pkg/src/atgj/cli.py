"""Command-line entry point: ``atgj quad|validate|run|profiles``.

Exit codes: 0 success, 1 usage or configuration error, 2 validation
failure, 3 solver divergence.

Run configuration files are INI files read with :mod:`configparser`::

    [case]
    preset = cavity-kn10        ; any name from atgj.cases.PRESETS
    scale = desk                ; desk | full

    [quadrature]                ; every key optional, overrides the preset
    kind = atgj                 ; atgj | nc
    n = 8
    n_theta = 90
    lambda = 5
    alpha = 7.853981633974483
    theta0 = 0
    m = 201                     ; nc only
    u = 4                       ; nc only

    [gas]
    kn = 10

    [mesh]
    cells = 30                  ; cavity: cells per side
    cells_per_d = 2             ; cylinder: cells per diameter

    [solver]
    cfl = 0.9
    steady_tol = 1e-6
    max_steps = 20000
    report_every = 500
    threads = 1
    scheme = dugks              ; dugks | upwind
    limiter = none              ; none (central slopes) | vanleer
    conservative = true

    [output]
    dir = out/cavity-kn10

Values given on the command line beat the file, which beats the preset.
A run manifest (``manifest.json``) holds the same sections fully resolved
and is accepted by ``--config`` to reproduce a run.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cases import (
    PRESETS,
    CavityCase,
    GeometryError,
    VelocitySpec,
    extract_centerline,
    laplace_oracle,
    node_budget_ratio,
    preset,
    read_field_csv,
    write_field_csv,
    write_profile_csv,
)
from .kinetic import GasModel, Macroscopics, StateError, discrete_shakhov_pair, equilibrium_g, raw_moments
from .quadrature import (
    ParameterError,
    WeightParams,
    build_velocity_set,
    golub_welsch,
    jacobi_recurrence,
    newton_cotes_set,
    total_weight,
    weight_function,
    write_csv,
)
from .solver import (
    ConfigurationError,
    LIMITERS,
    DivergenceError,
    Mesh2D,
    Solver,
    SolverConfig,
    load_checkpoint,
)

log = logging.getLogger("atgj")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_DIVERGED = 0, 1, 2, 3
OUTPUT_ENV = "ATGJ_OUTPUT_DIR"
DEFAULT_OUTPUT = "atgj_out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _output_dir(explicit=None, from_file=None):
    d = explicit or os.environ.get(OUTPUT_ENV) or from_file or DEFAULT_OUTPUT
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


# -- quad ----------------------------------------------------------------------


def cmd_quad(args):
    if args.nc:
        if args.m is None or args.u is None:
            raise UsageError("--nc needs --m and --u")
        vs = newton_cotes_set(args.m, args.u)
        analytic = None
    else:
        if args.n is None or args.ntheta is None or args.lam is None:
            raise UsageError("ATGJ rules need --n, --ntheta and --lambda")
        if args.alpha_matched == (args.alpha is not None):
            raise UsageError("give exactly one of --alpha and --alpha-matched")
        p = WeightParams.matched(args.lam, args.T0) if args.alpha_matched else WeightParams(
            args.alpha, args.lam, args.T0)
        vs = build_velocity_set(args.n, args.ntheta, p, args.theta0)
        analytic = total_weight(p)
    out = Path(args.out) if args.out else _output_dir() / "quad.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(vs, out)
    print(f"rule      {vs.kind}")
    print(f"K         {vs.K}")
    print(f"sum w     {np.sum(vs.w_raw):.17g}")
    if analytic is not None:
        print(f"analytic  {analytic:.17g}")
    print(f"max R     {vs.max_radius:.17g}")
    print(f"written   {out}")
    return EXIT_OK


# -- validate ------------------------------------------------------------------


def _check(name, value, tol, ok=None):
    ok = (value < tol) if ok is None else ok
    return {"name": name, "value": float(value), "tol": tol, "ok": bool(ok)}


def _suite_quadrature(perturb):
    from scipy.special import betaln

    rows = []
    worst = 0.0
    norm = 0.0
    for alpha in (0.5, math.pi / 2 * 5, math.pi / 2 * 500):
        for n in range(1, 11):
            rule = golub_welsch(jacobi_recurrence(n, alpha), WeightParams(alpha, 1.0))
            w = rule.w * (1.0 + perturb)
            norm = max(norm, abs(np.sum(w) - 1.0 / (alpha + 1)) * (alpha + 1))
            for m in range(2 * n):
                exact = math.exp(betaln(m + 1, alpha + 1))
                worst = max(worst, abs(np.dot(w, rule.r ** m) - exact) / exact)
    rows.append(_check("radial exactness r^m (1-r)^alpha, m <= 2n-1", worst, 1e-11))
    rows.append(_check("radial weight sum = 1/(alpha+1)", norm, 1e-13))
    tw = 0.0
    for kn in (0.001, 0.1, 1, 10):
        spec = PRESETS["cavity-kn" + f"{kn:g}"].velocity
        vs = spec.build()
        p = WeightParams(spec.alpha, spec.lam)
        tw = max(tw, abs(np.sum(vs.w_raw) * (1.0 + perturb) / total_weight(p) - 1.0))
    rows.append(_check("total weight pi^2 lam T0 / (2(alpha+1))", tw, 1e-12))
    errs = []
    r = np.linspace(0.0, 4.0, 2001)
    for lam in (5, 50, 500, 5000):
        p = WeightParams.matched(lam)
        errs.append(float(np.max(np.abs(weight_function(r, 0.0, p) - np.exp(-r * r)))))
    ladder = all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] < 1e-3
    rows.append(_check("Maxwellian limit ladder (lam 5..5000)", errs[-1], 1e-3, ladder))
    return rows


def _suite_kinetic(perturb):
    rows = []
    vs = PRESETS["cavity-kn0.001"].velocity.build()
    geq = equilibrium_g(Macroscopics(1.0), vs) * (1.0 + perturb)
    rho, ux, uy, T, qx, qy = raw_moments(geq, 0.5 * geq, vs)
    rhoE = 0.5 * np.sum(vs.w_eff * ((vs.xi_x ** 2 + vs.xi_y ** 2) * geq + 0.5 * geq))
    rows.append(_check("g_eq density (8x16, lam 500)", abs(rho - 1.0), 1e-6))
    rows.append(_check("g_eq velocity", math.hypot(ux, uy), 1e-10))
    rows.append(_check("g_eq energy rho E = 3/4", abs(rhoE - 0.75), 1e-5))
    gm = GasModel(Kn=0.1)
    vs5 = PRESETS["cavity-kn0.1"].velocity.build()
    m = Macroscopics(1.3, (0.2, -0.1), 1.1, (0.02, -0.01))
    d = discrete_shakhov_pair(m, gm, vs5)
    got = raw_moments(d.g * (1.0 + perturb), d.h, vs5)
    want = (m.rho, m.u[0], m.u[1], m.T, gm.q_retention * m.q[0], gm.q_retention * m.q[1])
    err = max(abs(a - b) for a, b in zip(got, want))
    rows.append(_check("discrete Shakhov pair moment round trip", err, 1e-12))
    return rows


def _suite_solver(perturb):
    rows = []
    case = PRESETS["cylinder-ma5"]
    vs = case.velocity.build()
    mesh = Mesh2D.uniform(6, 5, 6.0, 5.0, case.boundaries())
    s = Solver(mesh, vs, case.gas(), SolverConfig(cfl=0.8))
    f = s.initialize(case.freestream())
    v0 = f.values.copy()
    worst = 0.0
    for _ in range(3):
        f, _r = s.advance(f)
        worst = max(worst, float(np.max(np.abs(f.values * (1.0 + perturb) - v0))))
        v0 = f.values.copy()
    rows.append(_check("freestream preservation per step (Ma 5 set)", worst, 1e-13))
    cav = PRESETS["cavity-kn0.1"]
    s = Solver(Mesh2D.uniform(8, 8, 1.0, 1.0, cav.boundaries()), cav.velocity.build(), cav.gas())
    f = s.initialize(cav.initial_state())
    m0 = s.total_mass(f)
    for _ in range(20):
        f, _r = s.advance(f)
    rows.append(_check("closed-cavity mass drift (20 steps)",
                       abs(s.total_mass(f) * (1.0 + perturb) - m0) / m0, 1e-12))
    return rows


def _suite_cases(perturb):
    rows = []
    c = laplace_oracle(0.5, 0.5, 2.0, 1.0, 200) * (1.0 + perturb)
    rows.append(_check("conduction oracle centre = Tc + dT/4", abs(c - 1.25), 1e-12))
    r1 = node_budget_ratio(1)
    r10 = node_budget_ratio(10)
    ok = f"{r1:.1f}" == "54.0" and f"{r10:.1f}" == "56.1"
    rows.append(_check("node-budget ratios 54.0 / 56.1", abs(r1 - 54.0), 0.05, ok))
    vs = PRESETS["cylinder-ma5"].velocity.build()
    rows.append(_check("Ma 5 set max node radius ~ 11 (15%)", abs(vs.max_radius / 11 - 1), 0.15))
    return rows


SUITES = {
    "quadrature": _suite_quadrature,
    "kinetic": _suite_kinetic,
    "solver": _suite_solver,
    "cases": _suite_cases,
}


def cmd_validate(args):
    names = list(SUITES) if not args.only else [s.strip() for s in args.only.split(",")]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; available: {', '.join(SUITES)}")
    failed = []
    print(f"{'suite':<11} {'check':<52} {'value':>11} {'tol':>8}  status")
    for name in names:
        perturb = args.perturb if args.perturb_suite in (None, name) else 0.0
        for row in SUITES[name](perturb):
            status = "pass" if row["ok"] else "FAIL"
            print(f"{name:<11} {row['name']:<52} {row['value']:11.3e} {row['tol']:8.2g}  {status}")
            if not row["ok"]:
                failed.append(f"{name}: {row['name']}")
    if failed:
        for f in failed:
            print(f"failed: {f}", file=sys.stderr)
        return EXIT_VALIDATION
    print("all checks passed")
    return EXIT_OK


# -- run -----------------------------------------------------------------------

_QUAD_KEYS = {"kind": str, "n": int, "n_theta": int, "lambda": float, "alpha": float,
              "theta0": float, "m": int, "u": float}
_SOLVER_KEYS = {"cfl": float, "steady_tol": float, "max_steps": int, "report_every": int,
                "threads": int, "scheme": str, "limiter": str,
                "conservative": bool}
_MESH_KEYS = {"cells": int, "cells_per_d": int}
_GAS_KEYS = {"kn": float}


def _coerce(section, key, value, table):
    if key not in table:
        raise ConfigurationError(f"unknown key [{section}] {key}")
    typ = table[key]
    try:
        if typ is bool:
            if isinstance(value, bool):
                return value
            v = str(value).strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if typ is int:
            x = float(value)
            if not x.is_integer():
                raise ValueError(value)
            return int(x)
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"[{section}] {key}: expected {typ.__name__}, got {value!r}") from None


def _read_config_file(path):
    """Sections dict from an INI file or a run manifest (JSON)."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file {path} not found")
    if path.suffix == ".json":
        with open(path) as fh:
            data = json.load(fh)
        return {k: dict(v) for k, v in data.get("config", data).items() if isinstance(v, dict)}
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return {s: dict(cp[s]) for s in cp.sections()}


def resolve_config(args):
    """Merge preset defaults, config file and command-line values.

    Returns the resolved sections (the manifest's ``config`` block).
    """
    file_cfg = _read_config_file(args.config) if args.config else {}
    known = {"case", "quadrature", "gas", "mesh", "solver", "output"}
    extra = set(file_cfg) - known
    if extra:
        raise ConfigurationError(f"unknown config section(s) {sorted(extra)}")
    case_sec = file_cfg.get("case", {})
    name = args.preset or case_sec.get("preset")
    if not name:
        raise UsageError("give --preset or a config file with [case] preset")
    if args.preset and args.config and case_sec.get("preset") not in (None, args.preset):
        log.info("--preset %s overrides config preset %s", args.preset, case_sec.get("preset"))
    case = preset(name)
    scale = args.scale or case_sec.get("scale") or "desk"
    if scale not in ("desk", "full"):
        raise ConfigurationError(f"scale must be desk or full, got {scale!r}")

    v = case.velocity
    quad = {"kind": v.kind, "n": v.n, "n_theta": v.n_theta, "lambda": v.lam, "alpha": v.alpha,
            "theta0": v.theta0, "m": v.M, "u": v.U}
    for k, val in file_cfg.get("quadrature", {}).items():
        quad[k] = _coerce("quadrature", k, val, _QUAD_KEYS)
    cli_quad = {"kind": "nc" if args.nc else None, "n": args.n, "n_theta": args.ntheta,
                "lambda": args.lam, "alpha": args.alpha, "theta0": args.theta0, "m": args.m, "u": args.u}
    for k, val in cli_quad.items():
        if val is not None:
            quad[k] = _coerce("quadrature", k, val, _QUAD_KEYS)
    lam_changed = args.lam is not None or "lambda" in file_cfg.get("quadrature", {})
    alpha_given = args.alpha is not None or "alpha" in file_cfg.get("quadrature", {})
    if lam_changed and not alpha_given and isinstance(case, CavityCase):
        quad["alpha"] = math.pi / 2 * quad["lambda"]  # cavity rules keep alpha matched

    gas = {"kn": case.Kn}
    for k, val in file_cfg.get("gas", {}).items():
        gas[k] = _coerce("gas", k, val, _GAS_KEYS)
    if args.kn is not None:
        gas["kn"] = float(args.kn)

    mesh = {}
    if isinstance(case, CavityCase):
        mesh["cells"] = case.mesh_desk if scale == "desk" else case.mesh_full
    else:
        mesh["cells_per_d"] = case.cells_per_D_desk if scale == "desk" else case.cells_per_D_full
    for k, val in file_cfg.get("mesh", {}).items():
        mesh[k] = _coerce("mesh", k, val, _MESH_KEYS)
    if args.cells is not None:
        mesh["cells" if isinstance(case, CavityCase) else "cells_per_d"] = args.cells

    sc = case.solver_config(scale)
    solver = {k: getattr(sc, k) for k in _SOLVER_KEYS}
    for k, val in file_cfg.get("solver", {}).items():
        solver[k] = _coerce("solver", k, val, _SOLVER_KEYS)
    cli_solver = {"cfl": args.cfl, "steady_tol": args.steady_tol, "max_steps": args.max_steps,
                  "report_every": args.report_every, "threads": args.threads, "scheme": args.scheme,
                  "limiter": args.limiter}
    for k, val in cli_solver.items():
        if val is not None:
            solver[k] = _coerce("solver", k, val, _SOLVER_KEYS)

    out = args.out or os.environ.get(OUTPUT_ENV) or file_cfg.get("output", {}).get("dir") \
        or str(Path(DEFAULT_OUTPUT) / name)
    return {
        "case": {"preset": name, "scale": scale},
        "quadrature": quad,
        "gas": gas,
        "mesh": mesh,
        "solver": solver,
        "output": {"dir": out},
    }


def build_run(cfg):
    """Case, velocity set, gas, mesh and solver from resolved sections."""
    case = preset(cfg["case"]["preset"])
    q = cfg["quadrature"]
    spec = VelocitySpec(n=q["n"], n_theta=q["n_theta"], alpha=q["alpha"], lam=q["lambda"],
                        theta0=q["theta0"], kind=q["kind"], M=q["m"], U=q["u"])
    if cfg["gas"]["kn"] != case.Kn:
        case = replace(case, Kn=cfg["gas"]["kn"])
    case = replace(case, velocity=spec)
    vs = spec.build()
    if isinstance(case, CavityCase):
        mesh = case.mesh(cells=cfg["mesh"]["cells"])
    else:
        mesh = case.mesh(cells_per_D=cfg["mesh"]["cells_per_d"])
    scfg = SolverConfig(**cfg["solver"])
    solver = Solver(mesh, vs, case.gas(), scfg)
    return case, vs, mesh, solver


def _write_outputs(outdir, case, solver, field):
    mac = solver.macroscopics(field)
    written = {}
    p = outdir / "field.csv"
    write_field_csv(p, mac, solver.mesh)
    written["field"] = str(p)
    axes = ("horizontal", "vertical") if isinstance(case, CavityCase) else ("upstream",)
    for ax in axes:
        prof = extract_centerline(mac, solver.mesh, ax)
        p = outdir / f"centerline_{ax}.csv"
        write_profile_csv(p, prof)
        written[f"centerline_{ax}"] = str(p)
    report = None
    if isinstance(case, CavityCase) and case.analytic:
        prof = extract_centerline(mac, solver.mesh, "vertical")
        x_mid = 0.5 * case.L
        ref = case.oracle(np.full_like(prof.s, x_mid), prof.s)
        dT = case.T_h - case.T_c
        err = float(np.max(np.abs(prof.values["T"] - ref)) / dT)
        report = {"line": "vertical", "max_abs_error_over_dT": err, "dT": dT}
        p = outdir / "oracle_report.json"
        p.write_text(json.dumps(report, indent=2))
        written["oracle_report"] = str(p)
        print(f"oracle: max |T - T_laplace| / (T_h - T_c) on the vertical centerline = {err:.3e}")
    return written, report


def cmd_run(args):
    cfg = resolve_config(args)
    outdir = _output_dir(cfg["output"]["dir"])
    case, vs, mesh, solver = build_run(cfg)
    ckpt_path = outdir / "checkpoint.npz"
    history = []
    if args.resume:
        field, meta = load_checkpoint(args.resume)
        if field.values.shape != (mesh.nx, mesh.ny, vs.K, 2):
            raise ConfigurationError("checkpoint does not match the resolved mesh/velocity set")
        solver.residual_reference = meta.get("residual_reference")
        hist_path = outdir / "residual.csv"
        if hist_path.exists():
            old = np.loadtxt(hist_path, delimiter=",", skiprows=1, ndmin=2)
            history = [tuple(r) for r in old if r[0] <= field.step]
    else:
        field = solver.initialize(case.initial_state())
    scfg = solver.config
    every = args.checkpoint_every or scfg.report_every
    budget = scfg.max_steps - (field.step if args.resume else 0)
    print(f"{cfg['case']['preset']}: mesh {mesh.nx}x{mesh.ny}, K = {vs.K}, "
          f"backend {solver.kern.BACKEND}, dt = {solver.time_step_size():.6g}")

    last_good = None
    t0 = time.perf_counter()
    status = "budget"
    residual = math.nan
    try:
        steps = 0
        while steps < budget:
            field, residual = solver.advance(field)
            steps += 1
            history.append((field.step, field.time, residual))
            if field.step % every == 0:
                last_good = solver.checkpoint(ckpt_path, field, config=cfg)
            if field.step % scfg.report_every == 0:
                print(f"step {field.step:8d}  t = {field.time:.6g}  residual = {residual:.3e}",
                      flush=True)
            if residual < scfg.steady_tol:
                status = "converged"
                break
    except DivergenceError as exc:
        print(f"error: solver diverged: {exc}", file=sys.stderr)
        where = last_good or "none (no checkpoint written yet)"
        print(f"last good checkpoint: {where}", file=sys.stderr)
        _write_history(outdir, history)
        return EXIT_DIVERGED
    wall = time.perf_counter() - t0
    solver.checkpoint(ckpt_path, field, config=cfg)
    _write_history(outdir, history)
    written, report = _write_outputs(outdir, case, solver, field)
    manifest = {
        "version": __version__,
        "config": cfg,
        "resolved": {
            "velocity_set": vs.describe(),
            "gas": asdict(case.gas()),
            "mesh": {"nx": mesh.nx, "ny": mesh.ny, "dx": mesh.dx, "dy": mesh.dy,
                     "origin": list(mesh.origin), "solid_cells": int(mesh.solid.sum())},
            "dt": solver.time_step_size(),
            "backend": solver.kern.BACKEND,
        },
        "status": status,
        "steps": field.step,
        "time": field.time,
        "final_residual": residual,
        "wall_clock_s": wall,
        "outputs": {**written, "residual_history": str(outdir / "residual.csv"),
                    "checkpoint": str(ckpt_path)},
    }
    if report is not None:
        manifest["oracle"] = report
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default))
    print(f"{status} after {field.step} steps (residual {residual:.3e}, {wall:.1f} s); "
          f"outputs in {outdir}")
    return EXIT_OK


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write_history(outdir, history):
    arr = np.array(history, dtype=float).reshape(-1, 3)
    np.savetxt(outdir / "residual.csv", arr, delimiter=",", header="step,time,residual",
               comments="", fmt=["%d", "%.17g", "%.17g"])


# -- profiles ------------------------------------------------------------------


def cmd_profiles(args):
    fields, mesh = read_field_csv(args.field)
    outdir = _output_dir(args.out)
    axes = args.axis or (["upstream"] if mesh.solid.any() else ["horizontal", "vertical"])
    for ax in axes:
        prof = extract_centerline(fields, mesh, ax, args.position)
        p = outdir / f"centerline_{ax}.csv"
        write_profile_csv(p, prof)
        print(f"{ax}: {len(prof.s)} samples -> {p}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _add_quad_flags(p, with_kind=True):
    p.add_argument("--n", type=int, help="radial nodes")
    p.add_argument("--ntheta", type=int, help="angular nodes")
    p.add_argument("--lambda", dest="lam", type=float, help="weight-function scale lambda")
    p.add_argument("--alpha", type=float, help="weight-function exponent alpha")
    p.add_argument("--theta0", type=float, help="angular offset (default 0)")
    p.add_argument("--nc", action="store_true", help="Newton-Cotes tensor grid instead of ATGJ")
    p.add_argument("--m", type=int, help="NC points per axis (odd)")
    p.add_argument("--u", type=float, help="NC half-width")


def build_parser():
    ap = _Parser(prog="atgj", description="Gauss-Jacobi velocity quadrature and DUGKS runs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("quad", help="write a velocity set as CSV")
    _add_quad_flags(q)
    q.add_argument("--alpha-matched", action="store_true", help="alpha = pi/2 * lambda")
    q.add_argument("--T0", type=float, default=1.0)
    q.add_argument("--out", help="CSV path (default: <output dir>/quad.csv)")
    q.set_defaults(func=cmd_quad)

    v = sub.add_parser("validate", help="run the invariant suites")
    v.add_argument("--only", help=f"comma-separated subset of {','.join(SUITES)}")
    v.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    v.add_argument("--perturb-suite", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="run a benchmark case")
    r.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
    r.add_argument("--config", help="INI config file or a previous run's manifest.json")
    r.add_argument("--scale", choices=("desk", "full"))
    _add_quad_flags(r)
    r.add_argument("--kn", type=float, help="Knudsen number override")
    r.add_argument("--cells", type=int, help="cavity cells per side / cylinder cells per D")
    r.add_argument("--cfl", type=float)
    r.add_argument("--steady-tol", type=float)
    r.add_argument("--max-steps", type=int)
    r.add_argument("--report-every", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--scheme", choices=("dugks", "upwind"))
    r.add_argument("--limiter", choices=LIMITERS, help="slope limiter (cavity presets: none)")
    r.add_argument("--checkpoint-every", type=int)
    r.add_argument("--resume", help="checkpoint .npz to continue from")
    r.add_argument("--out", help=f"output directory (env {OUTPUT_ENV} also works)")
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("profiles", help="re-extract centerlines from a field dump")
    pr.add_argument("field", help="field CSV written by 'run'")
    pr.add_argument("--axis", action="append", choices=("horizontal", "vertical", "upstream"))
    pr.add_argument("--position", type=float, help="line offset (default: domain middle)")
    pr.add_argument("--out", help="output directory")
    pr.set_defaults(func=cmd_profiles)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "quad" and args.theta0 is None:
        args.theta0 = 0.0
    try:
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"atgj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ConfigurationError, GeometryError) as exc:
        print(f"atgj: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StateError as exc:
        print(f"atgj: error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
