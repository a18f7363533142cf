"""Command line interface: surface jobs, closing checks and n-noid solving.

Exit codes: 0 success, 1 usage or rejected input, 2 closing-condition failure,
3 basepoint outside the big cell, 4 solver divergence.
"""

from __future__ import annotations

import argparse
import re
import sys

import numpy as np

from . import __version__
from .closing import SignMismatchError, check_closing, conjugate, trinoid_unitarizer
from .factor import PIVOT_TOL
from .frame import TOL_ODE, delaunay_nu, end_eigenvalue_check, monodromy, monodromy_rep
from .loopalg import get_form
from .pipeline import BasepointError, DomainSpec, Job, Timer, export_obj, run_report, sample_surface
from .potential import (NnoidParams, TrinoidParams, delaunay_potential_ads3, delaunay_potential_h3,
                        nnoid_potential, smyth_potential, sphere_potential, trinoid_potential)
from .sym import SymPoints, sym_points_for, table_mean_curvature
from .traizet import (BalanceConfig, SolverDivergence, end_eigenvalue_residuals, open_nnoid_domain,
                      solve_nnoid, unitarity_residual)

EXIT_OK, EXIT_USAGE, EXIT_CLOSING, EXIT_BASEPOINT, EXIT_DIVERGENCE = 0, 1, 2, 3, 4

COMMANDS = ("sphere", "delaunay-h3", "delaunay-ads3", "smyth", "trinoid", "nnoid-solve", "nnoid-mesh", "check")

DEFAULTS = {
    "form": None, "H": 0.0, "q": 2.0, "a": 0.1, "b": 0.35, "lambda0": None, "trunc": 32,
    "domain": None, "res": "24x32", "delta": 0.05, "out": None, "report": None, "tol_ode": TOL_ODE,
    "pivot_tol": PIVOT_TOL, "viz": "ball", "keep_crossing": False, "n": 1, "c": 1.0,
    "tau": "21,3,32", "p": "0.5,-0.5,3", "t": 1e-3, "degree": 16, "surface": "trinoid",
    "closing_tol": 1e-6, "workers": 1,
}

FORM_DEFAULTS = {"sphere": "H3", "delaunay-h3": "H3", "delaunay-ads3": "AdS3", "smyth": "H3",
                 "trinoid": "H3", "nnoid-solve": "H3", "nnoid-mesh": "H3", "check": "H3"}


# ------------------------------------------------------------------ config

def parse_config_text(text: str) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment; keys accept ``-`` or ``_``."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _coerce(key: str, value):
    if value is None or key not in DEFAULTS:
        return value
    ref = DEFAULTS[key]
    if isinstance(value, str):
        if isinstance(ref, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(ref, int) and not isinstance(ref, bool):
            return int(value)
        if isinstance(ref, float):
            return float(value)
        if key == "lambda0":
            return complex(value.replace(" ", ""))
    return value


def format_config(cfg: dict) -> str:
    lines = []
    for k in sorted(DEFAULTS):
        v = cfg[k]
        lines.append(f"{k} = {'' if v is None else v}")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loopcmc", description="Loop-group CMC surface generator")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--print-config", action="store_true", help="print effective settings and exit")
        p.add_argument("--form", choices=["S3", "AdS3", "H3", "dS3"])
        p.add_argument("--H", type=float)
        p.add_argument("--q", type=float)
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--lambda0", type=complex)
        p.add_argument("--trunc", type=int)
        p.add_argument("--domain", help="disk:R | annulus:R0:R1 | rect:X0:X1:Y0:Y1 | holed")
        p.add_argument("--res", help="grid resolution NxM")
        p.add_argument("--delta", type=float)
        p.add_argument("--out")
        p.add_argument("--report")
        p.add_argument("--tol-ode", dest="tol_ode", type=float)
        p.add_argument("--pivot-tol", dest="pivot_tol", type=float)
        p.add_argument("--viz", choices=["ball", "halfspace", "stereo", "lightcone"])
        p.add_argument("--keep-crossing", dest="keep_crossing", action="store_true", default=None)
        p.add_argument("--n", type=int, help="Smyth order")
        p.add_argument("--c", type=float, help="Smyth coefficient")
        p.add_argument("--tau", help="comma-separated n-noid weights")
        p.add_argument("--p", help="comma-separated n-noid poles (complex allowed)")
        p.add_argument("--t", type=float, help="n-noid deformation parameter")
        p.add_argument("--degree", type=int, help="n-noid series degree")
        p.add_argument("--surface", choices=["sphere", "delaunay-h3", "delaunay-ads3", "smyth", "trinoid", "nnoid"],
                       help="surface for the check command")
        p.add_argument("--closing-tol", dest="closing_tol", type=float)
        p.add_argument("--workers", type=int)
    return ap


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    cfg["form"] = FORM_DEFAULTS[args.command]
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        series = False
        for k, v in parse_config_text(text).items():
            if re.fullmatch(r"[abz]\.\d+", k):
                series = True
                continue
            if k not in DEFAULTS:
                raise ValueError(f"unknown config key {k!r}")
            cfg[k] = _coerce(k, v)
        if series:
            # a file written by nnoid-solve: keep the solved coefficients
            cfg["solution"] = nnoid_from_config_text(text)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


# ----------------------------------------------------------------- helpers

def parse_res(text: str) -> tuple:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError as err:
        raise ValueError(f"resolution must look like NxM, got {text!r}") from err


def parse_complex_list(text: str) -> list:
    return [complex(s.strip().replace(" ", "")) for s in str(text).split(",") if s.strip()]


def sym_points_from_lambda0(form, lam0) -> SymPoints:
    """Pair ``lam0`` with its partner: ``-1/conj(lam0)`` (H3, dS3) or ``conj(lam0)`` (S3, AdS3)."""
    form = get_form(form)
    lam0 = complex(lam0)
    if form.delta == -1:
        lam1 = -1 / np.conj(lam0)
    else:
        lam1 = np.conj(lam0) if abs(lam0.imag) > 1e-12 else -lam0
    return SymPoints(lam0, lam1, form, table_mean_curvature(lam0, lam1, form))


def _points(cfg, form, default_lam0=None) -> SymPoints:
    if cfg["lambda0"] is not None:
        return sym_points_from_lambda0(form, cfg["lambda0"])
    if default_lam0 is not None and not cfg["H"]:
        return sym_points_from_lambda0(form, default_lam0)
    return sym_points_for(form, cfg["H"])


def parse_domain(text, default: DomainSpec, res, delta) -> DomainSpec:
    base = dict(kind=default.kind, res=res, r0=default.r0, r1=default.r1, box=default.box,
                holes=default.holes, punctures=default.punctures, delta=delta, basepoint=default.basepoint)
    if text:
        parts = str(text).split(":")
        kind = parts[0]
        vals = [float(v) for v in parts[1:]]
        base["kind"] = kind
        if kind == "disk" and vals:
            base["r0"], base["r1"] = 0.0, vals[0]
        elif kind == "annulus" and len(vals) == 2:
            base["r0"], base["r1"] = vals
        elif kind == "rect" and len(vals) == 4:
            base["box"] = tuple(vals)
        elif kind == "holed" and vals:
            base["r1"] = vals[0]
    if base["kind"] == "annulus":
        base["delta"] = min(delta, 0.5 * base["r0"])
    return DomainSpec(**base)


def _write(path, text):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# --------------------------------------------------------------- surfaces

def _surface_setup(name: str, cfg: dict):
    """Potential, form, evaluation points, default domain and closing data for a surface."""
    form = get_form(cfg["form"])
    closing = None
    eigen = {}
    unitarizer = None
    flags = []
    trunc = cfg["trunc"]
    if name == "sphere":
        pot = sphere_potential()
        pts = _points(cfg, form)
        dom = DomainSpec("disk", r1=0.9)
    elif name in ("delaunay-h3", "delaunay-ads3"):
        q = cfg["q"]
        ads = name == "delaunay-ads3"
        pot = delaunay_potential_ads3(q) if ads else delaunay_potential_h3(q)
        form = get_form("AdS3" if ads else "H3")
        pts = _points(cfg, form, 1j if ads else 1.0)
        M = monodromy(pot, 0, 1.0, trunc, radius=1.0, tol=cfg["tol_ode"])
        closing = check_closing([M], form, pts.lam0, pts.lam1, cfg["closing_tol"])
        eigen["delaunay_nu"] = end_eigenvalue_check(M, nu=lambda lam: delaunay_nu(q, lam, form))
        dom = DomainSpec("annulus", r0=np.exp(-2.0), r1=np.exp(2.0), basepoint=1.0)
    elif name == "smyth":
        pot = smyth_potential(cfg["n"], cfg["c"])
        pts = _points(cfg, form)
        dom = DomainSpec("disk", r1=0.9)
    elif name in ("trinoid", "nnoid"):
        if name == "trinoid":
            # H = 0: real lam0 = 1 for H3/dS3; lam0 = i for S3/AdS3 (lam0 = 1 is a double zero of f)
            pts = _points(cfg, form, 1j if form.delta == 1 else 1.0)
            tp = TrinoidParams(cfg["a"], cfg["b"], form, pts.lam0)
            pot = trinoid_potential(tp)
            rep = monodromy_rep(pot, 0.0, trunc, cfg["tol_ode"])
            try:
                ur = trinoid_unitarizer(rep.generators[0], rep.generators[1], form, extra=rep.generators[2:])
                unitarizer = ur.X
                gens = [conjugate(ur.X, g) for g in rep.generators]
            except SignMismatchError as err:
                flags.append(f"sign_mismatch {err}")
                gens = rep.generators
            closing = check_closing(gens, form, pts.lam0, pts.lam1, cfg["closing_tol"])
            dom = DomainSpec("rect", box=(-2.0, 2.0, -2.0, 2.0), punctures=[1.0, -1.0])
        else:
            raise ValueError("use the nnoid-mesh command for n-noids")
    else:
        raise ValueError(f"unknown surface {name!r}")
    return pot, form, pts, dom, closing, eigen, unitarizer, flags


def run_surface(name: str, cfg: dict, timer: Timer) -> int:
    pot, form, pts, dom, closing, eigen, unitarizer, flags = _surface_setup(name, cfg)
    timer.mark("setup")
    job = Job(name, {k: cfg[k] for k in ("form", "H", "q", "a", "b", "trunc", "res") if k in cfg},
              closing, eigen, flags=flags)
    job.params["form"] = form.name
    job.params["lambda0"] = pts.lam0
    job.params["lambda1"] = pts.lam1
    code = EXIT_OK
    if flags or (closing is not None and not closing.closes):
        code = EXIT_CLOSING
    if code == EXIT_OK and (cfg["out"] or cfg["report"]):
        domain = parse_domain(cfg["domain"], dom, parse_res(cfg["res"]), cfg["delta"])
        try:
            mesh = sample_surface(pot, domain, form, pts, unitarizer, cfg["trunc"], cfg["tol_ode"],
                                  cfg["pivot_tol"], cfg["keep_crossing"], _viz(cfg["viz"], form),
                                  workers=cfg["workers"])
        except BasepointError as err:
            job.flags.append(f"basepoint {err}")
            code = EXIT_BASEPOINT
        else:
            job.mesh = mesh
            timer.mark("mesh")
            if cfg["out"]:
                export_obj(mesh, cfg["out"])
                timer.mark("export")
    job.timing = dict(timer.marks)
    text = run_report(job)
    _emit(text, cfg["report"])
    return code


def _viz(v: str, form) -> str:
    if v == "stereo" or (v == "ball" and form.name != "H3"):
        return "default"
    return v


def _emit(text: str, path):
    if path and path != "-":
        _write(path, text)
    sys.stdout.write(text)


# ----------------------------------------------------------------- n-noids

def nnoid_config_text(params: NnoidParams) -> str:
    """Serialize solved n-noid parameters as ``key=value`` lines."""
    def cl(v):
        return ",".join(repr(complex(x)).strip("()") for x in v)

    lines = [f"tau = {','.join(repr(float(x)) for x in params.tau)}", f"p = {cl(params.p)}",
             f"t = {params.t!r}", f"degree = {params.degree}"]
    for k in range(params.n):
        lines.append(f"a.{k} = {cl(params.a[k])}")
        lines.append(f"b.{k} = {cl(params.b[k])}")
        lines.append(f"z.{k} = {cl(params.z[k])}")
    return "\n".join(lines) + "\n"


def nnoid_from_config_text(text: str) -> NnoidParams:
    kv = parse_config_text(text)
    tau = [float(x) for x in kv["tau"].split(",")]
    p = parse_complex_list(kv["p"])
    d = int(kv["degree"])
    n = len(tau)
    arr = {c: np.array([parse_complex_list(kv[f"{c}.{k}"]) for k in range(n)]) for c in "abz"}
    return NnoidParams(tau, p, float(kv["t"]), arr["a"], arr["b"], arr["z"], d)


def _nnoid_solve(cfg):
    tau = [float(x.real) for x in parse_complex_list(cfg["tau"])]
    p = parse_complex_list(cfg["p"])
    bc = BalanceConfig(tau, p, get_form(cfg["form"]), degree=cfg["degree"])
    params, trace = solve_nnoid(bc, cfg["t"], ode_tol=min(cfg["tol_ode"], 1e-12))
    return bc, params, trace


def run_nnoid(name: str, cfg: dict, timer: Timer) -> int:
    job = Job(name, {"tau": cfg["tau"], "p": cfg["p"], "t": cfg["t"], "degree": cfg["degree"]})
    try:
        if name == "nnoid-mesh" and cfg.get("solution") is not None:
            params = cfg["solution"]
            bc = BalanceConfig(params.tau, params.p, get_form(cfg["form"]), degree=params.degree)
            trace = None
        else:
            bc, params, trace = _nnoid_solve(cfg)
    except SolverDivergence as err:
        job.flags.append(f"divergence {err}")
        job.timing = dict(timer.marks)
        _emit(run_report(job), cfg["report"])
        return EXIT_DIVERGENCE
    timer.mark("solve")
    unit = float(np.max(np.abs(unitarity_residual(params, bc, tol=1e-12))))
    ends = end_eigenvalue_residuals(params, bc)
    job.eigen.update({f"end_{k}": float(v) for k, v in enumerate(ends)})
    job.extra["solve.unitarity_residual"] = f"{unit:.3e}"
    job.extra["solve.tau"] = ",".join(f"{x.real:.12g}" for x in params.a[:, 0])
    job.extra["solve.tau_imag_max"] = f"{np.max(np.abs(params.a[:, 0].imag)):.3e}"
    if trace is not None:
        job.extra["solve.newton_steps"] = str(sum(len(r) for r in trace.residuals))
    code = EXIT_OK
    if name == "nnoid-solve":
        if cfg["out"]:
            _write(cfg["out"], nnoid_config_text(params))
    else:
        dom = open_nnoid_domain(params, cfg["delta"])
        domain = DomainSpec("holed", parse_res(cfg["res"]), r1=dom.radius, holes=dom.holes,
                            delta=cfg["delta"], basepoint=0.0)
        pts = sym_points_for(bc.form, 0.0)
        try:
            mesh = sample_surface(nnoid_potential(params), domain, bc.form, pts, None, cfg["trunc"],
                                  cfg["tol_ode"], cfg["pivot_tol"], cfg["keep_crossing"],
                                  _viz(cfg["viz"], bc.form), workers=cfg["workers"])
        except BasepointError as err:
            job.flags.append(f"basepoint {err}")
            code = EXIT_BASEPOINT
        else:
            job.mesh = mesh
            timer.mark("mesh")
            if cfg["out"]:
                export_obj(mesh, cfg["out"])
    job.timing = dict(timer.marks)
    _emit(run_report(job), cfg["report"])
    return code


def run_check(cfg: dict, timer: Timer) -> int:
    name = cfg["surface"]
    if name == "nnoid":
        cfg = dict(cfg, out=None)
        return run_nnoid("nnoid-solve", cfg, timer)
    if cfg["form"] == FORM_DEFAULTS["check"] and name == "delaunay-ads3":
        cfg = dict(cfg, form="AdS3")
    cfg = dict(cfg, out=None, report=cfg["report"])
    pot, form, pts, dom, closing, eigen, unitarizer, flags = _surface_setup(name, cfg)
    job = Job(f"check {name}", {"form": form.name, "lambda0": pts.lam0, "lambda1": pts.lam1}, closing, eigen,
              flags=flags)
    timer.mark("check")
    job.timing = dict(timer.marks)
    _emit(run_report(job), cfg["report"])
    if flags or (closing is not None and not closing.closes):
        return EXIT_CLOSING
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return EXIT_OK
    timer = Timer()
    try:
        if args.command in ("nnoid-solve", "nnoid-mesh"):
            return run_nnoid(args.command, cfg, timer)
        if args.command == "check":
            return run_check(cfg, timer)
        return run_surface(args.command, cfg, timer)
    except ValueError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
