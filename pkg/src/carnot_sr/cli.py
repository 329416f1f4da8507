"""carnot-sr: command-line entry point.

Exit codes: 0 when every requested check passes, 1 on a failed check or a
runtime failure (report on stdout), 2 on invalid usage.
"""
from __future__ import annotations

import argparse
import json
import math
import random
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from . import output

FORMATS = ("text", "json")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    options: dict = field(default_factory=dict)
    fmt: str = "text"
    seed: int = 0
    out: str | None = None


@dataclass
class Result:
    payload: dict
    ok: bool = True
    text: str | None = None


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def parse_fault(text: str):
    """'symmetric:1,2:3=2' sets the coefficient of B3 in [B1, B2] to 2 in that table."""
    try:
        table, pair, assign = text.split(":")
        i, j = (int(v) for v in pair.split(","))
        k, c = assign.split("=")
        return table, (i, j), int(k), Fraction(c)
    except ValueError as exc:
        raise UsageError(f"bad fault spec {text!r}; expected TABLE:i,j:k=c") from exc


def _corrupt(model, pair, k, c):
    consts = {key: dict(v) for key, v in model.constants.items()}
    i, j = pair
    if i > j:
        i, j, c = j, i, -c
    consts.setdefault((i, j), {})[k] = c
    return replace(model, constants=consts)


def _rand_point(rng: random.Random):
    return [Fraction(rng.randint(-9, 9), rng.randint(1, 6)) for _ in range(8)]


def group_axiom_checks(seed: int, n: int) -> list[dict]:
    from .group import IDENTITY, inverse, product

    rng = random.Random(seed)
    e = list(IDENTITY)
    out = []
    for t in range(n):
        x, y, z = _rand_point(rng), _rand_point(rng), _rand_point(rng)
        ix = inverse(x)
        checks = {
            "x.e = x": product(x, e) == x,
            "e.x = x": product(e, x) == x,
            "x.x^-1 = e": product(x, ix) == e,
            "x^-1.x = e": product(ix, x) == e,
            "(x.y).z = x.(y.z)": product(product(x, y), z) == product(x, product(y, z)),
        }
        for name, ok in checks.items():
            out.append({"check": name, "trial": t, "pass": bool(ok)})
    return out


def verification_report(seed: int = 0, random_trials: int = 100, fault: str | None = None,
                        sections: tuple[str, ...] | None = None) -> dict:
    from .group import left_translation_pushforward
    from .hall import dim_component, dim_free_nilpotent, hall_basis
    from .liepoisson import bracket_compatibility, casimir_report, verify_integral_algebra
    from .models import build_asymmetric, build_symmetric, build_symmetry, verify_symmetry, verify_table

    sym, asym = build_symmetric(), build_asymmetric()
    if fault:
        table, pair, k, c = parse_fault(fault)
        if table == "symmetric":
            sym = _corrupt(sym, pair, k, c)
        elif table == "asymmetric":
            asym = _corrupt(asym, pair, k, c)
        else:
            raise UsageError(f"unknown table {table!r}")
    builders: dict[str, Callable[[], list[dict]]] = {
        "symmetric_table": lambda: verify_table(sym),
        "asymmetric_table": lambda: verify_table(asym),
        "symmetry": lambda: verify_symmetry(build_symmetry(), sym),
        "hall_dimensions": lambda: [
            {"check": f"l2({i}) and l2^({i})", "values": [dim_component(2, i), dim_free_nilpotent(2, i)],
             "pass": len(hall_basis(i)) == dim_free_nilpotent(2, i)} for i in range(1, 7)],
        "group_axioms": lambda: group_axiom_checks(seed, random_trials),
        "left_invariance": lambda: [
            {"field": f"X{i}", "pass": left_translation_pushforward(i).is_zero()} for i in range(1, 9)],
        "casimirs": casimir_report,
        "integral_algebra": verify_integral_algebra,
        "bracket_compatibility": bracket_compatibility,
    }
    chosen = sections or tuple(builders)
    unknown = [name for name in chosen if name not in builders]
    if unknown:
        raise UsageError(f"unknown sections {unknown}; choose from {sorted(builders)}")
    report = {"seed": seed, "sections": {}, "failures": []}
    for name in chosen:
        entries = builders[name]()
        report["sections"][name] = {"count": len(entries), "passed": sum(e["pass"] for e in entries),
                                    "entries": entries}
        for e in entries:
            if not e["pass"]:
                label = e.get("pair") or e.get("bracket") or e.get("check") or e.get("field")
                report["failures"].append(f"{name} {label}")
    report["pass"] = not report["failures"]
    return report


MODEL_SECTIONS = {"symmetric": "symmetric_table", "asymmetric": "asymmetric_table", "symmetry": "symmetry"}


def cmd_verify(cfg: RunConfig) -> Result:
    o = cfg.options
    chosen = list(o.get("sections") or []) + [MODEL_SECTIONS[m] for m in o.get("model") or []]
    sections = None if o.get("all", True) else tuple(dict.fromkeys(chosen))
    rep = verification_report(cfg.seed, o.get("trials", 100), o.get("fault"), sections)
    lines = [f"{name}: {s['passed']}/{s['count']}" for name, s in rep["sections"].items()]
    lines += [f"FAIL {f}" for f in rep["failures"]]
    lines.append("PASS" if rep["pass"] else "FAIL")
    return Result(rep, rep["pass"], "\n".join(lines))


# ---------------------------------------------------------------------------
# symbolic subcommands
# ---------------------------------------------------------------------------


def cmd_hall(cfg: RunConfig) -> Result:
    from .hall import dim_free_nilpotent, gg_frame, is_weight_homogeneous, lie_closure_rank
    from .models import build_asymmetric, verify_table

    r = cfg.options["step"]
    if r < 1:
        raise UsageError("step must be >= 1")
    frame = gg_frame(r, cfg.options.get("convention", "printed"))
    payload = {
        "step": r,
        "convention": frame.convention,
        "dimension": frame.dim,
        "basis": [{"index": h.index, "degree": h.degree, "word": h.word()} for h in frame.basis],
        "P2": {f"P2_{k}": str(p) for k, p in sorted(frame.monomials.items())},
        "frame": {f"H{k}": str(f) for k, f in enumerate(frame.fields, 1)},
    }
    ok = True
    if cfg.options.get("verify"):
        checks = {
            "basis size = dim L2^(r)": frame.dim == dim_free_nilpotent(2, r),
            "Lie closure rank = N at the origin": lie_closure_rank(frame) == frame.dim,
            "weight homogeneous": is_weight_homogeneous(frame),
        }
        if r == 4 and frame.convention == "printed":
            asym = build_asymmetric()
            checks["equals the asymmetric model H1..H8"] = all(a == b for a, b in zip(frame.fields, asym.basis))
            checks["asymmetric bracket table"] = all(e["pass"] for e in verify_table(asym))
        payload["checks"] = checks
        ok = all(checks.values())
    lines = [f"L2^({r}): dimension {frame.dim} ({frame.convention} convention)"]
    lines += [f"  H{h['index']} (deg {h['degree']}) = {h['word']}" for h in payload["basis"]]
    lines += [f"  {k} = {v}" for k, v in payload["P2"].items()]
    lines += [f"  {k} = {v}" for k, v in payload["frame"].items()]
    for k, v in payload.get("checks", {}).items():
        lines.append(f"{'PASS' if v else 'FAIL'} {k}")
    return Result(payload, ok, "\n".join(lines))


EMIT_SECTIONS = ("product", "inverse", "right-frame", "hamiltonians")


def _emit(section: str) -> dict:
    from .group import derive_inverse, derive_product, hamiltonians, right_frame

    if section == "product":
        return {f"z{k}": str(c) for k, c in enumerate(derive_product().components, 1)}
    if section == "inverse":
        return {f"x{k}^-1": str(c) for k, c in enumerate(derive_inverse().components, 1)}
    if section == "right-frame":
        return {f"Y{k}": str(Y) for k, Y in enumerate(right_frame(), 1)}
    hs = hamiltonians()
    return {**{f"h{k}": str(c) for k, c in enumerate(hs.h, 1)},
            **{f"g{k}": str(c) for k, c in enumerate(hs.g, 1)}, "h0": str(hs.h0)}


def cmd_group(cfg: RunConfig) -> Result:
    from .printed import check_paper

    o = cfg.options
    payload: dict = {}
    ok = True
    lines = []
    if o.get("check_paper"):
        rep = check_paper()
        payload["published_diff"] = rep
        ok = all(e["match"] or (e["confined_to_typos"] and e["corrected_match"]) for e in rep)
        for e in rep:
            status = "match" if e["match"] else ("typo" if e["confined_to_typos"] and e["corrected_match"] else "MISMATCH")
            lines.append(f"{e['name']}: {status}")
            for m in e["mismatches"]:
                lines.append(f"    {m['monomial']}: derived {m['derived']}, printed {m['printed']}"
                             f"{' (annotated)' if m['annotated'] else ''}")
    emit = o.get("emit")
    if emit is not None or not o.get("check_paper"):
        for sec in emit or EMIT_SECTIONS:
            key = sec.replace("-", "_")
            payload[key] = _emit(sec)
            lines += [f"{k} = {v}" for k, v in payload[key].items()]
    return Result(payload, ok, "\n".join(lines))


def cmd_integrals(cfg: RunConfig) -> Result:
    from .liepoisson import homogeneous_integral_space, integrals_jacobian_rank, verify_integral_algebra

    degrees = cfg.options.get("degree") or [1, 2, 3]
    payload = {"homogeneous": {}}
    lines = []
    for k in degrees:
        if k < 1:
            raise UsageError("degree must be >= 1")
        basis = homogeneous_integral_space(k)
        payload["homogeneous"][str(k)] = {"dimension": len(basis), "basis": [str(p) for p in basis]}
        lines.append(f"degree {k}: dimension {len(basis)}")
        lines += [f"    {p}" for p in basis]
    alg = verify_integral_algebra()
    rng = random.Random(cfg.seed)
    rk = integrals_jacobian_rank([Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(16)])
    payload["algebra"] = alg
    payload["jacobian_rank"] = rk
    ok = all(e["pass"] for e in alg)
    lines.append(f"integral algebra: {sum(e['pass'] for e in alg)}/{len(alg)}")
    lines.append(f"rank d(H, g1..g8, h0) at a random point: {rk}")
    return Result(payload, ok, "\n".join(lines))


def _number(text: str):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def cmd_orbits(cfg: RunConfig) -> Result:
    from .liepoisson import DegenerateOrbitError, casimir_values, orbit_chart, orbit_dim

    h = cfg.options["h"]
    if len(h) != 8:
        raise UsageError("--h needs 8 values")
    oc = orbit_dim(h)
    payload = {"h": [str(v) for v in h], "dim": oc.dim, "case": oc.case, "delta": str(oc.delta),
               "delta1": str(oc.delta1), "delta2": str(oc.delta2),
               "casimirs": [str(v) for v in casimir_values(h)]}
    try:
        ch = orbit_chart(h)
        payload["chart"] = {"kind": ch.kind, "h3": "(h6 h5^2 - 2 h7 h4 h5 + h8 h4^2 - C) / (2 delta)"}
    except DegenerateOrbitError:
        payload["chart"] = None
    text = f"orbit dimension {oc.dim} (case {oc.case}); delta = {oc.delta}"
    return Result(payload, True, text)


# ---------------------------------------------------------------------------
# numerical subcommands
# ---------------------------------------------------------------------------


def _fmt_suffix(path: str | None) -> str | None:
    return path.rsplit(".", 1)[-1].lower() if path and "." in path else None


def cmd_integrate(cfg: RunConfig) -> Result:
    from .dynamics import integrate_normal

    o = cfg.options
    h = [float(v) for v in o["momenta"]]
    q = [float(v) for v in (o.get("position") or [0.0] * 8)]
    if len(h) != 8 or len(q) != 8:
        raise UsageError("--momenta and --position need 8 values each")
    if o["tol"] <= 0:
        raise UsageError("--tol must be positive")
    T = o["T"]
    t_eval = np.linspace(0.0, T, o["samples"]) if o.get("samples") else None
    tr = integrate_normal(np.array(h + q), T, o["tol"], t_eval=t_eval)
    drift = tr.drift()
    idrift = tr.integral_drift()
    payload = {"T": T, "tol": o["tol"], "samples": len(tr.t), "nfev": tr.nfev, "drift": drift,
               "integral_drift": idrift, "final": {"h": tr.h[-1], "x": tr.q[-1]}}
    if cfg.out:
        H, C = tr.H, tr.C
        header = ["t"] + [f"x{i}" for i in range(1, 9)] + [f"h{i}" for i in range(1, 9)] + ["H", "C", "dH", "dC"]
        rows = (np.concatenate([[t], x, hh, [a, c, a - H[0], c - C[0]]])
                for t, x, hh, a, c in zip(tr.t, tr.q, tr.h, H, C))
        output.atomic_write(cfg.out, output.to_csv(header, rows))
        payload["out"] = cfg.out
    text = "\n".join([f"integrated to T = {T} with {len(tr.t)} samples"]
                     + [f"  drift {k}: {v:.3e}" for k, v in drift.items()]
                     + [f"  drift {k}: {v:.3e}" for k, v in idrift.items()])
    return Result(payload, True, text)


def cmd_abnormal(cfg: RunConfig) -> Result:
    from .dynamics import conic_fit, integrate_abnormal

    o = cfg.options
    h = (0.0, 0.0, 0.0, o["h4"], o["h5"], o["h6"], o["h7"], o["h8"])
    tr = integrate_abnormal(h, T=o["T"], n_samples=o["samples"])
    fit = conic_fit(tr.q[:, :2])
    payload = {"class": tr.klass.to_dict(), "fit": {"kind": fit.kind, "residual": fit.residual,
                                                    "discriminant": fit.discriminant},
               "variety_residual": tr.variety_residual()}
    suffix = _fmt_suffix(cfg.out)
    if suffix == "svg":
        output.atomic_write(cfg.out, output.svg_polylines([tr.q[:, :2]], f"abnormal {tr.klass.case}"))
    elif suffix:
        header = ["t"] + [f"x{i}" for i in range(1, 9)] + ["h4", "h5"]
        rows = (np.concatenate([[t], x, hh[3:5]]) for t, x, hh in zip(tr.t, tr.q, tr.h))
        output.atomic_write(cfg.out, output.to_csv(header, rows))
    text = (f"case {tr.klass.case} (delta = {tr.klass.delta}); predicted {tr.klass.projection}; "
            f"fitted {fit.kind} with residual {fit.residual:.2e}")
    return Result(payload, True, text)


def project_momenta(case: str, o: dict) -> list[float]:
    th = o.get("theta", 0.0)
    h = [math.cos(th), math.sin(th)] + [0.0] * 6
    if case in ("heisenberg", "cartan"):
        h[2] = o.get("h3", 2.0 if case == "heisenberg" else 0.4)
    if case == "cartan":
        h[3], h[4] = o.get("h4", 0.8), o.get("h5", -0.5)
    return h


def cmd_project(cfg: RunConfig) -> Result:
    from .dynamics import VanishingPatternError, integrate_normal, project_check

    o = cfg.options
    case = o["case"]
    h = project_momenta(case, o)
    T = o.get("T") or (2 * math.pi / abs(h[2]) if case == "heisenberg" else 20.0)
    tr = integrate_normal(np.array(h + [0.0] * 8), T, o["tol"], t_eval=np.linspace(0.0, T, o["samples"]))
    try:
        rep = project_check(tr, case)
    except VanishingPatternError as exc:
        raise UsageError(str(exc)) from exc
    payload = rep.to_dict()
    payload["momenta"] = h
    if cfg.out:
        output.atomic_write(cfg.out, output.svg_polylines([tr.q[:, :2]], f"{case} projection"))
        payload["out"] = cfg.out
    lines = [f"{case}: {'PASS' if rep.passed else 'FAIL'}"]
    lines += [f"  {k}: {v['value']:.3e} (limit {v['limit']:.0e})" for k, v in rep.checks.items()]
    lines.append(f"  cut time lower bound: {rep.cut_time_lower_bound}")
    return Result(payload, rep.passed, "\n".join(lines))


def cmd_poincare(cfg: RunConfig) -> Result:
    from .poincare import DegenerateParamsError, ReducedParams, classify, orbit

    o = cfg.options
    par = ReducedParams(o["m"], o["n"], o["p"], o["k"])
    try:
        orb = orbit((o["a0"], o["b0"]), par, o["iters"], o["tol"], o["escape"], lyapunov=o.get("lyapunov", False))
    except DegenerateParamsError as exc:
        raise UsageError(str(exc)) from exc
    c = classify(orb)
    payload = {"params": vars(par), "seed": orb.seed, "points": len(orb), "reason": orb.reason, **c,
               "mean_return_time": float(np.mean(orb.times)) if len(orb) else None}
    suffix = _fmt_suffix(cfg.out)
    if suffix == "svg":
        if not len(orb):
            raise RuntimeError("no points to plot")
        output.atomic_write(cfg.out, output.svg_scatter(orb.points, "Poincare orbit"))
    elif suffix:
        rows = ([i, a, b, t] for i, ((a, b), t) in enumerate(zip(orb.points, orb.times), 1))
        output.atomic_write(cfg.out, output.to_csv(["i", "a", "b", "T"], rows))
    text = f"{len(orb)} returns ({orb.reason}); class {c['class']}; lyapunov {c['lyapunov']}"
    return Result(payload, orb.reason == "ok", text)


def load_grid(path: str):
    from .poincare import ReducedParams, ScanConfig, seed_grid

    with open(path, encoding="utf-8") as fh:
        grid = json.load(fh)
    grid = grid.get("scan", grid)
    pars = [ReducedParams(*p) if isinstance(p, list) else ReducedParams(p["m"], p["n"], p["p"], p["k"])
            for p in grid["params"]]
    seeds = grid["seeds"]
    if isinstance(seeds, dict):
        a, b = seeds["a"], seeds["b"]
        seeds = seed_grid(a[:2], b[:2], int(a[2]), int(b[2]))
    cfg = ScanConfig(**{k: grid[k] for k in ("iters", "tol", "escape_radius", "d0", "transient") if k in grid})
    return pars, seeds, cfg


def cmd_scan(cfg: RunConfig) -> Result:
    from .poincare import scan

    try:
        pars, seeds, scfg = load_grid(cfg.options["grid"])
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad grid file: {exc}") from exc
    if cfg.options.get("threads"):
        scfg.threads = cfg.options["threads"]
    recs = scan(pars, seeds, scfg)
    counts: dict[str, int] = {}
    for r in recs:
        counts[r.klass] = counts.get(r.klass, 0) + 1
    payload = {"cells": [r.to_dict() for r in recs], "counts": counts,
               "config": {"iters": scfg.iters, "tol": scfg.tol, "escape_radius": scfg.escape_radius}}
    if cfg.out:
        output.atomic_write(cfg.out, output.to_json(payload))
    text = f"{len(recs)} cells: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items()))
    return Result(payload, True, text)


COMMANDS = {
    "verify": cmd_verify, "hall": cmd_hall, "group": cmd_group, "integrals": cmd_integrals,
    "orbits": cmd_orbits, "integrate": cmd_integrate, "abnormal": cmd_abnormal,
    "project": cmd_project, "poincare": cmd_poincare, "scan": cmd_scan,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carnot-sr", description="Sub-Riemannian geometry of the free nilpotent "
                                 "Lie algebra with growth vector (2, 3, 5, 8).")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--format", choices=FORMATS, default="text", help="stdout format")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized exact checks")
        return p

    p = add("verify", "run the exact verification suites")
    p.add_argument("--all", action="store_true", help="all suites (default)")
    p.add_argument("--sections", nargs="+", default=None, help="restrict to these suites")
    p.add_argument("--model", nargs="+", choices=sorted(MODEL_SECTIONS), default=None,
                   help="restrict to the bracket checks of these models")
    p.add_argument("--trials", type=int, default=100, help="random rational triples for the group axioms")
    p.add_argument("--inject-fault", dest="fault", default=None, metavar="TABLE:i,j:k=c",
                   help="corrupt one structure constant before verifying")
    p.add_argument("--out", default=None, help="write the JSON report here")

    p = add("hall", "Hall basis and polynomial frame of the free nilpotent algebra of a given step")
    p.add_argument("--step", type=int, required=True)
    p.add_argument("--convention", choices=("printed", "literal"), default="printed")
    p.add_argument("--verify", action="store_true")

    p = add("group", "derived group law, inverse, right frame and Hamiltonians")
    p.add_argument("--emit", nargs="*", choices=EMIT_SECTIONS, default=None,
                   help="print these derived formulas (all when given without a value)")
    p.add_argument("--check-paper", dest="check_paper", action="store_true",
                   help="diff the derived formulas against the published ones")
    p.add_argument("--out", default=None, help="write the JSON payload here")

    p = add("integrals", "polynomial integrals of the vertical flow and the integral algebra on T*G")
    p.add_argument("--degree", type=int, nargs="+", default=None)

    p = add("orbits", "co-adjoint orbit through a covector")
    p.add_argument("--point", "--h", dest="h", type=_number, nargs=8, required=True, metavar="hi",
                   help="covector h1..h8; rationals such as 1/2 are kept exact")

    p = add("integrate", "integrate a normal extremal")
    p.add_argument("--momenta", type=float, nargs=8, required=True, metavar="hi")
    p.add_argument("--position", type=float, nargs=8, default=None, metavar="xi")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--samples", type=int, default=None, help="equispaced output samples")
    p.add_argument("--out", default=None, help="CSV trajectory")

    p = add("abnormal", "classify and integrate an abnormal extremal")
    for name in ("h4", "h5", "h6", "h7", "h8"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--T", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--out", default=None, help="CSV or SVG (by extension)")

    p = add("project", "projection checks for the plane, Heisenberg and Cartan cases")
    p.add_argument("--case", choices=("plane", "heisenberg", "cartan"), required=True)
    p.add_argument("--theta", type=float, default=0.0, help="initial angle of (h1, h2)")
    p.add_argument("--h3", type=float, default=None)
    p.add_argument("--h4", type=float, default=None)
    p.add_argument("--h5", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--out", default=None, help="SVG of the (x1, x2) curve")

    p = add("poincare", "orbit of the Poincare return map of the reduced system")
    for name in ("m", "n", "p", "k"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--b0", type=float, default=0.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--escape", type=float, default=1e3)
    p.add_argument("--lyapunov", action="store_true")
    p.add_argument("--out", default=None, help="CSV (i, a, b, T) or SVG scatter")

    p = add("scan", "parallel regime scan over a parameter and seed grid")
    p.add_argument("--grid", required=True, help="JSON grid file")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="JSON records")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "format", "seed", "out")}
    if ns.subcommand == "verify":
        opts["all"] = ns.all or not (ns.sections or ns.model)
    for key in ("h3", "h4", "h5", "T"):
        if ns.subcommand == "project" and opts.get(key) is None:
            opts.pop(key, None)
    return RunConfig(ns.subcommand, opts, ns.format, ns.seed, getattr(ns, "out", None))


def run(cfg: RunConfig) -> tuple[int, str]:
    try:
        res = COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        return 2, output.to_json({"error": str(exc), "usage": True})
    except ValueError as exc:
        return 2, output.to_json({"error": str(exc), "usage": True})
    except RuntimeError as exc:
        return 1, output.to_json({"error": str(exc)})
    if cfg.out and cfg.subcommand in ("verify", "group"):
        output.atomic_write(cfg.out, output.to_json(res.payload))
    if cfg.fmt == "json" or (not res.ok and res.text is None):
        text = output.to_json({**res.payload, "pass": res.ok})
    elif not res.ok and cfg.subcommand == "verify":
        text = res.text + "\n" + output.to_json({"failures": res.payload["failures"]})
    else:
        text = (res.text or "") + "\n"
    return (0 if res.ok else 1), text


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    code, text = run(config_from_args(ns))
    stream = sys.stdout if code != 2 else sys.stderr
    stream.write(text)
    stream.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
