"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one line ``criterion N: PASS|FAIL  <details>`` to the
terminal (outside pytest's capture) before asserting.
"""
from __future__ import annotations

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from carnot_sr import ode
from carnot_sr.dynamics import (classify_abnormal, conic_fit, integrate_abnormal, integrate_normal, project_check,
                                time_reversal_error, vertical_rhs_array)
from carnot_sr.group import IDENTITY, composed_flow, hamiltonians, inverse, product
from carnot_sr.hall import dim_component, dim_free_nilpotent
from carnot_sr.liepoisson import (casimir_report, homogeneous_integral_space, hvar, orbit_chart, orbit_dim,
                                  span_equal, verify_integral_algebra)
from carnot_sr.models import build_asymmetric, build_symmetric, build_symmetry, verify_symmetry, verify_table
from carnot_sr.poincare import (ReducedState, curated_scan, embedding_consistency, inverse_map,
                                lyapunov_estimate, poincare_map, scan)
from carnot_sr.printed import check_paper

# Published dimension table, i = 1..10
TABLE_L2 = [2, 1, 2, 3, 6, 9, 18, 30, 56, 99]
TABLE_L2_CUMULATIVE = [2, 3, 5, 8, 14, 23, 41, 71, 127, 226]

GENERIC_H = np.array([0.6, 0.8, 0.3, 0.2, -0.1, 0.5, 0.1, -0.3])


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, details: str):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {details}")
    return emit


def test_criterion_01_bracket_tables(report):
    t0 = time.perf_counter()
    sym = verify_table(build_symmetric())
    asym = verify_table(build_asymmetric())
    x0 = verify_symmetry(build_symmetry(), build_symmetric())
    elapsed = time.perf_counter() - t0
    x0_rel = [e for e in x0 if e["pair"] != [0, 0]]
    ok = (len(sym) == len(asym) == 28 and len(x0_rel) == 8 and all(e["pass"] for e in sym + asym + x0)
          and elapsed < 10)
    report(1, ok, f"symmetric {sum(e['pass'] for e in sym)}/28, asymmetric {sum(e['pass'] for e in asym)}/28, "
                  f"X0 relations {sum(e['pass'] for e in x0_rel)}/8, {elapsed:.2f}s")
    assert ok


def test_criterion_02_dimension_table(report):
    got = [(dim_component(2, i), dim_free_nilpotent(2, i)) for i in range(1, 11)]
    ok = got == list(zip(TABLE_L2, TABLE_L2_CUMULATIVE))
    report(2, ok, f"{sum(a == b for a, b in zip(got, zip(TABLE_L2, TABLE_L2_CUMULATIVE)))}/10 columns (20 entries)")
    assert ok


def test_criterion_03_group_law(report):
    rng = random.Random(2024)

    def pt():
        return [Fraction(rng.randint(-9, 9), rng.randint(1, 6)) for _ in range(8)]

    e = list(IDENTITY)
    axioms = True
    for _ in range(100):
        x, y, z = pt(), pt(), pt()
        ix = inverse(x)
        axioms &= product(x, e) == x and product(e, x) == x
        axioms &= product(x, ix) == e and product(ix, x) == e
        axioms &= product(product(x, y), z) == product(x, product(y, z))

    F = composed_flow()
    oracle = all(F(x + t) == product(x, F([0] * 8 + t)) for x, t in ((pt(), pt()) for _ in range(100)))

    diff = {d["name"]: d for d in check_paper()}
    term_for_term = {n: diff[n]["match"] for n in ("z3", "z4", "z5", "z6")}
    confined = {n: diff[n]["match"] or (diff[n]["confined_to_typos"] and diff[n]["corrected_match"])
                for n in ("z7", "z8", "g1")}
    ok = axioms and oracle and all(term_for_term.values()) and all(confined.values())
    mism = ", ".join(f"{n} ({len(diff[n]['mismatches'])} terms)" for n, v in term_for_term.items() if not v)
    report(3, ok, f"axioms at 100 triples {'exact' if axioms else 'FAILED'}; flow-composition oracle "
                  f"{'exact' if oracle else 'FAILED'}; z3-z6 term-for-term mismatches: {mism or 'none'}; "
                  f"z7/z8/g1 confined to annotated typos: {all(confined.values())}")
    assert axioms and oracle and all(confined.values())
    assert all(term_for_term.values()), f"printed formulas differ term-for-term: {mism}"


def test_criterion_04_casimirs_and_integral_algebra(report):
    cas = casimir_report()
    alg = verify_integral_algebra()
    hs = hamiltonians()
    from carnot_sr.group import XPSI
    rng = random.Random(4)
    point = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in XPSI]
    from carnot_sr.polyalg import rank
    A = [hs.H, *hs.g[2:]]
    rk = rank([[f.diff(v).eval(point) for v in XPSI] for f in A])
    ok = all(e["pass"] for e in cas + alg) and len(cas) == 32 and rk == 7
    report(4, ok, f"Casimir brackets {sum(e['pass'] for e in cas)}/32, integral algebra "
                  f"{sum(e['pass'] for e in alg)}/{len(alg)}, rank of span(H, g3..g8) = {rk}")
    assert ok


def test_criterion_05_homogeneous_integrals(report):
    homogeneous_integral_space.cache_clear()
    t0 = time.perf_counter()
    dims = [len(homogeneous_integral_space(k)) for k in (1, 2, 3)]
    elapsed = time.perf_counter() - t0
    top = span_equal(homogeneous_integral_space(1), [hvar(6), hvar(7), hvar(8)])
    ok = dims == [3, 7, 14] and top and elapsed < 60
    report(5, ok, f"dimensions {dims}, k=1 basis = span(h6, h7, h8): {top}, {elapsed:.1f}s")
    assert ok


def test_criterion_06_orbits(report):
    reps = {(0, 0, 0, 0, 0, 1, 0, 1): 4, (0, 0, 1, 0, 0, 0, 0, 0): 2, (1, 2, 0, 0, 0, 0, 0, 0): 0}
    dims_ok = all(orbit_dim([Fraction(v) for v in h]).dim == d for h, d in reps.items())
    rng = np.random.default_rng(6)
    even = all(orbit_dim(list(h)).dim % 2 == 0 for h in rng.normal(scale=2.0, size=(10_000, 8)))
    h0 = GENERIC_H
    chart = orbit_chart(list(h0))
    ts = np.linspace(0.0, 50.0, 501)
    sol = ode.solve(vertical_rhs_array, 0.0, h0, 50.0, tol=1e-12, t_eval=ts)
    res = max(chart.residual(h) for h in sol.y_out)
    ok = dims_ok and even and res <= 1e-9
    report(6, ok, f"representatives 4/2/0: {dims_ok}; rank even at 10^4 points: {even}; "
                  f"chart residual over T=50: {res:.2e}")
    assert ok


def test_criterion_07_conservation(report):
    tr = integrate_normal(np.concatenate([GENERIC_H, np.zeros(8)]), 100.0, tol=1e-10)
    drift = tr.drift()
    idrift = tr.integral_drift()
    rev = time_reversal_error(np.concatenate([GENERIC_H, np.zeros(8)]), 100.0, tol=1e-10)
    ok = max(drift.values()) <= 1e-9 and max(idrift.values()) <= 1e-7 and rev <= 1e-7
    report(7, ok, f"max drift H/h6/h7/h8/C {max(drift.values()):.2e}, g1..g8/h0 {max(idrift.values()):.2e}, "
                  f"time reversal {rev:.2e}")
    assert ok


def test_criterion_08_projections(report):
    cases = {
        "plane": ([0.6, 0.8, 0, 0, 0, 0, 0, 0], 10.0),
        "heisenberg": ([1, 0, 1.5, 0, 0, 0, 0, 0], 2 * math.pi / 1.5),
        "cartan": ([1, 0, 0.4, 0.8, -0.5, 0, 0, 0], 20.0),
    }
    reps = {}
    for case, (h, T) in cases.items():
        tr = integrate_normal(np.array(h + [0.0] * 8, dtype=float), T, t_eval=np.linspace(0, T, 2001))
        reps[case] = project_check(tr, case)
    ok = all(r.passed for r in reps.values())
    report(8, ok, "; ".join(f"{c}: " + ", ".join(f"{k} {v['value']:.1e}" for k, v in r.checks.items())
                            for c, r in reps.items()))
    assert ok


def test_criterion_09_abnormal(report):
    cases = {
        "center": ((1.0, 0.0, 1.0), "ellipse"),
        "saddle": ((1.0, 0.0, -1.0), "hyperbola"),
        "lines": ((1.0, 1.0, 1.0), "parabola"),
    }
    results = {}
    for case, (h678, curve) in cases.items():
        tr = integrate_abnormal((0.0, 0.0, 0.0, 1.0, 0.5, *h678), T=3.0)
        fit = conic_fit(tr.q[:, :2])
        results[case] = (tr.klass.case == case and fit.kind == curve and fit.residual <= 1e-8, fit)
    # D = 0: the momentum is stationary and the planar curve is traversed at constant velocity
    tr = integrate_abnormal((0.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 0.0), T=3.0)
    stationary = bool(np.all(tr.h == tr.h[0])) and classify_abnormal(tr.h[0]).case == "fixed"
    fit = conic_fit(tr.q[:, :2])
    results["fixed"] = (stationary and fit.kind == "line" and fit.residual <= 1e-8, fit)
    ok = all(v[0] for v in results.values())
    report(9, ok, "; ".join(f"{c}: {f.kind} residual {f.residual:.1e}" for c, (_, f) in results.items()))
    assert ok


@pytest.mark.slow
def test_criterion_10_poincare(report):
    pars, seeds, cfg = curated_scan()
    par = pars[0]
    emb = embedding_consistency(ReducedState(0.3, 0.5, -0.2), par, T=10.0)
    tol = cfg.tol
    a, b, _ = poincare_map((0.7, -1.3), par, tol)
    a2, b2, _ = poincare_map((0.7, -1.3), par, tol / 10)
    ai, bi, _ = inverse_map((a, b), par, tol)
    refine = max(abs(a - a2), abs(b - b2))
    back = max(abs(ai - 0.7), abs(bi + 1.3))

    t0 = time.perf_counter()
    recs = scan(pars, seeds, cfg)
    elapsed = time.perf_counter() - t0
    regular = [r for r in recs if r.klass == "regular" and r.n_points >= 10_000 and r.curve_residual < 0.01]
    chaotic = [r for r in recs if r.klass == "chaotic" and r.lyapunov > 1e-3]
    stab = None
    if chaotic:
        # first chaotic cell in grid order, followed for 10x the scan length
        seed = chaotic[0].seed
        l1 = lyapunov_estimate(seed, par, 100_000, tol)
        l2 = lyapunov_estimate(seed, par, 100_000, tol / 10)
        stab = abs(l1 - l2) / l1
    ok = (emb["max_deviation"] <= 1e-8 and refine <= 10 * tol and back <= 10 * tol and regular and chaotic
          and stab is not None and stab < 0.05 and elapsed < 600)
    report(10, ok, f"embedding {emb['max_deviation']:.1e}; tol/10 shift {refine:.1e}, inverse {back:.1e}; "
                   f"scan {len(recs)} cells in {elapsed:.0f}s: {len(regular)} regular, {len(chaotic)} chaotic; "
                   f"lyapunov {l1 if chaotic else float('nan'):.4f} vs {l2 if chaotic else float('nan'):.4f} "
                   f"under tol/10 ({100 * (stab or 0):.2f}%)")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
