"""Reduced system and return map; scipy's DOP853 with event location is the oracle for the map."""
from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from carnot_sr.poincare import (CellRecord, DegenerateParamsError, ReducedParams, ReducedState, ScanConfig,
                                SectionLostError, classify, curated_params, curated_set, curve_fit_residual,
                                diameter, embed, embedding_consistency, inverse_map, orbit, poincare_map,
                                reduce, reduced_rhs, scan, seed_grid, thread_count)

MIXED = ReducedParams(-1.0, -4.0, 0.0, 0.1)
REGULAR = ReducedParams(-1.0, -4.0, 0.0, 2.0)


def scipy_map(seed, par, rtol=1e-13):
    def f(t, y):
        d = reduced_rhs(ReducedState(*y), par)
        return [d.theta, d.a, d.b]

    def hit(t, y):
        return y[0] - 2 * math.pi
    hit.terminal = True
    sol = solve_ivp(f, (0, 1e4), [0.0, *seed], method="DOP853", rtol=rtol, atol=1e-13, events=hit)
    return sol.y_events[0][0][1], sol.y_events[0][0][2], sol.t_events[0][0]


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_rhs_at_the_section_examples(m, n, p, k, x):
    par = ReducedParams(m, n, p, k)
    if par.delta == 0:
        return
    d = reduced_rhs(ReducedState(0.0, 0.0, 0.0), par)
    assert (d.theta, d.a, d.b) == (k, m, p)
    d = reduced_rhs(ReducedState(math.pi / 2, 0.0, 0.0), par)
    assert d.a == pytest.approx(p, abs=1e-15) and d.b == pytest.approx(n, abs=1e-15)


def test_degenerate_params():
    with pytest.raises(DegenerateParamsError):
        reduced_rhs(ReducedState(0, 0, 0), ReducedParams(1, 1, 1, 1))
    with pytest.raises(DegenerateParamsError):
        poincare_map((0, 0), ReducedParams(2, 2, 2, 1))


def test_embedding_matches_the_full_vertical_flow():
    rep = embedding_consistency(ReducedState(0.3, 0.5, -0.2), MIXED, T=10.0)
    assert rep["max_deviation"] <= 1e-8
    assert rep["H_drift"] <= 1e-9 and rep["casimir_drift"] <= 1e-9


def test_reduce_inverts_embed():
    s = ReducedState(0.3, 0.5, -0.2)
    s2, par = reduce(embed(s, MIXED))
    assert s2.theta == pytest.approx(0.3) and s2.a == pytest.approx(0.5) and s2.b == pytest.approx(-0.2)
    assert par.k == pytest.approx(MIXED.k, abs=1e-13) and par.m == MIXED.m


@pytest.mark.parametrize("seed", [(0.0, 0.0), (1.0, -0.5), (-2.0, 2.5)])
def test_map_against_scipy(seed):
    ours = poincare_map(seed, MIXED, tol=1e-12)
    ref = scipy_map(seed, MIXED)
    assert np.allclose(ours, ref, atol=1e-8)


def test_fast_rotation_return_time():
    a, b, T = poincare_map((0.0, 0.0), ReducedParams(1.0, 1.0, 0.0, 100.0))
    assert T == pytest.approx(2 * math.pi / 100, rel=0.1)


@pytest.mark.parametrize("tol", [1e-9, 1e-10])
def test_map_is_tolerance_consistent_and_invertible(tol):
    seed = (0.7, -1.3)
    a, b, T = poincare_map(seed, MIXED, tol=tol)
    a2, b2, _ = poincare_map(seed, MIXED, tol=tol / 10)
    assert max(abs(a - a2), abs(b - b2)) <= 10 * tol
    ai, bi, Ti = inverse_map((a, b), MIXED, tol=tol)
    assert max(abs(ai - seed[0]), abs(bi - seed[1])) <= 10 * tol
    assert Ti == pytest.approx(T, rel=1e-9) and T > 0


def test_orbit_agrees_with_iterated_map_bitwise():
    orb = orbit((0.4, 0.9), MIXED, 2)
    a1, b1, T1 = poincare_map((0.4, 0.9), MIXED)
    a2, b2, T2 = poincare_map((a1, b1), MIXED)
    assert orb.points.tolist() == [[a1, b1], [a2, b2]]
    assert orb.times.tolist() == [T1, T2]


def test_return_times_are_positive():
    orb = orbit((0.4, 0.9), MIXED, 500)
    assert len(orb) == 500 and np.all(orb.times > 0)


def test_m_p_zero_is_outside_the_chart():
    # a' = m cos + p sin vanishes identically, but then delta = m n - p^2 = 0 as well
    with pytest.raises(DegenerateParamsError):
        orbit((0.5, 0.0), ReducedParams(0.0, -2.0, 0.0, 1.0), 200)


def test_section_loss_is_reported():
    par = ReducedParams(1.0, 1.0, 0.0, 0.1)
    with pytest.raises(SectionLostError, match="section lost"):
        poincare_map((3.0, 3.0), par)
    assert orbit((3.0, 3.0), par, 10).reason == "section lost"


def test_escape_is_reported():
    orb = orbit((0.4, 0.9), MIXED, 1000, escape_radius=0.5)
    assert orb.reason == "escaped" and len(orb) < 1000


def test_regular_orbit_lies_on_a_curve():
    orb = orbit((1.0, 1.0), REGULAR, 10_000, lyapunov=True)
    c = classify(orb)
    assert c["class"] == "regular" and c["curve_residual"] < 0.01


def test_curve_residual_of_an_ellipse_and_of_noise():
    s = np.random.default_rng(0).uniform(0, 2 * np.pi, 2000)
    assert curve_fit_residual(np.stack([2 + 3 * np.cos(s), np.sin(s)], axis=1)) < 1e-3
    cloud = np.random.default_rng(1).normal(size=(2000, 2))
    assert curve_fit_residual(cloud) > 0.1


def test_diameter_matches_brute_force():
    pts = np.random.default_rng(2).normal(size=(300, 2))
    brute = max(np.linalg.norm(p - q) for p in pts for q in pts)
    assert diameter(pts) == pytest.approx(brute, rel=1e-5)


def test_short_orbits_are_not_classified():
    orb = orbit((1.0, 1.0), REGULAR, 100, lyapunov=True)
    assert classify(orb)["class"] == "unclassified"


def test_single_cell_scan_equals_orbit():
    cfg = ScanConfig(iters=1200, threads=1)
    (rec,) = scan([MIXED], [(0.5, 0.5)], cfg)
    orb = orbit((0.5, 0.5), MIXED, 1200, lyapunov=True)
    assert rec.lyapunov == orb.lyapunov and rec.n_points == len(orb)
    assert rec.klass == classify(orb)["class"]
    assert rec.mean_return_time == float(np.mean(orb.times))


def test_scan_is_permutation_invariant():
    cfg = ScanConfig(iters=1000, threads=2)
    seeds = seed_grid((-2, 2), (-2, 2), 3, 2)
    base = {r.seed: r for r in scan([MIXED], seeds, cfg)}
    shuffled = list(seeds)
    random.Random(5).shuffle(shuffled)
    for r in scan([MIXED], shuffled, cfg):
        ref = base[r.seed]
        assert (r.klass, r.lyapunov, r.curve_residual, r.mean_return_time) == \
            (ref.klass, ref.lyapunov, ref.curve_residual, ref.mean_return_time)


def test_scan_records_degenerate_cells():
    recs = scan([ReducedParams(1, 1, 1, 1), MIXED], [(0.0, 0.0)], ScanConfig(iters=1000, threads=1))
    assert [r.param_index for r in recs] == [0, 1]
    assert recs[0].klass == "lost" and recs[0].error
    assert isinstance(recs[1], CellRecord) and "class" in recs[1].to_dict()


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("CARNOT_SR_THREADS", "1")
    assert thread_count(8) == 1


def test_curated_params_are_shipped():
    data = curated_params()
    assert data["provenance"] == "DERIVED by scan"
    par, entry = curated_set("mixed")
    assert par == MIXED and set(entry["regimes"]) == {"regular", "chaotic"}
    with pytest.raises(KeyError):
        curated_set("none")
