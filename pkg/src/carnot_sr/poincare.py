"""Reduced system on a generic 4-dimensional co-adjoint orbit and its return map.

On the level set H = 1/2 with the Casimirs fixed, the vertical flow reduces to

    theta' = (2 p a b - n a^2 - m b^2) / (2 delta) + k
    a'     = m cos(theta) + p sin(theta)
    b'     = p cos(theta) + n sin(theta),          delta = m n - p^2.

It sits inside L* through

    h = (cos theta, sin theta, theta', -a, -b, -m, -p, -n),   k = -C / (2 delta),

the only sign choice under which theta'' agrees with h3' = h1 h4 + h2 h5.

The Poincare map sends (a, b) on the section theta = 0 to the state at the
first return theta = 2 pi.  Integration, crossing location and Lyapunov
bookkeeping run in a compiled kernel.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Iterable, Sequence

import numba as nb
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop853
from scipy.spatial import ConvexHull, QhullError

from . import ode
from .liepoisson import casimir_values

TWO_PI = 2.0 * math.pi
THETA_TOL = 1e-12
DEFAULT_TOL = 1e-10
ESCAPE_RADIUS = 1e3
MAX_RETURN_TIME = 1e4
LYAPUNOV_D0 = 1e-7
LYAPUNOV_TRANSIENT = 0.1
CHAOS_THRESHOLD = 1e-3
CURVE_THRESHOLD = 0.01

OK, SECTION_LOST, UNDERFLOW, NONFINITE, TIME_LIMIT, ESCAPED = range(6)
STATUS = {OK: "ok", SECTION_LOST: "section lost", UNDERFLOW: "stiffness/blowup",
          NONFINITE: "non-finite state", TIME_LIMIT: "no return within max time", ESCAPED: "escaped"}


class DegenerateParamsError(ValueError):
    pass


class SectionLostError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReducedParams:
    m: float
    n: float
    p: float
    k: float

    @property
    def delta(self) -> float:
        return self.m * self.n - self.p * self.p

    def check(self):
        if self.delta == 0:
            raise DegenerateParamsError("delta = m n - p^2 = 0: the reduced chart is undefined")

    def as_array(self) -> np.ndarray:
        return np.array([self.m, self.n, self.p, self.k, 2.0 * self.delta])

    @classmethod
    def from_momentum(cls, h: Sequence[float]) -> "ReducedParams":
        h6, h7, h8, C = casimir_values(h)
        m, p, n = -h6, -h7, -h8
        delta = m * n - p * p
        if delta == 0:
            raise DegenerateParamsError("delta = 0")
        return cls(m, n, p, -C / (2 * delta))


@dataclass(frozen=True)
class ReducedState:
    theta: float
    a: float
    b: float


def reduced_rhs(s: ReducedState, par: ReducedParams) -> ReducedState:
    par.check()
    m, n, p, k = par.m, par.n, par.p, par.k
    th, a, b = s.theta, s.a, s.b
    return ReducedState((2 * p * a * b - n * a * a - m * b * b) / (2 * par.delta) + k,
                        m * math.cos(th) + p * math.sin(th),
                        p * math.cos(th) + n * math.sin(th))


def embed(s: ReducedState, par: ReducedParams) -> np.ndarray:
    """The point of L* carried by (theta, a, b) on the orbit with parameters par."""
    thd = reduced_rhs(s, par).theta
    return np.array([math.cos(s.theta), math.sin(s.theta), thd, -s.a, -s.b, -par.m, -par.p, -par.n])


def reduce(h: Sequence[float]) -> tuple[ReducedState, ReducedParams]:
    """Inverse of :func:`embed` on H = 1/2."""
    par = ReducedParams.from_momentum(h)
    return ReducedState(math.atan2(h[1], h[0]), -h[3], -h[4]), par


# ---------------------------------------------------------------------------
# compiled kernel
# ---------------------------------------------------------------------------

# Dormand-Prince 8(5,3) coefficients, as tabulated by scipy
_A = np.ascontiguousarray(_dop853.A[:_dop853.N_STAGES, :_dop853.N_STAGES])
_B = np.ascontiguousarray(_dop853.B)
_E3 = np.ascontiguousarray(_dop853.E3)
_E5 = np.ascontiguousarray(_dop853.E5)
_NS = _dop853.N_STAGES
_EXP = 1.0 / 8.0


@nb.njit(cache=True, nogil=True)
def _rhs(y, par, out):
    m, n, p, k, two_delta = par[0], par[1], par[2], par[3], par[4]
    th, a, b = y[0], y[1], y[2]
    c, s = math.cos(th), math.sin(th)
    out[0] = (2.0 * p * a * b - n * a * a - m * b * b) / two_delta + k
    out[1] = m * c + p * s
    out[2] = p * c + n * s


@nb.njit(cache=True, nogil=True)
def _rk_step(y, h, par, K, ynew, tmp):
    """One DOP853 step. K[0] holds f(y) on entry; K[12] holds f(ynew) on exit.

    Returns the max-norm of the blended 5th/3rd-order local error estimate.
    """
    for i in range(1, _NS):
        for j in range(3):
            acc = 0.0
            for l in range(i):
                acc += _A[i, l] * K[l, j]
            tmp[j] = y[j] + h * acc
        _rhs(tmp, par, K[i])
    for j in range(3):
        acc = 0.0
        for l in range(_NS):
            acc += _B[l] * K[l, j]
        ynew[j] = y[j] + h * acc
    _rhs(ynew, par, K[_NS])
    err = 0.0
    for j in range(3):
        e5 = 0.0
        e3 = 0.0
        for l in range(_NS + 1):
            e5 += _E5[l] * K[l, j]
            e3 += _E3[l] * K[l, j]
        den = math.hypot(e5, 0.1 * e3)
        e = abs(h) * e5 * e5 / den if den > 0.0 else 0.0
        if e > err:
            err = e
    return err


@nb.njit(cache=True, nogil=True)
def _hermite(s, h, y0, y1, f0, f1):
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)


@nb.njit(cache=True, nogil=True)
def _to_section(y, par, tol, direction, target, max_time, out):
    """Flow (theta, a, b) in the given time direction until theta reaches target.

    theta' > 0 must hold throughout.  On success ``out`` holds (theta, a, b, |t|).
    """
    K = np.empty((_NS + 1, 3))
    ynew = np.empty(3)
    tmp = np.empty(3)
    yc = np.empty(3)
    Kc = np.empty((_NS + 1, 3))
    _rhs(y, par, K[0])
    if not K[0, 0] > 0.0:
        return SECTION_LOST
    fmax = max(abs(K[0, 0]), abs(K[0, 1]), abs(K[0, 2]))
    h = min(0.1, tol ** _EXP / fmax)
    h_min = 1e-12 * min(TWO_PI / K[0, 0], max_time)
    t = 0.0
    err_prev = 1.0
    while True:
        if t > max_time:
            return TIME_LIMIT
        if h < h_min:
            return UNDERFLOW
        err = _rk_step(y, direction * h, par, K, ynew, tmp)
        if not math.isfinite(err) or not math.isfinite(ynew[0]):
            h *= 0.25
            continue
        en = err / tol
        if en > 1.0:
            h *= max(0.2, 0.9 * en ** -_EXP)
            continue
        for i in range(1, _NS + 1):
            if not K[i, 0] > 0.0:
                return SECTION_LOST
        if direction * (ynew[0] - target) >= 0.0:
            break
        en = max(en, 1e-10)
        fac = 0.9 * en ** (-0.7 * _EXP) * err_prev ** (0.4 * _EXP)
        err_prev = en
        for j in range(3):
            y[j] = ynew[j]
            K[0, j] = K[_NS, j]
        t += h
        h *= min(5.0, max(0.2, fac))
    # the crossing lies in (t, t + h): locate it on the Hermite interpolant of theta
    th0, th1, f0, f1 = y[0], ynew[0], K[0, 0], K[_NS, 0]
    sh = direction * h
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if direction * (_hermite(mid, sh, th0, th1, f0, f1) - target) >= 0.0:
            hi = mid
        else:
            lo = mid
    s_star = 0.5 * (lo + hi)
    # a true integrator step to the estimate, then Newton steps in time
    for j in range(3):
        Kc[0, j] = K[0, j]
    _rk_step(y, s_star * sh, par, Kc, yc, tmp)
    tc = t + s_star * h
    for _ in range(20):
        _rhs(yc, par, Kc[0])
        gap = target - yc[0]
        if abs(gap) <= THETA_TOL:
            break
        dt = gap / Kc[0, 0]
        for j in range(3):
            y[j] = yc[j]
        _rk_step(y, dt, par, Kc, yc, tmp)
        tc += direction * dt
    if not (abs(target - yc[0]) <= THETA_TOL):
        return UNDERFLOW
    out[0], out[1], out[2], out[3] = yc[0], yc[1], yc[2], tc
    return OK


@nb.njit(cache=True, nogil=True)
def _map(a, b, par, tol, max_time, out):
    y = np.empty(3)
    y[0], y[1], y[2] = 0.0, a, b
    return _to_section(y, par, tol, 1.0, TWO_PI, max_time, out)


@nb.njit(cache=True, nogil=True)
def _orbit_kernel(a0, b0, par, tol, iters, escape, max_time, d0, transient, pts, times):
    """Iterate the map; with d0 > 0 also run a Benettin neighbour.

    Stretch factors are summed only after the first ``transient`` returns.
    Returns (points recorded, status, sum of log stretch factors, renormalizations).
    """
    out = np.empty(4)
    nout = np.empty(4)
    a, b = a0, b0
    an, bn = a0 + d0, b0
    lsum = 0.0
    nren = 0
    for i in range(iters):
        st = _map(a, b, par, tol, max_time, out)
        if st != OK:
            return i, st, lsum, nren
        a, b = out[1], out[2]
        pts[i, 0], pts[i, 1] = a, b
        times[i] = out[3]
        if math.hypot(a, b) > escape:
            return i + 1, ESCAPED, lsum, nren
        if d0 > 0.0:
            st = _map(an, bn, par, tol, max_time, nout)
            if st != OK:
                return i + 1, st, lsum, nren
            da, db = nout[1] - a, nout[2] - b
            dist = math.hypot(da, db)
            if dist == 0.0:
                da, db, dist = d0, 0.0, d0
            if i >= transient:
                lsum += math.log(dist / d0)
                nren += 1
            an, bn = a + d0 * da / dist, b + d0 * db / dist
    return iters, OK, lsum, nren


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _params(par: ReducedParams) -> np.ndarray:
    par.check()
    return par.as_array()


def poincare_map(seed: Sequence[float], par: ReducedParams, tol: float = DEFAULT_TOL,
                 max_time: float = MAX_RETURN_TIME) -> tuple[float, float, float]:
    """(a, b) -> (a', b', T): first return of theta from 0 to 2 pi."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    out = np.empty(4)
    st = _map(float(seed[0]), float(seed[1]), _params(par), tol, max_time, out)
    if st == SECTION_LOST:
        raise SectionLostError("section lost: map undefined for this seed")
    if st != OK:
        raise SectionLostError(f"section lost: {STATUS[st]}")
    return float(out[1]), float(out[2]), float(out[3])


def inverse_map(image: Sequence[float], par: ReducedParams, tol: float = DEFAULT_TOL,
                max_time: float = MAX_RETURN_TIME) -> tuple[float, float, float]:
    """Integrate backwards from (2 pi, a', b') to theta = 0."""
    out = np.empty(4)
    y = np.array([TWO_PI, float(image[0]), float(image[1])])
    st = _to_section(y, _params(par), tol, -1.0, 0.0, max_time, out)
    if st != OK:
        raise SectionLostError(f"section lost: {STATUS[st]}")
    return float(out[1]), float(out[2]), float(out[3])


@dataclass
class PoincareOrbit:
    params: ReducedParams
    seed: tuple[float, float]
    points: np.ndarray  # (N, 2)
    times: np.ndarray  # (N,)
    reason: str = "ok"
    lyapunov: float | None = None

    def __len__(self):
        return len(self.times)


def orbit(seed: Sequence[float], par: ReducedParams, iters: int, tol: float = DEFAULT_TOL,
          escape_radius: float = ESCAPE_RADIUS, lyapunov: bool = False, d0: float = LYAPUNOV_D0,
          transient: float = LYAPUNOV_TRANSIENT, max_time: float = MAX_RETURN_TIME) -> PoincareOrbit:
    """Iterate the map from seed; stops early on section loss or escape.

    With ``lyapunov=True`` a Benettin neighbour at distance d0 is carried along
    and renormalized after every return; the estimate is in units of 1/return.
    The first ``transient`` fraction of returns only aligns the separation
    vector: on an invariant curve the shear alone makes the running sum grow
    like log N, which would otherwise dominate at desk-scale N.
    """
    pts = np.empty((iters, 2))
    times = np.empty(iters)
    n, st, lsum, nren = _orbit_kernel(float(seed[0]), float(seed[1]), _params(par), tol, iters,
                                      escape_radius, max_time, d0 if lyapunov else 0.0,
                                      int(transient * iters), pts, times)
    lyap = lsum / nren if lyapunov and nren else None
    return PoincareOrbit(par, (float(seed[0]), float(seed[1])), pts[:n].copy(), times[:n].copy(),
                         STATUS[st], lyap)


def lyapunov_estimate(seed: Sequence[float], par: ReducedParams, iters: int, tol: float = DEFAULT_TOL,
                      d0: float = LYAPUNOV_D0, transient: float = LYAPUNOV_TRANSIENT) -> float:
    orb = orbit(seed, par, iters, tol, lyapunov=True, d0=d0, transient=transient)
    if orb.reason != "ok":
        raise SectionLostError(orb.reason)
    return orb.lyapunov


def diameter(points: np.ndarray, directions: int = 1024) -> float:
    """Largest extent of the point set: max over directions of the projected width.

    Sampling 1024 directions on the half circle underestimates the true
    diameter by a relative 1 - cos(pi / 2048) < 1.2e-6 at most.
    """
    pts = np.asarray(points, dtype=float)
    try:
        pts = pts[ConvexHull(pts).vertices]
    except (QhullError, ValueError):
        pass
    ang = np.pi * np.arange(directions) / directions
    proj = pts @ np.stack([np.cos(ang), np.sin(ang)])
    return float(np.max(proj.max(axis=0) - proj.min(axis=0)))


def curve_fit_residual(points: np.ndarray, harmonics: int = 24) -> float:
    """Thin-annulus test: max radial deviation from a closed curve r(phi), over the diameter.

    The curve is a truncated Fourier series in the polar angle about the
    centroid, fitted by least squares.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < 4 * harmonics + 2:
        return float("inf")
    diam = diameter(pts)
    if diam == 0:
        return 0.0
    c = pts.mean(axis=0)
    d = pts - c
    phi = np.arctan2(d[:, 1], d[:, 0])
    r = np.hypot(d[:, 0], d[:, 1])
    j = np.arange(1, harmonics + 1)
    design = np.hstack([np.ones((len(phi), 1)), np.cos(np.outer(phi, j)), np.sin(np.outer(phi, j))])
    coef, *_ = np.linalg.lstsq(design, r, rcond=None)
    return float(np.max(np.abs(design @ coef - r)) / diam)


def classify(orb: PoincareOrbit, min_points: int = 1000) -> dict:
    """Surrogate regime label: chaotic if the Lyapunov estimate exceeds 1e-3 per return,
    regular if the orbit lies in a thin annulus (< 1% of its diameter), else unclassified.
    """
    fit = curve_fit_residual(orb.points) if len(orb) >= min_points else None
    label = "unclassified"
    if orb.reason == "escaped":
        label = "escaped"
    elif orb.reason != "ok":
        label = "lost"
    elif fit is not None:
        if orb.lyapunov is not None and orb.lyapunov > CHAOS_THRESHOLD:
            label = "chaotic"
        elif fit < CURVE_THRESHOLD:
            label = "regular"
    return {"class": label, "lyapunov": orb.lyapunov, "curve_residual": fit}


# ---------------------------------------------------------------------------
# consistency with the full vertical flow
# ---------------------------------------------------------------------------


def _reduced_rhs_array(par: ReducedParams):
    m, n, p, k, d2 = par.m, par.n, par.p, par.k, 2 * par.delta

    def f(t, y):
        th, a, b = y
        return np.array([(2 * p * a * b - n * a * a - m * b * b) / d2 + k,
                         m * math.cos(th) + p * math.sin(th),
                         p * math.cos(th) + n * math.sin(th)])
    return f


def reduced_trajectory(s: ReducedState, par: ReducedParams, T: float, t_eval, tol: float = 1e-12) -> np.ndarray:
    par.check()
    sol = ode.solve(_reduced_rhs_array(par), 0.0, np.array([s.theta, s.a, s.b]), T, tol=tol, t_eval=t_eval)
    return sol.y_out


def embedding_consistency(s: ReducedState, par: ReducedParams, T: float = 10.0, n_samples: int = 201,
                          tol: float = 1e-12) -> dict:
    """Integrate the reduced system and the full vertical system from the embedded
    point; report the largest deviation of the embedded reduced curve and the
    drift of H and the Casimirs along it."""
    from .dynamics import vertical_rhs_array

    ts = np.linspace(0.0, T, n_samples)
    red = reduced_trajectory(s, par, T, ts, tol)
    h0 = embed(s, par)
    full = ode.solve(vertical_rhs_array, 0.0, h0, T, tol=tol, t_eval=ts).y_out
    emb = np.array([embed(ReducedState(*y), par) for y in red])
    H = 0.5 * (emb[:, 0] ** 2 + emb[:, 1] ** 2)
    cas = np.array(casimir_values(emb.T)).T
    return {
        "max_deviation": float(np.max(np.abs(emb - full))),
        "H_drift": float(np.max(np.abs(H - 0.5))),
        "casimir_drift": float(np.max(np.abs(cas - cas[0]))),
        "k_from_C": float(ReducedParams.from_momentum(h0).k),
    }


# ---------------------------------------------------------------------------
# parameter and seed scans
# ---------------------------------------------------------------------------


def thread_count(requested: int | None = None) -> int:
    cap = os.environ.get("CARNOT_SR_THREADS")
    n = requested or os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass
class ScanConfig:
    iters: int = 10_000
    tol: float = DEFAULT_TOL
    escape_radius: float = ESCAPE_RADIUS
    d0: float = LYAPUNOV_D0
    transient: float = LYAPUNOV_TRANSIENT
    threads: int | None = None


@dataclass
class CellRecord:
    param_index: int
    seed_index: int
    params: dict
    seed: tuple[float, float]
    klass: str
    lyapunov: float | None
    curve_residual: float | None
    mean_return_time: float | None
    n_points: int
    reason: str
    error: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class"] = d.pop("klass")
        return d


def run_cell(pi: int, si: int, par: ReducedParams, seed, cfg: ScanConfig) -> CellRecord:
    try:
        orb = orbit(seed, par, cfg.iters, cfg.tol, cfg.escape_radius, lyapunov=True, d0=cfg.d0,
                    transient=cfg.transient)
    except DegenerateParamsError as exc:
        return CellRecord(pi, si, asdict(par), tuple(seed), "lost", None, None, None, 0, "degenerate", str(exc))
    c = classify(orb)
    mrt = float(np.mean(orb.times)) if len(orb) else None
    return CellRecord(pi, si, asdict(par), orb.seed, c["class"], orb.lyapunov, c["curve_residual"], mrt,
                      len(orb), orb.reason)


def scan(par_grid: Iterable[ReducedParams], seed_grid: Iterable[Sequence[float]],
         cfg: ScanConfig | None = None) -> list[CellRecord]:
    """Every (params, seed) cell, in parallel; records come back ordered by grid index."""
    cfg = cfg or ScanConfig()
    pars = list(par_grid)
    seeds = [tuple(map(float, s)) for s in seed_grid]
    cells = [(pi, si) for pi in range(len(pars)) for si in range(len(seeds))]
    n = thread_count(cfg.threads)

    def work(cell):
        pi, si = cell
        return run_cell(pi, si, pars[pi], seeds[si], cfg)

    if n == 1:
        recs = [work(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            recs = list(ex.map(work, cells))
    return sorted(recs, key=lambda r: (r.param_index, r.seed_index))


def seed_grid(a_range: Sequence[float], b_range: Sequence[float], na: int, nb_: int) -> list[tuple[float, float]]:
    return [(float(a), float(b)) for b in np.linspace(*b_range, nb_) for a in np.linspace(*a_range, na)]


def curated_params() -> dict:
    """Shipped parameter sets exhibiting each regime, plus the scan grid that found them."""
    return json.loads(resources.files("carnot_sr").joinpath("data/params.json").read_text())


def curated_set(name: str) -> tuple[ReducedParams, dict]:
    for entry in curated_params()["sets"]:
        if entry["name"] == name:
            return ReducedParams(entry["m"], entry["n"], entry["p"], entry["k"]), entry
    raise KeyError(name)


def curated_scan() -> tuple[list[ReducedParams], list[tuple[float, float]], ScanConfig]:
    grid = curated_params()["scan"]
    a, b = grid["seeds"]["a"], grid["seeds"]["b"]
    pars = [ReducedParams(p["m"], p["n"], p["p"], p["k"]) for p in grid["params"]]
    return pars, seed_grid(a[:2], b[:2], int(a[2]), int(b[2])), ScanConfig(iters=grid["iters"], tol=grid["tol"])
