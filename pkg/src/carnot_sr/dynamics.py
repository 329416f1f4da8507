"""Normal and abnormal extremals on the Carnot group and their planar projections.

The normal Hamiltonian system is integrated in the coordinates (h1..h8, q),
where h_i = <lambda, X_i(q)>.  The vertical part closes on L* through the
Lie-Poisson bracket; the horizontal part is q' = h1 X1(q) + h2 X2(q).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from . import ode
from .group import hamiltonians
from .liepoisson import H as HNAMES
from .liepoisson import casimir_values, vertical_rhs_polys
from .models import X, build_symmetric
from .polyalg import Poly, VecField

DEFAULT_TOL = 1e-10


class NotOnAbnormalVarietyError(ValueError):
    pass


class VanishingPatternError(ValueError):
    pass


@dataclass(frozen=True)
class MomentumPoint:
    h: tuple[float, ...]

    def __post_init__(self):
        if len(self.h) != 8:
            raise ValueError("a momentum point has 8 coordinates")
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))

    @property
    def H(self) -> float:
        return 0.5 * (self.h[0] ** 2 + self.h[1] ** 2)

    @property
    def casimirs(self) -> tuple[float, float, float, float]:
        return casimir_values(self.h)


@dataclass(frozen=True)
class ExtremalState:
    momentum: MomentumPoint
    position: tuple[float, ...] = (0.0,) * 8

    def __post_init__(self):
        if not isinstance(self.momentum, MomentumPoint):
            object.__setattr__(self, "momentum", MomentumPoint(tuple(self.momentum)))
        if len(self.position) != 8:
            raise ValueError("a group element has 8 coordinates")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))

    def to_array(self) -> np.ndarray:
        return np.array(self.momentum.h + self.position)

    @classmethod
    def from_array(cls, y) -> "ExtremalState":
        return cls(MomentumPoint(tuple(y[:8])), tuple(y[8:]))


# ---------------------------------------------------------------------------
# normal extremals
# ---------------------------------------------------------------------------

STATE = HNAMES + X


@lru_cache(maxsize=None)
def _normal_field():
    model = build_symmetric()
    h1, h2 = Poly.var(STATE, "h1"), Poly.var(STATE, "h2")
    horizontal = model[1].to_ring(STATE) * h1 + model[2].to_ring(STATE) * h2
    vertical = [p.to_ring(STATE) for p in vertical_rhs_polys()]
    return VecField(STATE, vertical + list(horizontal.components)).compile()


def normal_rhs_array(t, y) -> np.ndarray:
    return np.array(_normal_field()(*y))


@lru_cache(maxsize=None)
def _vertical_field():
    return VecField(HNAMES, list(vertical_rhs_polys())).compile()


def vertical_rhs_array(t, h) -> np.ndarray:
    """The vertical subsystem alone: h_i' = {H, h_i} on L*."""
    return np.array(_vertical_field()(*h))


def normal_rhs(state: ExtremalState | Sequence[float]):
    """Exact right-hand side of the normal system; returns the same kind it was given."""
    if isinstance(state, ExtremalState):
        d = normal_rhs_array(0.0, state.to_array())
        return ExtremalState(MomentumPoint(tuple(d[:8])), tuple(d[8:]))
    return normal_rhs_array(0.0, np.asarray(state, dtype=float))


@lru_cache(maxsize=None)
def _frame_matrix():
    """q -> M(q) with M[i, j] = (X_{i+1})_j(q), so that h = M(q) psi."""
    model = build_symmetric()
    for i in range(1, 9):
        for j, c in enumerate(model[i].components):
            if j < i - 1 and c:
                raise AssertionError("frame matrix is not upper triangular")
            if j == i - 1 and c != 1:
                raise AssertionError("frame matrix lacks a unit diagonal")
    rows = [model[i].compile() for i in range(1, 9)]
    return lambda q: np.array([r(*q) for r in rows], dtype=float)


def reconstruct_psi(h, q) -> np.ndarray:
    """Solve the fiber-linear system h = M(q) psi (unit upper triangular)."""
    return solve_triangular(_frame_matrix()(q), np.asarray(h, dtype=float), unit_diagonal=True)


@lru_cache(maxsize=None)
def _integral_functions():
    hs = hamiltonians()
    return tuple(p.compile() for p in (*hs.g, hs.h0))


INTEGRAL_NAMES = tuple(f"g{i}" for i in range(1, 9)) + ("h0",)


def integrals_at(h, q) -> np.ndarray:
    """(g1..g8, h0) at the covector with momenta h over the point q."""
    psi = reconstruct_psi(h, q)
    args = tuple(q) + tuple(psi)
    return np.array([f(*args) for f in _integral_functions()])


@dataclass
class NormalTrajectory:
    t: np.ndarray
    h: np.ndarray  # (N, 8)
    q: np.ndarray  # (N, 8)
    tol: float
    nfev: int = 0

    @property
    def state(self) -> np.ndarray:
        return np.hstack([self.h, self.q])

    @property
    def final(self) -> ExtremalState:
        return ExtremalState.from_array(self.state[-1])

    @property
    def H(self) -> np.ndarray:
        return 0.5 * (self.h[:, 0] ** 2 + self.h[:, 1] ** 2)

    @property
    def C(self) -> np.ndarray:
        return casimir_values(self.h.T)[3]

    def conserved(self) -> dict[str, np.ndarray]:
        return {"H": self.H, "h6": self.h[:, 5], "h7": self.h[:, 6], "h8": self.h[:, 7], "C": self.C}

    def drift(self) -> dict[str, float]:
        """max_t |I(t) - I(0)| for H, h6, h7, h8 and C."""
        return {k: float(np.max(np.abs(v - v[0]))) for k, v in self.conserved().items()}

    def integrals(self) -> np.ndarray:
        return np.array([integrals_at(h, q) for h, q in zip(self.h, self.q)])

    def integral_drift(self) -> dict[str, float]:
        vals = self.integrals()
        return {name: float(np.max(np.abs(vals[:, i] - vals[0, i]))) for i, name in enumerate(INTEGRAL_NAMES)}

    def speed(self) -> np.ndarray:
        d = np.array([normal_rhs_array(0.0, y) for y in self.state])
        return np.hypot(d[:, 8], d[:, 9])


def _as_state(s) -> np.ndarray:
    if isinstance(s, ExtremalState):
        return s.to_array()
    y = np.asarray(s, dtype=float)
    if y.shape == (8,):
        y = np.concatenate([y, np.zeros(8)])
    if y.shape != (16,):
        raise ValueError("expected an ExtremalState, 8 momenta or a 16-vector")
    return y


def integrate_normal(state, T: float, tol: float = DEFAULT_TOL, t_eval=None,
                     max_step: float = np.inf) -> NormalTrajectory:
    """Integrate the normal Hamiltonian system for time T (negative T runs backwards).

    Returned samples are the accepted steps, or exactly ``t_eval`` if given.
    Raises :class:`ode.IntegrationError` ("stiffness/blowup") on step underflow.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y0 = _as_state(state)
    sol = ode.solve(normal_rhs_array, 0.0, y0, float(T), tol=tol, t_eval=t_eval, max_step=max_step)
    if t_eval is None:
        t, y = sol.t, sol.y
    else:
        t, y = sol.t_out, sol.y_out
    return NormalTrajectory(t, y[:, :8].copy(), y[:, 8:].copy(), tol, sol.nfev)


def time_reversal_error(state, T: float, tol: float = DEFAULT_TOL) -> float:
    """Integrate forward for T, then backward for T; max-norm distance from the start."""
    y0 = _as_state(state)
    fwd = ode.solve(normal_rhs_array, 0.0, y0, float(T), tol=tol)
    back = ode.solve(normal_rhs_array, float(T), fwd.y[-1], 0.0, tol=tol)
    return float(np.max(np.abs(back.y[-1] - y0)))


# ---------------------------------------------------------------------------
# abnormal extremals
# ---------------------------------------------------------------------------

PROJECTION = {"saddle": "hyperbola", "center": "ellipse", "lines": "parabola", "fixed": "point"}


@dataclass(frozen=True)
class AbnormalClass:
    delta: float
    D: tuple[tuple[float, float], tuple[float, float]]
    case: str
    projection: str  # predicted planar curve for this (h4, h5)

    def to_dict(self) -> dict:
        return {"delta": self.delta, "D": [list(r) for r in self.D], "case": self.case,
                "projection": self.projection}


def _check_abnormal(h):
    if len(h) != 8:
        raise ValueError("a momentum point has 8 coordinates")
    if h[0] != 0 or h[1] != 0 or h[2] != 0:
        raise NotOnAbnormalVarietyError("not on abnormal variety: h1 = h2 = h3 = 0 required")


def classify_abnormal(h: Sequence[float]) -> AbnormalClass:
    """Phase-portrait case of (h4, h5)' = D (h4, h5) and the planar projection it yields.

    Besides the generic conic of each case, the projection degenerates to a
    line whenever D (h4, h5) = 0 with (h4, h5) != 0, and to a point when
    (h4, h5) = 0.
    """
    h = tuple(h.h if isinstance(h, MomentumPoint) else h)
    _check_abnormal(h)
    h4, h5, h6, h7, h8 = h[3:]
    delta = h6 * h8 - h7 * h7
    D = ((h7, 0.0 - h6), (h8, 0.0 - h7))
    if h6 == 0 and h7 == 0 and h8 == 0:
        case = "fixed"
    elif delta < 0:
        case = "saddle"
    elif delta > 0:
        case = "center"
    else:
        case = "lines"
    proj = PROJECTION[case]
    Dv = (h7 * h4 - h6 * h5, h8 * h4 - h7 * h5)
    if h4 == 0 and h5 == 0:
        proj = "point"
    elif Dv == (0, 0):
        proj = "line"
    return AbnormalClass(float(delta), D, case, proj)


def abnormal_momentum(h: Sequence[float], t) -> np.ndarray:
    """Closed form of (h4, h5)(t) = exp(tD)(h4, h5)(0) using D^2 = -delta I.

    exp(tD) = c(t) I + s(t) D with (c, s) = (cos wt, sin(wt)/w), (cosh wt, sinh(wt)/w)
    or (1, t) for delta > 0, < 0, = 0.
    """
    h4, h5, h6, h7, h8 = (float(v) for v in h[3:])
    t = np.asarray(t, dtype=float)
    delta = h6 * h8 - h7 * h7
    c, s = _cs(delta, t)
    d4 = h7 * h4 - h6 * h5
    d5 = h8 * h4 - h7 * h5
    return np.stack([c * h4 + s * d4, c * h5 + s * d5], axis=-1)


def _cs(delta, t):
    if delta > 0:
        w = np.sqrt(delta)
        return np.cos(w * t), np.sin(w * t) / w
    if delta < 0:
        w = np.sqrt(-delta)
        return np.cosh(w * t), np.sinh(w * t) / w
    return np.ones_like(t), t


def abnormal_plane(h: Sequence[float], x0: Sequence[float], t) -> np.ndarray:
    """Closed form of (x1, x2)(t): x' = (-h5, h4), integrating exp(sD) over [0, t]."""
    h4, h5, h6, h7, h8 = (float(v) for v in h[3:])
    t = np.asarray(t, dtype=float)
    delta = h6 * h8 - h7 * h7
    if delta > 0:
        w = np.sqrt(delta)
        ic, is_ = np.sin(w * t) / w, (1 - np.cos(w * t)) / delta
    elif delta < 0:
        w = np.sqrt(-delta)
        ic, is_ = np.sinh(w * t) / w, (np.cosh(w * t) - 1) / (-delta)
    else:
        ic, is_ = t, t * t / 2
    d4 = h7 * h4 - h6 * h5
    d5 = h8 * h4 - h7 * h5
    i4 = ic * h4 + is_ * d4
    i5 = ic * h5 + is_ * d5
    return np.stack([x0[0] - i5, x0[1] + i4], axis=-1)


@lru_cache(maxsize=None)
def _frame12():
    model = build_symmetric()
    return model[1].compile(), model[2].compile()


@dataclass
class AbnormalTrajectory:
    t: np.ndarray
    h: np.ndarray  # (N, 8), closed form
    q: np.ndarray  # (N, 8), by quadrature
    klass: AbnormalClass

    def variety_residual(self) -> float:
        """max |h1'|, |h2'|, |h3'| along the curve; zero on the abnormal variety."""
        h = self.h
        u1, u2 = -h[:, 4], h[:, 3]
        d1 = -u2 * h[:, 2]
        d2 = u1 * h[:, 2]
        d3 = u1 * h[:, 3] + u2 * h[:, 4]
        return float(np.max(np.abs(np.concatenate([d1, d2, d3, h[:, :3].ravel()]))))


def integrate_abnormal(h0: Sequence[float], q0: Sequence[float] = (0.0,) * 8, T: float = 1.0,
                       n_samples: int = 1000, tol: float = 1e-12) -> AbnormalTrajectory:
    """Abnormal extremal with control u = (-h5, h4), sampled at n_samples equispaced times."""
    h0 = tuple(float(v) for v in (h0.h if isinstance(h0, MomentumPoint) else h0))
    klass = classify_abnormal(h0)
    X1, X2 = _frame12()

    def rhs(t, q):
        h45 = abnormal_momentum(h0, t)
        u1, u2 = -h45[1], h45[0]
        return u1 * np.array(X1(*q)) + u2 * np.array(X2(*q))

    ts = np.linspace(0.0, float(T), n_samples)
    sol = ode.solve(rhs, 0.0, np.asarray(q0, dtype=float), float(T), tol=tol, t_eval=ts)
    h = np.zeros((len(ts), 8))
    h[:, 3:5] = abnormal_momentum(h0, ts)
    h[:, 5:] = h0[5:]
    return AbnormalTrajectory(ts, h, sol.y_out, klass)


@dataclass(frozen=True)
class ConicFit:
    kind: str  # ellipse | hyperbola | parabola | line | point
    residual: float
    coeffs: tuple[float, ...]  # A, B, C, D, E, F in normalized coordinates
    discriminant: float


def conic_fit(points: np.ndarray, degenerate_tol: float = 1e-9, disc_tol: float = 1e-6) -> ConicFit:
    """Total least-squares conic A u^2 + B uv + C v^2 + D u + E v + F = 0.

    Points are centred and isotropically scaled first.  ``residual`` is the
    largest algebraic distance |row . coeffs| with unit coefficient norm.
    Collinear data is reported as a line with the orthogonal-fit residual.
    """
    p = np.asarray(points, dtype=float)
    centre = p.mean(axis=0)
    d = p - centre
    scale = float(np.max(np.abs(d)))
    if scale == 0.0:
        return ConicFit("point", 0.0, (), 0.0)
    u, v = (d / scale).T
    _, sv, vt = np.linalg.svd(np.stack([u, v], axis=1), full_matrices=False)
    normal = vt[-1]
    line_res = float(np.max(np.abs(np.stack([u, v], axis=1) @ normal)))
    if line_res <= degenerate_tol:
        return ConicFit("line", line_res, (0.0, 0.0, 0.0, *normal, 0.0), 0.0)
    A = np.stack([u * u, u * v, v * v, u, v, np.ones_like(u)], axis=1)
    _, _, vt = np.linalg.svd(A, full_matrices=False)
    c = vt[-1]
    res = float(np.max(np.abs(A @ c)))
    disc = (c[1] ** 2 - 4 * c[0] * c[2]) / (c[0] ** 2 + c[1] ** 2 + c[2] ** 2)
    if disc < -disc_tol:
        kind = "ellipse"
    elif disc > disc_tol:
        kind = "hyperbola"
    else:
        kind = "parabola"
    return ConicFit(kind, res, tuple(float(x) for x in c), float(disc))


# ---------------------------------------------------------------------------
# projections to the plane, Heisenberg and Cartan groups
# ---------------------------------------------------------------------------

ZERO_PATTERN = {"plane": range(2, 8), "heisenberg": range(3, 8), "cartan": range(5, 8)}


@dataclass
class ProjectionReport:
    case: str
    checks: dict = field(default_factory=dict)
    cut_time_lower_bound: float | None = None

    def add(self, name: str, value: float, limit: float):
        self.checks[name] = {"value": float(value), "limit": float(limit), "pass": bool(value <= limit)}

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"case": self.case, "pass": self.passed, "checks": self.checks,
                "cut_time_lower_bound": self.cut_time_lower_bound}


def planar_curvature(traj: NormalTrajectory) -> np.ndarray:
    """Signed curvature of t -> (x1, x2)(t) from exact derivatives.

    x1' = h1 and x2' = h2 identically for the symmetric frame, so the
    acceleration is (h1', h2') taken from the vertical equations.
    """
    d = np.array([normal_rhs_array(0.0, y) for y in traj.state])
    vx, vy, ax, ay = d[:, 8], d[:, 9], d[:, 0], d[:, 1]
    return (vx * ay - vy * ax) / np.hypot(vx, vy) ** 3


def _cartan_rhs(t, y):
    h1, h2, h3, h4, h5, x1, x2 = y[:7]
    return np.array([
        -h2 * h3, h1 * h3, h1 * h4 + h2 * h5, 0.0, 0.0,
        h1, h2, (h2 * x1 - h1 * x2) / 2, h2 * (x1 * x1 + x2 * x2) / 2, -h1 * (x1 * x1 + x2 * x2) / 2,
    ])


def project_check(traj: NormalTrajectory, case: str, n_fd: int = 2001) -> ProjectionReport:
    """Verify the curve class of the projection for the plane, Heisenberg or Cartan case."""
    if case not in ZERO_PATTERN:
        raise ValueError(f"unknown case {case!r}")
    h0 = traj.h[0]
    if any(h0[i] != 0 for i in ZERO_PATTERN[case]):
        raise VanishingPatternError(f"wrong vanishing pattern for the {case} case")
    rep = ProjectionReport(case)
    kappa = planar_curvature(traj)
    T = float(traj.t[-1])
    if case == "plane":
        rep.add("max |curvature|", np.max(np.abs(kappa)), 1e-10)
        rep.cut_time_lower_bound = float("inf")
    elif case == "heisenberg":
        c = float(h0[2])
        if c == 0:
            raise VanishingPatternError("heisenberg case needs h3 != 0")
        rep.add("max ||curvature| - |h3||", np.max(np.abs(np.abs(kappa) - abs(c))), 1e-8)
        period = 2 * np.pi / abs(c)
        loop = integrate_normal(traj.state[0], period, traj.tol, t_eval=[period])
        rep.add("loop closure at 2pi/|h3|", np.hypot(*(loop.q[-1, :2] - traj.q[0, :2])), 1e-6)
        rep.cut_time_lower_bound = float(period)
    else:
        rep.add("max |h6|, |h7|, |h8|", np.max(np.abs(traj.h[:, 5:])), 1e-12)
        rep.add("curvature = h3", np.max(np.abs(kappa * np.hypot(traj.h[:, 0], traj.h[:, 1]) - traj.h[:, 2])), 1e-10)
        # the (h1..h5, x1..x5) block integrated on its own
        y0 = np.concatenate([traj.h[0, :5], traj.q[0, :5]])
        small = ode.solve(_cartan_rhs, 0.0, y0, T, tol=traj.tol, t_eval=[T])
        full = integrate_normal(traj.state[0], T, traj.tol, t_eval=[T])
        scale = 1.0 + np.max(np.abs(full.q[-1, :5]))
        rep.add("decoupling of x1..x5 (relative)", np.max(np.abs(small.y_out[-1, 5:] - full.q[-1, :5])) / scale, 1e-8)
        # elastica: kappa'' = h3 (h1 h5 - h2 h4), by central differences
        ts = np.linspace(0.0, T, n_fd)
        fd = integrate_normal(traj.state[0], T, traj.tol, t_eval=ts)
        dt = ts[1] - ts[0]
        k = fd.h[:, 2]
        kdd = (k[2:] - 2 * k[1:-1] + k[:-2]) / dt**2
        hh = fd.h[1:-1]
        pend = hh[:, 2] * (hh[:, 0] * hh[:, 4] - hh[:, 1] * hh[:, 3])
        rep.add("elastica kappa'' (relative, finite differences)",
                np.max(np.abs(kdd - pend)) / (1.0 + np.max(np.abs(pend))), 1e-4)
    return rep
