"""Dormand-Prince 5(4) integrator with PI step-size control and Hermite dense output."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# Butcher tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4

SAFETY = 0.9
PI_ALPHA = 0.7 / 5
PI_BETA = 0.4 / 5
MIN_FACTOR, MAX_FACTOR = 0.2, 5.0


class IntegrationError(RuntimeError):
    pass


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    nfev: int = 0
    nrejected: int = 0
    status: str = "ok"
    t_out: np.ndarray | None = None
    y_out: np.ndarray | None = None

    def __call__(self, tq):
        """Cubic Hermite interpolation between accepted steps."""
        return hermite(self.t, self.y, self.f, tq)


def hermite(ts, ys, fs, tq):
    tq = np.atleast_1d(np.asarray(tq, dtype=float))
    forward = ts[-1] >= ts[0]
    key = ts if forward else -ts
    q = tq if forward else -tq
    idx = np.clip(np.searchsorted(key, q, side="right") - 1, 0, len(ts) - 2)
    t0, t1 = ts[idx], ts[idx + 1]
    h = (t1 - t0)[:, None]
    s = ((tq - t0) / (t1 - t0))[:, None]
    y0, y1, f0, f1 = ys[idx], ys[idx + 1], fs[idx], fs[idx + 1]
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def dp_step(fun, t, y, f0, h):
    """One Dormand-Prince step; returns (y_new, f_new, error_vector)."""
    k = np.empty((7, y.size))
    k[0] = f0
    for i in range(1, 7):
        k[i] = fun(t + C[i] * h, y + h * (A[i, :i] @ k[:i]))
    y_new = y + h * (B5[:6] @ k[:6])
    # FSAL: stage 7 is evaluated at (t + h, y_new)
    return y_new, k[6], h * (E @ k)


def error_norm(err, tol):
    return float(np.max(np.abs(err))) / tol


def initial_step(fun, t0, y0, f0, direction, tol):
    d0 = np.max(np.abs(y0) / (tol * (1 + np.abs(y0))))
    d1 = np.max(np.abs(f0) / (tol * (1 + np.abs(y0))))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = fun(t0 + direction * h0, y1)
    d2 = np.max(np.abs(f1 - f0) / (tol * (1 + np.abs(y0)))) / h0
    h1 = max(1e-6, h0 * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def solve(fun: Callable, t0: float, y0, t_end: float, tol: float = 1e-10,
          max_step: float = np.inf, first_step: float | None = None,
          t_eval=None, step_callback: Callable | None = None) -> Solution:
    """Integrate y' = fun(t, y) from t0 to t_end (either direction).

    Every accepted step has estimated local error max_i |err_i| <= tol.
    Steps are shortened to land exactly on each ``t_eval`` time, so those
    samples carry full integrator accuracy rather than interpolation error.
    ``step_callback(t, y, f, t_new, y_new, f_new)`` may return True to stop.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = np.array(y0, dtype=float)
    span = t_end - t0
    direction = 1.0 if span >= 0 else -1.0
    f = np.asarray(fun(t0, y), dtype=float)
    nfev = 1
    ts, ys, fs = [t0], [y.copy()], [f.copy()]
    stops = [] if t_eval is None else sorted(np.asarray(t_eval, dtype=float), key=lambda s: direction * s)
    for s in stops:
        if direction * (s - t0) < 0 or direction * (s - t_end) > 0:
            raise ValueError("t_eval outside the integration interval")
    t_out, y_out = [], []
    k_stop = 0
    while k_stop < len(stops) and stops[k_stop] == t0:
        t_out.append(t0)
        y_out.append(y.copy())
        k_stop += 1
    if span == 0:
        return Solution(np.array(ts), np.array(ys), np.array(fs), nfev,
                        t_out=np.array(t_out), y_out=np.array(y_out))
    h = abs(first_step) if first_step else initial_step(fun, t0, y, f, direction, tol)
    h = min(h, max_step, abs(span))
    h_min = 1e-12 * abs(span)
    t = t0
    err_prev = 1.0
    nrej = 0
    status = "ok"
    while direction * (t_end - t) > 0:
        if h < h_min:
            raise IntegrationError(f"stiffness/blowup: step size {h:.3e} below {h_min:.3e} at t={t:.6g}")
        target = stops[k_stop] if k_stop < len(stops) else t_end
        last = h >= abs(target - t)
        hs = abs(target - t) if last else h
        y_new, f_new, err = dp_step(fun, t, y, f, direction * hs)
        nfev += 6
        en = error_norm(err, tol)
        if not np.isfinite(en):
            h *= 0.25
            nrej += 1
            continue
        if en <= 1.0:
            t_new = target if last else t + direction * hs
            en = max(en, 1e-10)
            factor = SAFETY * en ** (-PI_ALPHA) * err_prev ** PI_BETA
            err_prev = en
            stop = step_callback(t, y, f, t_new, y_new, f_new) if step_callback else False
            t, y, f = t_new, y_new, f_new
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            h_next = hs * min(MAX_FACTOR, max(MIN_FACTOR, factor))
            # a step clipped to hit a sample time says little about the natural step size
            h = min(max_step, max(h_next, h) if last else h_next)
            while k_stop < len(stops) and last and stops[k_stop] == t:
                t_out.append(t)
                y_out.append(y.copy())
                k_stop += 1
            if stop:
                status = "stopped"
                break
        else:
            nrej += 1
            h = hs * max(MIN_FACTOR, SAFETY * en ** (-1 / 5))
    return Solution(np.array(ts), np.array(ys), np.array(fs), nfev, nrej, status,
                    np.array(t_out), np.array(y_out))
