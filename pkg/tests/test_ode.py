from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from carnot_sr import ode


def oscillator(t, y):
    return np.array([y[1], -y[0]])


def test_harmonic_oscillator_exact():
    sol = ode.solve(oscillator, 0.0, [1.0, 0.0], 10.0, tol=1e-12)
    assert np.allclose(sol.y[-1], [np.cos(10.0), -np.sin(10.0)], atol=1e-10)
    assert sol.t[-1] == 10.0


def test_matches_scipy_dop853_on_a_nonlinear_system():
    def lotka(t, y):
        return np.array([y[0] - y[0] * y[1], -y[1] + y[0] * y[1]])

    ours = ode.solve(lotka, 0.0, [2.0, 1.0], 15.0, tol=1e-12).y[-1]
    ref = solve_ivp(lotka, (0, 15), [2.0, 1.0], method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1]
    assert np.allclose(ours, ref, atol=1e-9)


def test_t_eval_lands_exactly():
    te = np.linspace(0.0, 3.0, 7)
    sol = ode.solve(oscillator, 0.0, [1.0, 0.0], 3.0, tol=1e-12, t_eval=te)
    assert np.array_equal(sol.t_out, te)
    assert np.allclose(sol.y_out[:, 0], np.cos(te), atol=1e-10)


def test_backward_integration():
    sol = ode.solve(oscillator, 2.0, [np.cos(2.0), -np.sin(2.0)], 0.0, tol=1e-12)
    assert np.allclose(sol.y[-1], [1.0, 0.0], atol=1e-10)


def test_dense_output_is_accurate():
    sol = ode.solve(oscillator, 0.0, [1.0, 0.0], 5.0, tol=1e-12)
    tq = np.linspace(0.0, 5.0, 101)
    assert np.allclose(sol(tq)[:, 0], np.cos(tq), atol=1e-6)


def test_step_callback_can_stop():
    sol = ode.solve(oscillator, 0.0, [1.0, 0.0], 10.0, step_callback=lambda t, y, f, tn, yn, fn: tn > 1.0)
    assert 1.0 < sol.t[-1] < 10.0


def test_blowup_raises():
    with pytest.raises(ode.IntegrationError, match="stiffness/blowup"):
        ode.solve(lambda t, y: y**2, 0.0, [1.0], 2.0)


def test_bad_tolerance():
    with pytest.raises(ValueError):
        ode.solve(oscillator, 0.0, [1.0, 0.0], 1.0, tol=0.0)
