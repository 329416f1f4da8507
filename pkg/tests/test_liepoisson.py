"""Lie-Poisson structure, Casimirs, orbits and integrals; sympy recomputes brackets independently."""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from carnot_sr.liepoisson import (DegenerateOrbitError, LP, bracket_compatibility, casimir_C, casimir_report,
                                  casimir_values, hamiltonian_H, homogeneous_integral_space, hvar,
                                  integrals_jacobian_rank, j_matrix, orbit_chart, orbit_dim, span_equal,
                                  verify_integral_algebra, vertical_rhs_polys)
from carnot_sr.models import SYMMETRIC_TABLE

HS = sp.symbols("h1:9")


def sympy_poisson(f, g):
    out = sp.Integer(0)
    for (i, j), coeffs in SYMMETRIC_TABLE.items():
        cij = sum(sp.Rational(str(c)) * HS[k - 1] for k, c in coeffs.items())
        out += cij * (sp.diff(f, HS[i - 1]) * sp.diff(g, HS[j - 1]) - sp.diff(f, HS[j - 1]) * sp.diff(g, HS[i - 1]))
    return sp.expand(out)


def sympy_integral_dimension(k: int) -> int:
    monos = [sp.prod([HS[i] for i in c]) for c in combinations_with_replacement(range(8), k)]
    a = sp.symbols(f"a0:{len(monos)}")
    F = sum(ai * m for ai, m in zip(a, monos))
    eqs = sp.Poly(sympy_poisson((HS[0] ** 2 + HS[1] ** 2) / 2, F), *HS).coeffs()
    M = sp.Matrix([[sp.diff(e, ai) for ai in a] for e in eqs])
    return len(monos) - M.rank()


def test_vertical_equations():
    h1, h2, h3, h4, h5, h6, h7, h8 = (hvar(i) for i in range(1, 9))
    assert vertical_rhs_polys() == (-h2 * h3, h1 * h3, h1 * h4 + h2 * h5, h1 * h6 + h2 * h7, h1 * h7 + h2 * h8,
                                    0 * h1, 0 * h1, 0 * h1)


def test_casimirs_exact_and_against_sympy():
    assert all(e["pass"] for e in casimir_report())
    C = sp.sympify(str(casimir_C()).replace("^", "**"), locals=dict(zip(map(str, HS), HS)))
    for j in range(8):
        assert sympy_poisson(C, HS[j]) == 0


def test_integral_algebra_and_compatibility():
    assert all(e["pass"] for e in verify_integral_algebra())
    comp = bracket_compatibility()
    assert len(comp) == 28 and all(e["pass"] for e in comp)


@pytest.mark.parametrize("k, dim", [(1, 3), (2, 7)])
def test_homogeneous_integral_dimensions(k, dim):
    assert len(homogeneous_integral_space(k)) == dim == sympy_integral_dimension(k)


def test_linear_integrals_are_the_top_layer():
    assert span_equal(homogeneous_integral_space(1), [hvar(6), hvar(7), hvar(8)])


def test_quadratic_integrals_contain_H():
    from carnot_sr.liepoisson import in_span

    assert in_span(hamiltonian_H(), homogeneous_integral_space(2))


@pytest.mark.parametrize("h, dim, case", [
    ((0, 0, 0, 0, 0, 1, 0, 1), 4, "generic"),
    ((1, 0, 0, 0, 0, 0, 1, 0), 4, "generic"),
    ((0, 0, 1, 0, 0, 0, 0, 0), 2, "degenerate"),
    ((0, 0, 0, 1, 1, 0, 0, 0), 2, "degenerate"),
    ((1, 2, 0, 0, 0, 0, 0, 0), 0, "point"),
])
def test_orbit_dimension_representatives(h, dim, case):
    oc = orbit_dim([Fraction(v) for v in h])
    assert (oc.dim, oc.case) == (dim, case)


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=8, max_size=8))
def test_rank_is_even(h):
    assert orbit_dim(h).dim % 2 == 0


def test_chart_and_degenerate_chart():
    h = [Fraction(v) for v in (0, 1, 2, 1, -1, 1, 0, 2)]
    ch = orbit_chart(h)
    assert ch.kind == "elliptic" and ch.residual(h) == 0
    with pytest.raises(DegenerateOrbitError):
        orbit_chart([1, 0, 0, 1, 0, 1, 1, 1])


def test_casimir_values_match_polynomial():
    h = [Fraction(v, 3) for v in (1, -2, 4, 5, -1, 2, 3, -7)]
    assert casimir_values(h)[3] == casimir_C().eval(h)


def test_integrals_are_independent():
    pt = [Fraction(k, 7) - 1 for k in range(1, 17)]
    assert integrals_jacobian_rank(pt) == 10


def test_lie_poisson_is_antisymmetric_and_jacobi():
    f, g, k = hvar(1) * hvar(2), hvar(3) ** 2 + hvar(4), hvar(5) * hvar(1)
    assert LP(f, g) == -LP(g, f)
    assert (LP(f, LP(g, k)) + LP(g, LP(k, f)) + LP(k, LP(f, g))).is_zero()


def test_j_matrix_is_antisymmetric():
    J = np.array(j_matrix([0.3, -1.2, 2.0, 0.7, 1.1, -0.4, 0.9, 1.5]))
    assert np.allclose(J, -J.T)
