"""Lie-Poisson structure on L*, Casimirs, co-adjoint orbits and integrals of the normal flow."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement
from typing import Sequence

import numpy as np

from .group import XPSI, canonical_bracket, hamiltonians
from .models import SYMMETRIC_TABLE, SYMMETRY_RELATIONS
from .polyalg import Poly, VecField, coord_names, nullspace, rank

H = coord_names("h", 8)


def hvar(i: int) -> Poly:
    return Poly.var(H, f"h{i}")


class LiePoissonBracket:
    """{f, g} = sum_{i,j} c^k_ij h_k df/dh_i dg/dh_j on polynomials in h1..h8."""

    def __init__(self, constants: dict = SYMMETRIC_TABLE):
        self.constants = constants
        self._pair = {}
        for (i, j), coeffs in constants.items():
            val = Poly(H)
            for k, c in coeffs.items():
                val = val + hvar(k) * Fraction(c)
            self._pair[(i, j)] = val
            self._pair[(j, i)] = -val

    def on_coordinates(self, i: int, j: int) -> Poly:
        return self._pair.get((i, j), Poly(H))

    def __call__(self, f: Poly, g: Poly) -> Poly:
        df = {i: f.diff(f"h{i}") for i in range(1, 9)}
        dg = {j: g.diff(f"h{j}") for j in range(1, 9)}
        out = Poly(H)
        for (i, j), cij in self._pair.items():
            if df[i] and dg[j]:
                out = out + cij * df[i] * dg[j]
        return out


LP = LiePoissonBracket()


def lp_bracket(f: Poly, g: Poly) -> Poly:
    return LP(f, g)


def hamiltonian_H() -> Poly:
    return (hvar(1) ** 2 + hvar(2) ** 2) / 2


def casimir_C() -> Poly:
    h3, h4, h5, h6, h7, h8 = (hvar(i) for i in range(3, 9))
    return h5**2 * h6 - 2 * h4 * h5 * h7 + h4**2 * h8 - 2 * h3 * (h6 * h8 - h7**2)


def casimirs() -> tuple[Poly, Poly, Poly, Poly]:
    return hvar(6), hvar(7), hvar(8), casimir_C()


def v_fields() -> tuple[VecField, ...]:
    """V_i f = {f, h_i}, i = 1..5."""
    out = []
    for i in range(1, 6):
        comps = {f"h{j}": LP.on_coordinates(j, i) for j in range(1, 9)}
        out.append(VecField.from_dict(H, H, comps))
    return tuple(out)


def vertical_rhs_polys() -> tuple[Poly, ...]:
    """dh_i/dt = {H, h_i}: the vertical part of the normal Hamiltonian field."""
    Hm = hamiltonian_H()
    return tuple(LP(Hm, hvar(i)) for i in range(1, 9))


# ---------------------------------------------------------------------------
# co-adjoint orbits
# ---------------------------------------------------------------------------


def j_matrix(h: Sequence) -> list[list]:
    h1, h2, h3, h4, h5, h6, h7, h8 = h
    z = h1 * 0
    return [
        [z, h3, h4, h6, h7],
        [-h3, z, h5, h7, h8],
        [-h4, -h5, z, z, z],
        [-h6, -h7, z, z, z],
        [-h7, -h8, z, z, z],
    ]


@dataclass(frozen=True)
class OrbitClass:
    delta: object
    delta1: object
    delta2: object
    dim: int
    rank_j: int
    case: str


def _rank(m, exact: bool) -> int:
    if exact:
        return rank(m)
    a = np.array(m, dtype=float)
    return int(np.linalg.matrix_rank(a, tol=1e-9 * max(1.0, np.abs(a).max())))


def orbit_dim(h: Sequence) -> OrbitClass:
    """Dimension of the co-adjoint orbit through h (= rank J(h))."""
    exact = all(isinstance(v, (int, Fraction)) for v in h)
    if exact:
        h = [Fraction(v) for v in h]
    h1, h2, h3, h4, h5, h6, h7, h8 = h
    d, d1, d2 = h6 * h8 - h7**2, h5 * h7 - h4 * h8, h5 * h6 - h4 * h7
    r = _rank(j_matrix(h), exact)
    if exact:
        if d or d1 or d2:
            case = "generic"
        elif any(h[2:]):
            case = "degenerate"
        else:
            case = "point"
    else:
        case = {4: "generic", 2: "degenerate", 0: "point"}.get(r, "unknown")
    return OrbitClass(d, d1, d2, r, r, case)


@dataclass(frozen=True)
class OrbitChart:
    h6: object
    h7: object
    h8: object
    C: object
    delta: object
    kind: str

    def h3(self, h4, h5):
        return (self.h6 * h5**2 - 2 * self.h7 * h4 * h5 + self.h8 * h4**2 - self.C) / (2 * self.delta)

    def residual(self, h: Sequence) -> float:
        """Distance of a point from the orbit: level-set and chart equations."""
        return max(abs(h[5] - self.h6), abs(h[6] - self.h7), abs(h[7] - self.h8),
                   abs(h[2] - self.h3(h[3], h[4])))


class DegenerateOrbitError(ValueError):
    pass


def casimir_values(h: Sequence):
    h1, h2, h3, h4, h5, h6, h7, h8 = h
    C = h5**2 * h6 - 2 * h4 * h5 * h7 + h4**2 * h8 - 2 * h3 * (h6 * h8 - h7**2)
    return h6, h7, h8, C


def orbit_chart(h: Sequence) -> OrbitChart:
    """The paraboloid h3 = Q(h4, h5) describing the 4-dimensional orbit through h."""
    h6, h7, h8, C = casimir_values(h)
    delta = h6 * h8 - h7**2
    if delta == 0:
        raise DegenerateOrbitError("orbit not 4-dimensional in this chart")
    kind = "elliptic" if delta > 0 else "hyperbolic"
    return OrbitChart(h6, h7, h8, C, delta, kind)


# ---------------------------------------------------------------------------
# integrals of the normal Hamiltonian field on T*G
# ---------------------------------------------------------------------------

# {h0, g_i} = sum_k c g_k
H0G_TABLE = {i: rel for i, rel in SYMMETRY_RELATIONS.items() if i >= 3}


def _entry(name: str, got: Poly, expected: Poly) -> dict:
    res = got - expected
    return {"bracket": name, "expected": str(expected), "residual": str(res), "pass": res.is_zero()}


def verify_integral_algebra() -> list[dict]:
    """Canonical brackets among H, g1..g8 and h0 on T*G."""
    hs = hamiltonians()
    Hm, g, h0 = hs.H, hs.g, hs.h0
    zero = Poly(XPSI)
    report = [_entry("{H, H}", canonical_bracket(Hm, Hm), zero)]
    for i in range(8):
        report.append(_entry(f"{{H, g{i + 1}}}", canonical_bracket(Hm, g[i]), zero))
    report.append(_entry("{H, h0}", canonical_bracket(Hm, h0), zero))
    for i in range(3, 9):
        expected = zero
        for k, c in H0G_TABLE[i].items():
            expected = expected + g[k - 1] * Fraction(c)
        report.append(_entry(f"{{h0, g{i}}}", canonical_bracket(h0, g[i - 1]), expected))
    abelian = [("H", Hm)] + [(f"g{i}", g[i - 1]) for i in range(3, 9)]
    for (na, a), (nb, b) in combinations(abelian, 2):
        if na == "H":
            continue  # already covered above
        report.append(_entry(f"{{{na}, {nb}}}", canonical_bracket(a, b), zero))
    return report


def casimir_report() -> list[dict]:
    out = []
    for name, c in zip(("h6", "h7", "h8", "C"), casimirs()):
        for j in range(1, 9):
            out.append(_entry(f"{{{name}, h{j}}}", LP(c, hvar(j)), Poly(H)))
    return out


def bracket_compatibility() -> list[dict]:
    """{h_i, h_j} computed canonically on T*G equals the Lie-Poisson value composed with h."""
    hs = hamiltonians()
    sub = {f"h{k}": hs.h[k - 1] for k in range(1, 9)}
    out = []
    for i, j in combinations(range(1, 9), 2):
        can = canonical_bracket(hs.h[i - 1], hs.h[j - 1])
        lp = LP.on_coordinates(i, j).subs(sub, XPSI) if LP.on_coordinates(i, j) else Poly(XPSI)
        out.append(_entry(f"{{h{i}, h{j}}}", can, lp))
    return out


def integrals_jacobian_rank(point: Sequence) -> int:
    """Exact rank of d(H, g1..g8, h0) at a rational point of T*G (x1..x8, psi1..psi8)."""
    hs = hamiltonians()
    funcs = [hs.H, *hs.g, hs.h0]
    rows = [[f.diff(v).eval(point) for v in XPSI] for f in funcs]
    return rank(rows)


def casimir_jacobian_rank(h: Sequence) -> int:
    rows = [[c.diff(v).eval(h) for v in H] for c in casimirs()]
    return rank(rows)


# ---------------------------------------------------------------------------
# homogeneous polynomial integrals
# ---------------------------------------------------------------------------


def monomials(k: int) -> list[Poly]:
    out = []
    for combo in combinations_with_replacement(range(8), k):
        e = [0] * 8
        for i in combo:
            e[i] += 1
        out.append(Poly(H, {tuple(e): 1}))
    return out


def integral_system(k: int):
    """Linear system {H, sum a_m m} = 0 on coefficients a_m of degree-k monomials."""
    Hm = hamiltonian_H()
    basis = monomials(k)
    images = [LP(Hm, m) for m in basis]
    rows_keys = sorted({e for im in images for e in im.terms})
    row_index = {e: r for r, e in enumerate(rows_keys)}
    mat = [[Fraction(0)] * len(basis) for _ in rows_keys]
    for col, im in enumerate(images):
        for e, c in im.terms.items():
            mat[row_index[e]][col] = c
    return basis, mat


@lru_cache(maxsize=None)
def homogeneous_integral_space(k: int) -> tuple[Poly, ...]:
    """Basis of degree-k homogeneous polynomials P(h) with {H, P} = 0, exactly."""
    if k < 1:
        raise ValueError("degree must be >= 1")
    basis, mat = integral_system(k)
    out = []
    for v in nullspace(mat, len(basis)):
        p = Poly(H)
        for c, m in zip(v, basis):
            if c:
                p = p + m * c
        out.append(p)
    return tuple(out)


def in_span(target: Poly, space: Sequence[Poly]) -> bool:
    keys = sorted({e for p in (*space, target) for e in p.terms})
    rows = [[p.terms.get(e, Fraction(0)) for e in keys] for p in space]
    return rank(rows + [[target.terms.get(e, Fraction(0)) for e in keys]]) == rank(rows)


def span_equal(a: Sequence[Poly], b: Sequence[Poly]) -> bool:
    return all(in_span(p, b) for p in a) and all(in_span(p, a) for p in b)
