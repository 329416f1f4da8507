"""Carnot group law on G = R^8 derived from flows of the left-invariant frame.

The product is obtained by composing flows of the symmetric frame in
coordinates of the second kind:

1. flows e^{t_i X_i}(g) are computed exactly from terminating Lie series;
2. F(t, g) = e^{t8 X8} o ... o e^{t1 X1}(g);
3. F(t, 0) = y is solved for t (triangular in the grading);
4. x . y = F(t(y), x).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .models import X, build_symmetric, build_symmetry
from .polyalg import Poly, PolyMap, VecField, coord_names, flow

Y = coord_names("y", 8)
T = coord_names("t", 8)
PSI = coord_names("psi", 8)
XY = X + Y
XPSI = X + PSI
WEIGHTS = {**{f"x{i}": w for i, w in zip(range(1, 9), (1, 1, 2, 3, 3, 4, 4, 4))},
           **{f"y{i}": w for i, w in zip(range(1, 9), (1, 1, 2, 3, 3, 4, 4, 4))},
           **{f"t{i}": w for i, w in zip(range(1, 9), (1, 1, 2, 3, 3, 4, 4, 4))}}


def _solve_triangular(F: list[Poly], unknowns: tuple[str, ...], targets: tuple[str, ...], gens) -> dict[str, Poly]:
    """Solve F_k(unknowns) = targets_k, assuming F_k = u_k + (terms in lower-weight unknowns)."""
    sol: dict[str, Poly] = {}
    order = sorted(range(len(unknowns)), key=lambda k: (WEIGHTS[unknowns[k]], k))
    for k in order:
        u = unknowns[k]
        rest = F[k] - Poly.var(gens, u)
        if rest.diff(u) or F[k].diff(u) != 1:
            raise AssertionError(f"triangular solve failed at {u}")
        for v in rest.free_vars() & set(unknowns):
            if WEIGHTS[v] >= WEIGHTS[u]:
                raise AssertionError(f"triangular solve failed: {u} depends on {v}")
        rest = rest.subs(sol, gens) if sol else rest
        sol[u] = Poly.var(gens, targets[k]) - rest
    return sol


@lru_cache(maxsize=None)
def composed_flow() -> PolyMap:
    """e^{t8 X8} o ... o e^{t1 X1}(x) as a polynomial map in (x, t)."""
    model = build_symmetric()
    gens = X + T
    state = PolyMap.identity(X, gens)
    for i in range(1, 9):
        Fi = flow(model[i].to_ring(gens), f"t{i}")
        state = Fi.compose(state)
    return state


@lru_cache(maxsize=None)
def derive_product() -> PolyMap:
    """Exact product map z = x . y as polynomials in (x1..x8, y1..y8)."""
    F = composed_flow()
    gens = X + Y + T
    Fxt = [c.to_ring(gens) for c in F.components]
    at_identity = [c.subs({x: 0 for x in X}, gens) for c in Fxt]
    t_of_y = _solve_triangular(at_identity, T, Y, gens)
    z = [c.subs(t_of_y, gens).to_ring(XY) for c in Fxt]
    return PolyMap(X, z)


@lru_cache(maxsize=None)
def derive_inverse() -> PolyMap:
    """x^{-1} as a polynomial map in x, from solving x . w = 0 for w."""
    z = derive_product()
    gens = XY
    # x . w = 0  <=>  w_k + R_k(x, lower w) = 0
    sol = {}
    for k in sorted(range(8), key=lambda k: (WEIGHTS[Y[k]], k)):
        yk = Y[k]
        rest = z.components[k] - Poly.var(gens, yk)
        assert rest.diff(yk).is_zero()
        rest = rest.subs(sol, gens) if sol else rest
        sol[yk] = -rest
    return PolyMap(X, [sol[y].to_ring(X) for y in Y])


def _as_point(v):
    return [Fraction(a) if not isinstance(a, float) else a for a in v]


def product(x, y):
    """Numeric/exact product of two group elements (sequences of length 8)."""
    z = derive_product()
    return z(list(x) + list(y))


def inverse(x):
    return derive_inverse()(list(x))


IDENTITY = (0,) * 8


@lru_cache(maxsize=None)
def right_frame() -> tuple[VecField, ...]:
    """Y_j = i_* X_j: pushforward of the left-invariant frame by the inversion.

    Y_j(q) = Di(q^{-1}) X_j(q^{-1}); the inversion is an involution.
    """
    model = build_symmetric()
    inv = derive_inverse()
    J = inv.jacobian()
    sub = {x: c for x, c in zip(X, inv.components)}
    J_at_inv = [[e.subs(sub, X) for e in row] for row in J]
    out = []
    for j in range(1, 9):
        Xj_at_inv = [c.subs(sub, X) for c in model[j].components]
        comps = []
        for row in J_at_inv:
            acc = Poly(X)
            for a, b in zip(row, Xj_at_inv):
                if a and b:
                    acc = acc + a * b
            comps.append(acc)
        out.append(VecField(X, comps))
    return tuple(out)


def pairing(V: VecField) -> Poly:
    """Fiber-linear Hamiltonian <psi, V> on T*G in the ring (x, psi)."""
    acc = Poly(XPSI)
    for c, p in zip(V.components, PSI):
        if c:
            acc = acc + c.to_ring(XPSI) * Poly.var(XPSI, p)
    return acc


@dataclass(frozen=True)
class Hamiltonians:
    h: tuple[Poly, ...]  # h1..h8
    g: tuple[Poly, ...]  # g1..g8
    h0: Poly

    @property
    def H(self) -> Poly:
        return (self.h[0] ** 2 + self.h[1] ** 2) / 2


@lru_cache(maxsize=None)
def hamiltonians() -> Hamiltonians:
    model = build_symmetric()
    h = tuple(pairing(model[i]) for i in range(1, 9))
    g = tuple(pairing(Yj) for Yj in right_frame())
    h0 = pairing(build_symmetry().field)
    return Hamiltonians(h, g, h0)


def is_fiber_linear(p: Poly) -> bool:
    idx = [p.gens.index(s) for s in PSI if s in p.gens]
    return all(sum(e[i] for i in idx) == 1 for e in p.terms)


def canonical_bracket(a: Poly, b: Poly) -> Poly:
    """{a, b} = sum_k da/dpsi_k db/dx_k - da/dx_k db/dpsi_k, so that {h_V, h_W} = h_[V,W]."""
    out = Poly(a.gens)
    for x, p in zip(X, PSI):
        dap, dbx = a.diff(p), b.diff(x)
        if dap and dbx:
            out = out + dap * dbx
        dax, dbp = a.diff(x), b.diff(p)
        if dax and dbp:
            out = out - dax * dbp
    return out


def left_translation_pushforward(i: int) -> VecField:
    """DL_y(x) X_i(x) - X_i(y . x) as a field in the (x, y) ring: zero iff X_i is left-invariant.

    Coordinates of the product are written z(y, x) = y . x.
    """
    model = build_symmetric()
    z = derive_product()
    swap = {**{x: Poly.var(XY, y) for x, y in zip(X, Y)}, **{y: Poly.var(XY, x) for x, y in zip(X, Y)}}
    yx = [c.subs(swap, XY) for c in z.components]  # y . x
    Xi = model[i].to_ring(XY)
    pushed = []
    for zk in yx:
        acc = Poly(XY)
        for xj, c in zip(X, Xi.components):
            if c:
                acc = acc + zk.diff(xj) * c
        pushed.append(acc)
    Xi_at = [c.subs({x: zk for x, zk in zip(X, yx)}, XY) for c in Xi.components]
    return VecField(X, [a - b for a, b in zip(pushed, Xi_at)])
