"""Hall basis of the free Lie algebra on two generators and its polynomial realization.

The realization follows Grayson and Grossman: H1 = d/dx1 and
H2 = d/dx2 + sum_k P_{2,k} d/dx_k, where the monomials P_{2,k} are built
recursively along the Hall trees, and every other H_k is the bracket given
by its tree.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .polyalg import Poly, VecField, coord_names, lie_bracket, rank


def dim_component(d: int, i: int) -> int:
    """Dimension of the degree-i component of the free Lie algebra on d generators."""
    if d < 1 or i < 1:
        raise ValueError("d and i must be positive")
    return _dim_component(d, i)


@lru_cache(maxsize=None)
def _dim_component(d: int, i: int) -> int:
    acc = d**i - sum(j * _dim_component(d, j) for j in range(1, i) if i % j == 0)
    assert acc % i == 0
    return acc // i


def dim_free_nilpotent(d: int, r: int) -> int:
    return sum(dim_component(d, i) for i in range(1, r + 1))


@dataclass(frozen=True)
class HallElement:
    index: int
    degree: int
    left: "HallElement | None" = None
    right: "HallElement | None" = None

    @property
    def is_generator(self) -> bool:
        return self.left is None

    def word(self) -> str:
        if self.is_generator:
            return f"X{self.index}"
        return f"[{self.left.word()}, {self.right.word()}]"

    def indices(self) -> str:
        if self.is_generator:
            return f"H{self.index}"
        return f"[H{self.left.index}, H{self.right.index}]"


def hall_basis(r: int, d: int = 2) -> list[HallElement]:
    """Hall basis elements of degree <= r, ordered by degree then by creation order.

    [E, F] is admitted when E > F and, if E = [G, K], K <= F.  Within a
    degree the pairs are enumerated lexicographically in (index E, index F).
    """
    if r < 1:
        raise ValueError("step must be >= 1")
    if d != 2:
        raise NotImplementedError("only two generators are supported")
    elems = [HallElement(1, 1), HallElement(2, 1)]
    by_degree = {1: list(elems)}
    for p in range(2, r + 1):
        cands = []
        for s in range(1, p):
            for E in by_degree[s]:
                for F in by_degree[p - s]:
                    if E.index <= F.index:
                        continue
                    if not E.is_generator and E.right.index > F.index:
                        continue
                    cands.append((E.index, F.index, E, F))
        cands.sort(key=lambda t: (t[0], t[1]))
        layer = []
        for _, _, E, F in cands:
            h = HallElement(len(elems) + 1, p, E, F)
            elems.append(h)
            layer.append(h)
        by_degree[p] = layer
    return elems


@dataclass(frozen=True)
class GGFrame:
    step: int
    basis: tuple[HallElement, ...]
    fields: tuple[VecField, ...]
    monomials: dict  # k -> P_{2,k}
    convention: str

    @property
    def dim(self) -> int:
        return len(self.fields)

    def weights(self) -> dict[str, int]:
        return {f"x{h.index}": h.degree for h in self.basis}


def gg_monomials(basis: list[HallElement], gens) -> dict[int, Poly]:
    """P_{2,k} = -x_j P_{2,i} / (deg_j P_{2,i} + 1) for H_k = [H_i, H_j], seeded by P_{2,2} = 1."""
    P = {2: Poly.const(gens, 1)}
    for h in basis:
        if h.is_generator:
            continue
        i, j = h.left.index, h.right.index
        if i not in P:
            continue
        xj = f"x{j}"
        P[h.index] = -Poly.var(gens, xj) * P[i] / (P[i].divisor_degree(xj) + 1)
    return P


def gg_frame(r: int, convention: str = "printed") -> GGFrame:
    """Polynomial frame H1..HN on R^N realizing the free nilpotent algebra of step r.

    ``convention="literal"`` is the recursion as stated.  ``"printed"`` (default)
    conjugates it by the reflection x_k -> -x_k of every coordinate of degree >= 3;
    for r = 4 this reproduces the published fields term for term.
    """
    if convention not in ("printed", "literal"):
        raise ValueError("convention must be 'printed' or 'literal'")
    basis = hall_basis(r)
    N = len(basis)
    coords = coord_names("x", N)
    P = gg_monomials(basis, coords)
    if convention == "printed":
        sign = {h.index: (-1 if h.degree >= 3 else 1) for h in basis}
        refl = {f"x{k}": Poly.var(coords, f"x{k}") * s for k, s in sign.items() if s < 0}
        P = {k: (p.subs(refl, coords) if refl else p) * sign[k] for k, p in P.items()}
    H1 = VecField.from_dict(coords, coords, {"x1": 1})
    comps = {"x2": Poly.const(coords, 1) if N >= 2 else 0}
    comps.update({f"x{k}": p for k, p in P.items() if k > 2})
    H2 = VecField.from_dict(coords, coords, comps)
    fields = {1: H1, 2: H2}
    for h in basis:
        if not h.is_generator:
            fields[h.index] = lie_bracket(fields[h.left.index], fields[h.right.index])
    return GGFrame(r, tuple(basis), tuple(fields[k] for k in range(1, N + 1)), P, convention)


def lie_closure_rank(frame: GGFrame, point=None) -> int:
    """Rank of the span of all fields at a point (default: the origin)."""
    N = frame.dim
    pt = point if point is not None else [Fraction(0)] * N
    return rank([f.at(pt) for f in frame.fields])


def iterated_brackets(frame: GGFrame, depth: int) -> list[VecField]:
    """All bracket words in H1, H2 up to the given length (left-normed)."""
    gens = frame.fields[:2]
    words = list(gens)
    layer = list(gens)
    for _ in range(depth - 1):
        layer = [lie_bracket(w, g) for w in layer for g in gens]
        layer = [w for w in layer if not w.is_zero()]
        words += layer
    return words


def is_weight_homogeneous(frame: GGFrame) -> bool:
    """Each coefficient of d/dx_k has weighted degree deg(H_k) - 1 (weight-one fields)."""
    w = frame.weights()
    for h, f in zip(frame.basis, frame.fields):
        for name, c in zip(f.coords, f.components):
            if c and c.weighted_degrees(w) != {w[name] - h.degree}:
                return False
    return True
