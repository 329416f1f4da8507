"""Vector-field models of the free nilpotent Lie algebra with 2 generators of step 4.

Two realizations on R^8 with coordinates x1..x8:

* the symmetric frame X1..X8 together with the rotation symmetry X0;
* the asymmetric (Grayson-Grossman) frame H1..H8.

Structure constants are 1-based: ``constants[(i, j)] = {k: c}`` means
``[B_i, B_j] = sum_k c B_k`` for ``i < j``; absent pairs are asserted to be zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .polyalg import Poly, VecField, coord_names, lie_bracket

X = coord_names("x", 8)

# (i, j) -> {k: coefficient}, i < j
SYMMETRIC_TABLE = {
    (1, 2): {3: 1},
    (1, 3): {4: 1},
    (2, 3): {5: 1},
    (1, 4): {6: 1},
    (1, 5): {7: 1},
    (2, 4): {7: 1},
    (2, 5): {8: 1},
}

# [H2,H1]=H3, [H3,H1]=H4, [H3,H2]=H5, [H4,H1]=H6, [H4,H2]=H7, [H5,H2]=H8;
# [H5,H1]=H7 is forced by the Jacobi identity.
ASYMMETRIC_TABLE = {
    (1, 2): {3: -1},
    (1, 3): {4: -1},
    (2, 3): {5: -1},
    (1, 4): {6: -1},
    (2, 4): {7: -1},
    (1, 5): {7: -1},
    (2, 5): {8: -1},
}

SYMMETRIC_FIELDS = {
    1: {"x1": "1", "x3": "-x2/2", "x5": "-(x1**2 + x2**2)/2", "x7": "-x1*x2**2/4", "x8": "-x2**3/6"},
    2: {"x2": "1", "x3": "x1/2", "x4": "(x1**2 + x2**2)/2", "x6": "x1**3/6", "x7": "x1**2*x2/4"},
    3: {"x3": "1", "x4": "x1", "x5": "x2", "x6": "x1**2/2", "x7": "x1*x2", "x8": "x2**2/2"},
    4: {"x4": "1", "x6": "x1", "x7": "x2"},
    5: {"x5": "1", "x7": "x1", "x8": "x2"},
    6: {"x6": "1"},
    7: {"x7": "1"},
    8: {"x8": "1"},
}

SYMMETRY_P = "-x1**4/24 + x1**2*x2**2/8 + x7"
SYMMETRY_Q = "x1*x2**3/12 + x1**3*x2/12 - 2*x6 + 2*x8"
SYMMETRY_R = "x1**2*x2**2/8 - x2**4/24 - x7"

ASYMMETRIC_FIELDS = {
    1: {"x1": "1"},
    2: {"x2": "1", "x3": "-x1", "x4": "-x1**2/2", "x5": "-x1*x2", "x6": "x1**3/6",
        "x7": "x1**2*x2/2", "x8": "x1*x2**2/2"},
    3: {"x3": "1", "x4": "x1", "x5": "x2", "x6": "-x1**2/2", "x7": "-x1*x2", "x8": "-x2**2/2"},
    4: {"x4": "-1", "x6": "x1", "x7": "x2"},
    5: {"x5": "-1", "x7": "x1", "x8": "x2"},
    6: {"x6": "-1"},
    7: {"x7": "-1"},
    8: {"x8": "-1"},
}

# [X0, X_i] for i = 1..8 as {k: c}
SYMMETRY_RELATIONS = {
    1: {2: 1},
    2: {1: -1},
    3: {},
    4: {5: 1},
    5: {4: -1},
    6: {7: 2},
    7: {8: 1, 6: -1},
    8: {7: -2},
}


def _field(comps: dict, gens=X) -> VecField:
    return VecField.from_dict(X, gens, comps)


@dataclass(frozen=True)
class LieAlgebraModel:
    name: str
    basis: tuple[VecField, ...]
    constants: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def expected(self, i: int, j: int) -> dict[int, Fraction]:
        """Structure constants of [B_i, B_j] for any ordered pair (1-based)."""
        if i == j:
            return {}
        if i < j:
            return {k: Fraction(c) for k, c in self.constants.get((i, j), {}).items()}
        return {k: -Fraction(c) for k, c in self.constants.get((j, i), {}).items()}

    def combination(self, coeffs: dict[int, Fraction]) -> VecField:
        out = VecField.zero(self.basis[0].coords, self.basis[0].gens)
        for k, c in coeffs.items():
            out = out + self.basis[k - 1] * Fraction(c)
        return out

    def __getitem__(self, i: int) -> VecField:
        return self.basis[i - 1]


def build_symmetric() -> LieAlgebraModel:
    basis = tuple(_field(SYMMETRIC_FIELDS[i]) for i in range(1, 9))
    return LieAlgebraModel("symmetric", basis, SYMMETRIC_TABLE)


def build_asymmetric() -> LieAlgebraModel:
    """The frame H1..H8 in the form printed alongside the Hall-basis construction."""
    basis = tuple(_field(ASYMMETRIC_FIELDS[i]) for i in range(1, 9))
    return LieAlgebraModel("asymmetric", basis, ASYMMETRIC_TABLE)


@dataclass(frozen=True)
class SymmetryField:
    field: VecField
    P: Poly
    Q: Poly
    R: Poly


def build_symmetry() -> SymmetryField:
    from .polyalg import parse_expr

    P, Q, R = (parse_expr(s, X) for s in (SYMMETRY_P, SYMMETRY_Q, SYMMETRY_R))
    X0 = _field({"x1": "x2", "x2": "-x1", "x4": "x5", "x5": "-x4", "x6": P, "x7": Q, "x8": R})
    return SymmetryField(X0, P, Q, R)


def _fmt(coeffs: dict[int, Fraction], prefix: str = "X") -> str:
    if not coeffs:
        return "0"
    parts = []
    for k in sorted(coeffs):
        c = Fraction(coeffs[k])
        parts.append(f"{c}*{prefix}{k}" if c != 1 else f"{prefix}{k}")
    return " + ".join(parts)


def verify_table(model: LieAlgebraModel) -> list[dict]:
    """Check every unordered pair of basis fields against the structure constants."""
    prefix = "H" if model.name == "asymmetric" else "X"
    report = []
    for i, j in combinations(range(1, model.dim + 1), 2):
        expected = model.expected(i, j)
        got = lie_bracket(model[i], model[j])
        residual = got - model.combination(expected)
        report.append({
            "pair": [i, j],
            "expected": _fmt(expected, prefix),
            "residual": str(residual),
            "pass": residual.is_zero(),
        })
    return report


def verify_symmetry(sym: SymmetryField, model: LieAlgebraModel) -> list[dict]:
    """Check [X0, X_i] for i = 1..8 plus the trivial [X0, X0] = 0."""
    report = []
    for i in range(1, 9):
        expected = SYMMETRY_RELATIONS[i]
        residual = lie_bracket(sym.field, model[i]) - model.combination(expected)
        report.append({
            "pair": [0, i],
            "expected": _fmt(expected),
            "residual": str(residual),
            "pass": residual.is_zero(),
        })
    self_br = lie_bracket(sym.field, sym.field)
    report.append({"pair": [0, 0], "expected": "0", "residual": str(self_br), "pass": self_br.is_zero()})
    return report


def growth_vector(model: LieAlgebraModel, point) -> list[int]:
    """Ranks of the filtration L1, L1+L2, ... evaluated at a point (layers 2,1,2,3)."""
    from .polyalg import rank

    layers = [(1, 2), (3,), (4, 5), (6, 7, 8)]
    out, rows = [], []
    for layer in layers:
        rows += [model[i].at(point) for i in layer]
        out.append(rank(rows))
    return out
