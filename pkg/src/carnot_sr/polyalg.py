"""Exact multivariate polynomials over Q, polynomial vector fields and their flows.

A :class:`Poly` lives in a ring described by an ordered tuple of generator
names.  Arithmetic between polynomials of different rings is an error; use
:meth:`Poly.to_ring` to embed explicitly.
"""
from __future__ import annotations

import ast
import math
import re
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Mapping, Sequence

Number = int | Fraction

# Series for exp(tV) must terminate before this many applications of V.
LIE_SERIES_CAP = 5


class NonNilpotentError(ValueError):
    pass


def _frac(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"exact coefficient expected, got {type(c).__name__}")


def var_sort_key(name: str):
    """Global variable order: x < psi < y < h < anything else (t-parameters last)."""
    m = re.fullmatch(r"([A-Za-z_]+?)(\d*)", name)
    prefix, num = (m.group(1), m.group(2)) if m else (name, "")
    rank = {"x": 0, "psi": 1, "y": 2, "h": 3}.get(prefix, 4)
    return (rank, prefix, int(num) if num else -1)


class Poly:
    """Polynomial with Fraction coefficients; immutable, canonical (no zero terms)."""

    __slots__ = ("gens", "terms", "_hash")

    def __init__(self, gens: Sequence[str], terms: Mapping[tuple, Number] | None = None):
        self.gens = tuple(gens)
        n = len(self.gens)
        clean = {}
        if terms:
            for e, c in terms.items():
                if len(e) != n:
                    raise ValueError("exponent length does not match generator count")
                if any(k < 0 for k in e):
                    raise ValueError("negative exponent")
                c = _frac(c)
                if c:
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def const(cls, gens: Sequence[str], c: Number) -> "Poly":
        gens = tuple(gens)
        return cls(gens, {(0,) * len(gens): c})

    @classmethod
    def var(cls, gens: Sequence[str], name: str) -> "Poly":
        gens = tuple(gens)
        e = [0] * len(gens)
        e[gens.index(name)] = 1
        return cls(gens, {tuple(e): 1})

    @classmethod
    def _raw(cls, gens: tuple, terms: dict) -> "Poly":
        p = object.__new__(cls)
        p.gens = gens
        p.terms = terms
        p._hash = None
        return p

    # -- basic protocol -----------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.gens != self.gens:
                raise ValueError(f"ring mismatch: {self.gens} vs {other.gens}")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.gens, other)
        return NotImplemented

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.gens, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.gens == other.gens and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.gens, frozenset(self.terms.items())))
        return self._hash

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly._raw(self.gens, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.gens, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return Poly._raw(self.gens, {})
            return Poly._raw(self.gens, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if s:
                    out[e] = s
                else:
                    out.pop(e, None)
        return Poly._raw(self.gens, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("non-negative integer power required")
        result = Poly.const(self.gens, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus -----------------------------------------------------------
    def diff(self, name: str) -> "Poly":
        i = self.gens.index(name)
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = e[:i] + (k - 1,) + e[i + 1:]
                out[e2] = c * k
        return Poly._raw(self.gens, out)

    def degree(self, name: str | None = None) -> int:
        """Degree in one variable, or total degree; the zero polynomial has degree -1."""
        if not self.terms:
            return -1
        if name is None:
            return max(sum(e) for e in self.terms)
        i = self.gens.index(name)
        return max(e[i] for e in self.terms)

    def divisor_degree(self, name: str) -> int:
        """Highest power of ``name`` dividing self (0 for the zero polynomial)."""
        if not self.terms:
            return 0
        i = self.gens.index(name)
        return min(e[i] for e in self.terms)

    def free_vars(self) -> set[str]:
        used = set()
        for e in self.terms:
            used.update(g for g, k in zip(self.gens, e) if k)
        return used

    def weighted_degrees(self, weights: Mapping[str, int]) -> set[int]:
        w = [weights.get(g, 0) for g in self.gens]
        return {sum(a * b for a, b in zip(e, w)) for e in self.terms}

    def coeff(self, monomial: Mapping[str, int]) -> Fraction:
        e = tuple(monomial.get(g, 0) for g in self.gens)
        return self.terms.get(e, Fraction(0))

    # -- ring changes and substitution --------------------------------------
    def to_ring(self, gens: Sequence[str]) -> "Poly":
        gens = tuple(gens)
        if gens == self.gens:
            return self
        idx = {g: i for i, g in enumerate(gens)}
        for g in self.free_vars():
            if g not in idx:
                raise ValueError(f"variable {g} missing from target ring")
        pos = [(idx[g], k) for k, g in enumerate(self.gens) if g in idx]
        out = {}
        for e, c in self.terms.items():
            e2 = [0] * len(gens)
            for j, k in pos:
                e2[j] = e[k]
            out[tuple(e2)] = c
        return Poly._raw(gens, out)

    def subs(self, values: Mapping[str, "Poly | Number"], gens: Sequence[str] | None = None) -> "Poly":
        """Substitute polynomials (or numbers) for variables.

        The result lives in ``gens`` (default: the ring of the substituted
        polynomials, or self's ring when only numbers are substituted).
        """
        polys = [v for v in values.values() if isinstance(v, Poly)]
        if gens is None:
            gens = polys[0].gens if polys else self.gens
        gens = tuple(gens)
        repl = {}
        for name, v in values.items():
            if name not in self.gens:
                continue
            repl[self.gens.index(name)] = v.to_ring(gens) if isinstance(v, Poly) else Poly.const(gens, v)
        keep = [i for i in range(len(self.gens)) if i not in repl]
        kept_idx = {}
        for i in keep:
            g = self.gens[i]
            if g not in gens:
                if any(e[i] for e in self.terms):
                    raise ValueError(f"variable {g} has no image in target ring")
                continue
            kept_idx[i] = gens.index(g)
        power_cache: dict = {}

        def power(i, k):
            key = (i, k)
            if key not in power_cache:
                power_cache[key] = repl[i] ** k
            return power_cache[key]

        acc: dict = {}
        for e, c in self.terms.items():
            base = [0] * len(gens)
            for i, j in kept_idx.items():
                base[j] = e[i]
            term = Poly._raw(gens, {tuple(base): c})
            for i in repl:
                if e[i]:
                    term = term * power(i, e[i])
            for e2, c2 in term.terms.items():
                s = acc.get(e2, 0) + c2
                if s:
                    acc[e2] = s
                else:
                    acc.pop(e2, None)
        return Poly._raw(gens, acc)

    def eval(self, point: Mapping[str, Number] | Sequence):
        """Evaluate at a point given as a mapping or a sequence aligned with ``gens``."""
        if isinstance(point, Mapping):
            vals = [point.get(g, 0) for g in self.gens]
        else:
            vals = list(point)
            if len(vals) != len(self.gens):
                raise ValueError("point dimension mismatch")
        total = 0
        for e, c in self.terms.items():
            t = c
            for v, k in zip(vals, e):
                if k:
                    t = t * v**k
            total = total + t
        return total

    def __call__(self, *args, **kwargs):
        if args and len(args) == 1 and not isinstance(args[0], (int, float, Fraction)):
            return self.eval(args[0])
        if args:
            return self.eval(args)
        return self.eval(kwargs)

    # -- text form ----------------------------------------------------------
    def sorted_terms(self):
        order = sorted(range(len(self.gens)), key=lambda i: var_sort_key(self.gens[i]))
        return sorted(
            self.terms.items(),
            key=lambda ec: (sum(ec[0]), tuple(-ec[0][i] for i in order)),
        )

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = [g if k == 1 else f"{g}^{k}" for g, k in zip(self.gens, e) if k]
            mono.sort(key=lambda s: var_sort_key(s.split("^")[0]))
            a = abs(c)
            cs = f"{a.numerator}" if a.denominator == 1 else f"{a.numerator}/{a.denominator}"
            if mono and a == 1:
                body = " * ".join(mono)
            else:
                body = " * ".join([cs] + mono)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"Poly({str(self)!r}, gens={self.gens})"

    @classmethod
    def parse(cls, text: str, gens: Sequence[str]) -> "Poly":
        """Parse the canonical text form (also accepts ``**`` and parentheses)."""
        return parse_expr(text.replace("^", "**"), gens)

    def to_source(self) -> str:
        """Python float expression in the ring's variable names."""
        if not self.terms:
            return "0.0"
        parts = []
        for e, c in self.terms.items():
            factors = [repr(float(c))]
            for g, k in zip(self.gens, e):
                if k == 1:
                    factors.append(g)
                elif k:
                    factors.append(f"{g}**{k}")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def compile(self) -> Callable:
        """Float function of the ring variables, called positionally; numpy-broadcastable."""
        return _compile_lambda(self.gens, self.to_source())


def _compile_lambda(args: Sequence[str], body: str) -> Callable:
    # the source is generated from canonical terms only, never from user text
    return eval(f"lambda {', '.join(args)}: {body}", {"__builtins__": {}})


def parse_expr(text: str, gens: Sequence[str]) -> Poly:
    """Evaluate an arithmetic expression in the ring's variables without ``eval``."""
    gens = tuple(gens)
    tree = ast.parse(text.strip(), mode="eval")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if isinstance(b, Poly):
                    if b.degree() > 0:
                        raise ValueError("division by a non-constant polynomial")
                    b = b.terms.get((0,) * len(gens), Fraction(0))
                return a * (1 / Fraction(b)) if isinstance(a, Poly) else Fraction(a) / Fraction(b)
            if isinstance(node.op, ast.Pow):
                if not isinstance(b, int):
                    raise ValueError("integer exponent required")
                return a**b
            raise ValueError(f"unsupported operator {node.op}")
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand)
            if isinstance(node.op, ast.USub):
                return -v
            if isinstance(node.op, ast.UAdd):
                return v
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in gens:
                raise ValueError(f"unknown variable {node.id}")
            return Poly.var(gens, node.id)
        raise ValueError(f"cannot parse {ast.dump(node)}")

    out = ev(tree)
    return out if isinstance(out, Poly) else Poly.const(gens, out)


def symbols(names: str | Sequence[str], gens: Sequence[str] | None = None) -> tuple[Poly, ...]:
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    gens = tuple(gens) if gens is not None else tuple(names)
    return tuple(Poly.var(gens, n) for n in names)


def coord_names(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(1, n + 1))


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------


class VecField:
    """Polynomial vector field sum_k comp_k d/d coords_k."""

    __slots__ = ("coords", "components")

    def __init__(self, coords: Sequence[str], components: Sequence[Poly]):
        self.coords = tuple(coords)
        comps = tuple(components)
        if len(comps) != len(self.coords):
            raise ValueError("component count must equal the dimension")
        gens = comps[0].gens if comps else ()
        if any(c.gens != gens for c in comps):
            raise ValueError("components live in different rings")
        if not set(self.coords) <= set(gens):
            raise ValueError("coordinates must be generators of the ring")
        self.components = comps

    @classmethod
    def from_dict(cls, coords: Sequence[str], gens: Sequence[str], comps: Mapping[str, "Poly | Number | str"]):
        gens = tuple(gens)
        out = []
        for c in coords:
            v = comps.get(c, 0)
            if isinstance(v, str):
                v = parse_expr(v, gens)
            elif not isinstance(v, Poly):
                v = Poly.const(gens, v)
            out.append(v)
        return cls(coords, out)

    @classmethod
    def zero(cls, coords: Sequence[str], gens: Sequence[str]):
        return cls(coords, [Poly(gens) for _ in coords])

    @property
    def gens(self):
        return self.components[0].gens

    @property
    def dim(self) -> int:
        return len(self.coords)

    def _check(self, other: "VecField"):
        if not isinstance(other, VecField):
            raise TypeError("VecField expected")
        if other.coords != self.coords or other.gens != self.gens:
            raise ValueError("vector fields on different spaces")

    def apply(self, f: Poly) -> Poly:
        """Directional derivative V(f)."""
        out = Poly(f.gens)
        for name, c in zip(self.coords, self.components):
            if c:
                d = f.diff(name)
                if d:
                    out = out + c * d
        return out

    def __call__(self, f: Poly) -> Poly:
        return self.apply(f)

    def __add__(self, other):
        self._check(other)
        return VecField(self.coords, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        self._check(other)
        return VecField(self.coords, [a - b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VecField(self.coords, [-a for a in self.components])

    def __mul__(self, s):
        return VecField(self.coords, [a * s for a in self.components])

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, VecField):
            return NotImplemented
        return self.coords == other.coords and self.components == other.components

    def __hash__(self):
        return hash((self.coords, self.components))

    def is_zero(self) -> bool:
        return not any(self.components)

    def at(self, point):
        return [c.eval(point) for c in self.components]

    def to_ring(self, gens: Sequence[str]) -> "VecField":
        return VecField(self.coords, [c.to_ring(gens) for c in self.components])

    def compile(self) -> Callable:
        """Float function of the ring variables returning the tuple of components."""
        body = ", ".join(c.to_source() for c in self.components)
        return _compile_lambda(self.gens, f"({body},)")

    def subs(self, values, gens=None) -> "VecField":
        return VecField(self.coords, [c.subs(values, gens) for c in self.components])

    def __str__(self):
        parts = []
        for name, c in zip(self.coords, self.components):
            if c:
                parts.append(f"({c}) d/d{name}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"VecField({self})"


def lie_bracket(V: VecField, W: VecField) -> VecField:
    """[V, W] = V o W - W o V as derivations."""
    V._check(W)
    return VecField(V.coords, [V.apply(w) - W.apply(v) for v, w in zip(V.components, W.components)])


# ---------------------------------------------------------------------------
# polynomial maps and flows
# ---------------------------------------------------------------------------


class PolyMap:
    """Polynomial map: coordinate ``coords[k]`` is sent to ``components[k]``."""

    __slots__ = ("coords", "components")

    def __init__(self, coords: Sequence[str], components: Sequence[Poly]):
        self.coords = tuple(coords)
        self.components = tuple(components)
        if len(self.coords) != len(self.components):
            raise ValueError("component count must equal the dimension")
        gens = self.components[0].gens
        if any(c.gens != gens for c in self.components):
            raise ValueError("components live in different rings")

    @classmethod
    def identity(cls, coords: Sequence[str], gens: Sequence[str]):
        return cls(coords, [Poly.var(gens, c) for c in coords])

    @property
    def gens(self):
        return self.components[0].gens

    @property
    def dim(self) -> int:
        return len(self.coords)

    def compose(self, other: "PolyMap") -> "PolyMap":
        """self o other: substitute other's components for self's source coordinates."""
        if other.coords != self.coords:
            raise ValueError("maps on different spaces")
        gens = _merge_gens(self.gens, other.gens)
        sub = {c: p.to_ring(gens) for c, p in zip(self.coords, other.components)}
        return PolyMap(self.coords, [p.to_ring(gens).subs(sub, gens) for p in self.components])

    def __matmul__(self, other):
        return self.compose(other)

    def subs(self, values, gens=None) -> "PolyMap":
        return PolyMap(self.coords, [c.subs(values, gens) for c in self.components])

    def to_ring(self, gens) -> "PolyMap":
        return PolyMap(self.coords, [c.to_ring(gens) for c in self.components])

    def __call__(self, point):
        return [c.eval(point) for c in self.components]

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.coords == other.coords and self.components == other.components

    def __hash__(self):
        return hash((self.coords, self.components))

    def jacobian(self, wrt: Sequence[str] | None = None) -> list[list[Poly]]:
        wrt = self.coords if wrt is None else tuple(wrt)
        return [[c.diff(v) for v in wrt] for c in self.components]


def _merge_gens(a: Sequence[str], b: Sequence[str]) -> tuple[str, ...]:
    merged = list(a)
    merged += [g for g in b if g not in merged]
    return tuple(sorted(merged, key=var_sort_key))


def flow(V: VecField, t: "Poly | Number | str", cap: int = LIE_SERIES_CAP) -> PolyMap:
    """Exact time-t flow of a nilpotent polynomial field via its terminating Lie series.

    ``t`` may be a rational, a polynomial in V's ring, or the name of a new
    parameter (appended to the ring).
    """
    gens = V.gens
    if isinstance(t, str):
        if t not in gens:
            gens = _merge_gens(gens, (t,))
            V = V.to_ring(gens)
        t = Poly.var(gens, t)
    elif isinstance(t, Poly):
        if t.gens != gens:
            gens = _merge_gens(gens, t.gens)
            V = V.to_ring(gens)
            t = t.to_ring(gens)
    else:
        t = Poly.const(gens, _frac(t))
    comps = []
    for name in V.coords:
        term = Poly.var(gens, name)
        total = term
        tk = Poly.const(gens, 1)
        for k in range(1, cap + 1):
            term = V.apply(term)
            if not term:
                break
            if k == cap:
                raise NonNilpotentError(f"non-nilpotent field: Lie series of {name} does not terminate")
            tk = tk * t
            total = total + tk * term * Fraction(1, math.factorial(k))
        comps.append(total)
    return PolyMap(V.coords, comps)


def rank(rows: Iterable[Sequence[Number]]) -> int:
    """Exact rank of a rational matrix."""
    return len(rref([list(map(_frac, r)) for r in rows])[1])


def rref(mat: list[list[Fraction]]):
    """Reduced row echelon form over Q; returns (matrix, pivot columns)."""
    m = [list(r) for r in mat]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    row = 0
    for col in range(ncols):
        pr = next((r for r in range(row, len(m)) if m[r][col]), None)
        if pr is None:
            continue
        m[row], m[pr] = m[pr], m[row]
        pv = m[row][col]
        if pv != 1:
            m[row] = [x / pv for x in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col]:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    return m, pivots


def nullspace(mat: list[list[Number]], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of the right nullspace over Q (one vector per free column)."""
    if not mat:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    ncols = len(mat[0])
    red, pivots = rref([list(map(_frac, r)) for r in mat])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][f]
        basis.append(v)
    return basis


def product_of(polys: Iterable[Poly], gens) -> Poly:
    return reduce(lambda a, b: a * b, polys, Poly.const(gens, 1))
