"""Term-by-term comparison of derived formulas against the published ones.

The published formulas live in ``data/printed_formulas.json`` and are only
ever compared against, never computed with.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .group import XPSI, XY, derive_product, hamiltonians
from .polyalg import Poly, parse_expr

RINGS = {"xy": XY, "xpsi": XPSI}


@lru_cache(maxsize=None)
def load_printed() -> tuple[dict, ...]:
    text = resources.files("carnot_sr").joinpath("data/printed_formulas.json").read_text()
    return tuple(json.loads(text)["formulas"])


def derived_formulas() -> dict[str, Poly]:
    z = derive_product()
    hs = hamiltonians()
    out = {f"z{k}": c for k, c in enumerate(z.components, 1)}
    out.update({f"h{k}": c for k, c in enumerate(hs.h, 1)})
    out.update({f"g{k}": c for k, c in enumerate(hs.g, 1)})
    return out


def _monomial(text: str, gens) -> tuple:
    p = Poly.parse(text, gens)
    (e,) = p.terms
    return e


def _mono_str(e, gens) -> str:
    return str(Poly(gens, {e: 1}))


def diff_entry(entry: dict, derived: Poly) -> dict:
    gens = RINGS[entry["ring"]]
    printed = parse_expr(entry["transcribed"], gens)
    diff = derived - printed
    affected = {_monomial(m, gens) for typo in entry["typos"] for m in typo["affected"]}
    mismatched = set(diff.terms)
    terms = []
    for e in sorted(mismatched | set(derived.terms)):
        d, p = derived.terms.get(e, 0), printed.terms.get(e, 0)
        if d != p:
            terms.append({"monomial": _mono_str(e, gens), "derived": str(d), "printed": str(p),
                          "annotated": e in affected})
    corrected = parse_expr(entry.get("corrected", entry["transcribed"]), gens)
    return {
        "name": entry["name"],
        "match": diff.is_zero(),
        "mismatches": terms,
        "confined_to_typos": mismatched <= affected,
        "corrected_match": (derived - corrected).is_zero(),
        "typos": [t["note"] for t in entry["typos"]],
    }


def check_paper(names=None) -> list[dict]:
    derived = derived_formulas()
    report = []
    for entry in load_printed():
        if names is not None and entry["name"] not in names:
            continue
        report.append(diff_entry(entry, derived[entry["name"]]))
    return report
