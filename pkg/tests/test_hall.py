from __future__ import annotations

from itertools import product

import pytest

from carnot_sr.hall import (dim_component, dim_free_nilpotent, gg_frame, hall_basis, is_weight_homogeneous,
                            iterated_brackets, lie_closure_rank)
from carnot_sr.models import build_asymmetric
from carnot_sr.polyalg import rank

# Published dimension table, i = 1..10.
L2 = [2, 1, 2, 3, 6, 9, 18, 30, 56, 99]
L2_CUMULATIVE = [2, 3, 5, 8, 14, 23, 41, 71, 127, 226]


def lyndon_count(n: int) -> int:
    """Brute force: binary words of length n strictly smaller than all their rotations."""
    count = 0
    for w in product("01", repeat=n):
        s = "".join(w)
        if all(s < s[k:] + s[:k] for k in range(1, n)):
            count += 1
    return count


@pytest.mark.parametrize("i", range(1, 11))
def test_dimension_table(i):
    assert dim_component(2, i) == L2[i - 1] == lyndon_count(i)
    assert dim_free_nilpotent(2, i) == L2_CUMULATIVE[i - 1]


@pytest.mark.parametrize("r", range(1, 8))
def test_hall_basis_size_and_degrees(r):
    basis = hall_basis(r)
    assert len(basis) == dim_free_nilpotent(2, r)
    for i in range(1, r + 1):
        assert sum(h.degree == i for h in basis) == dim_component(2, i)


def test_step4_words():
    words = [h.word() for h in hall_basis(4)]
    assert words == ["X1", "X2", "[X2, X1]", "[[X2, X1], X1]", "[[X2, X1], X2]",
                     "[[[X2, X1], X1], X1]", "[[[X2, X1], X1], X2]", "[[[X2, X1], X2], X2]"]


def test_step4_frame_reproduces_the_asymmetric_model():
    frame = gg_frame(4)
    assert frame.fields == build_asymmetric().basis


@pytest.mark.parametrize("convention", ["printed", "literal"])
@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_frame_is_bracket_generating_and_graded(r, convention):
    frame = gg_frame(r, convention)
    assert lie_closure_rank(frame) == frame.dim
    assert is_weight_homogeneous(frame)
    # brackets longer than r vanish: the frame is nilpotent of step r
    deep = iterated_brackets(frame, r + 1)
    assert len(deep) == len(iterated_brackets(frame, r))


def test_conventions_differ_by_a_reflection():
    a, b = gg_frame(4, "printed"), gg_frame(4, "literal")
    assert a.fields != b.fields
    for fa, fb in zip(a.fields, b.fields):
        assert rank([fa.at([0] * 8), fb.at([0] * 8)]) == 1


def test_bad_arguments():
    with pytest.raises(ValueError):
        hall_basis(0)
    with pytest.raises(ValueError):
        gg_frame(3, "other")
