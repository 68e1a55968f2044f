"""Keyed vectors and lazily evaluated operators."""

import pytest

from services.keyed import LinearOp, bracket, first_difference, vadd, vanishes_on
from services.opcop import extend_derivation, free_operad
from services.qlinalg import ONE
from services.symseq import SymSeq
from services.trees import corolla

KEYS = [("a",), ("b",), ("c",)]


def _op(table, degree, name):
    return LinearOp(lambda key: table.get(key, {}), degree, name)


def test_vadd_drops_cancelled_entries():
    acc = {("a",): ONE}
    vadd(acc, {("a",): ONE, ("b",): ONE}, -ONE)
    assert acc == {("b",): -ONE}


def test_operators_of_different_degrees_do_not_add():
    with pytest.raises(ValueError):
        LinearOp.identity() + LinearOp.zero(-1)


def test_bracket_satisfies_jacobi():
    a, b, c = KEYS
    x = _op({a: {b: ONE}, c: {a: 2 * ONE}}, 1, "x")
    y = _op({b: {c: ONE, a: -ONE}}, 1, "y")
    z = _op({a: {a: 3 * ONE}, c: {b: ONE}}, 0, "z")
    sign = -1 if (x.degree * y.degree) % 2 else 1
    lhs = bracket(x, bracket(y, z))
    rhs = bracket(bracket(x, y), z) + bracket(y, bracket(x, z)).scale(sign)
    assert first_difference(lhs, rhs, KEYS) is None


def test_square_zero_derivation_has_vanishing_self_bracket(small):
    p = free_operad(SymSeq.from_keys([("μ", 2, 0, 1), ("ν", 2, 1, 1)]), small)
    d = extend_derivation(p, {"ν": {corolla(p.label("μ")): ONE}}, -1)
    assert vanishes_on(bracket(d, d), p.keys()) is None
    # an odd operator commutes with itself up to 2d²
    x = _op({KEYS[0]: {KEYS[1]: ONE}, KEYS[1]: {KEYS[2]: ONE}}, -1, "x")
    assert bracket(x, x).on_basis(KEYS[0]) == {KEYS[2]: 2 * ONE}
