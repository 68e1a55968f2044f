"""Symmetric sequences, the composition product and cotensors."""

import pytest

from services.errors import TruncationError, UnsupportedError, ValidationError
from services.graded import GradedMap, GradedSpace, GradedSubspace, disc
from services.keyed import LinearOp
from services.qlinalg import ONE
from services.symseq import (
    KeyedCotensor,
    SymSeq,
    Truncation,
    compose_product,
    cotensor,
    cotensor_contra,
    lax_map,
    shuffle_power,
    shuffle_subobject,
    unit_seq,
)


def _binary(sign: int = 1) -> SymSeq:
    space = GradedSpace({0: [("m",)]})
    sigma = GradedMap.identity(space).scale(sign)
    return SymSeq({2: space}, actions={2: [sigma]}, planar=False)


def test_truncation_rejects_empty_window():
    with pytest.raises(TruncationError):
        Truncation(2, (3, 1), 2)


def test_cell_cap_is_enforced(monkeypatch, small):
    monkeypatch.setenv("OPERADIA_MAX_CELLS", "10")
    with pytest.raises(TruncationError):
        small.check_cells(11, "test")
    small.check_cells(10, "test")


def test_coxeter_relations():
    assert _binary(1).coxeter_failures() == []
    assert _binary(-1).coxeter_failures() == []
    space = GradedSpace({0: [("m",)]})
    doubled = SymSeq({2: space}, actions={2: [GradedMap.identity(space).scale(2)]}, planar=False)
    assert doubled.coxeter_failures() == ["arity 2: σ_1² ≠ id"]


def test_planar_composition_product_dims(truncation):
    m = SymSeq.from_keys([("m", 2, 0, 1)])
    n = SymSeq.from_keys([("u", 1, 0, 0), ("b", 2, 0, 1)])
    assert compose_product(m, n, truncation()).dims == {2: {0: 1}, 3: {0: 2}, 4: {0: 1}}
    assert compose_product(m, n, truncation(max_weight=2)).dims == {2: {0: 1}, 3: {0: 2}}


def test_unit_is_neutral_for_the_product(truncation):
    assert compose_product(unit_seq(), unit_seq(), truncation()).dims == {1: {0: 1}}
    assert compose_product(_binary(), unit_seq(planar=False), truncation()).dims == {2: {0: 1}}


def test_mixed_planarity_is_rejected(truncation):
    with pytest.raises(TruncationError):
        compose_product(_binary(), unit_seq(planar=True), truncation())


def test_planar_cotensor_dims(truncation):
    x = GradedSpace({0: [("x",)], 1: [("y",)]})
    m = SymSeq.from_keys([("m", 2, 0, 0)])
    assert cotensor(x, m, truncation()).space.dims == {0: 1, 1: 2, 2: 1}


def test_symmetric_cotensor_takes_koszul_invariants(truncation):
    x = GradedSpace({0: [("x",)], 1: [("y",)]})
    # x⊗x and x⊗y + y⊗x survive, y⊗y is anti-invariant
    assert cotensor(x, _binary(), truncation()).space.dims == {0: 1, 1: 1}


def test_shuffle_power_inserts_the_differential_with_signs(truncation):
    d = disc(1)
    m = SymSeq.from_keys([("m", 2, 0, 0)])
    sigma = shuffle_power(GradedMap.identity(d.space), d.differential, m, truncation())
    top, bottom = ("top",), ("bottom",)
    assert sigma(("E", "m", (top, top))) == {
        ("E", "m", (bottom, top)): ONE,
        ("E", "m", (top, bottom)): -ONE,
    }


def test_shuffle_subobject(truncation):
    d = disc(1)
    sub = GradedSubspace.span(d.space, [{("bottom",): ONE}])
    m = SymSeq.from_keys([("m", 1, 0, 0)])
    assert shuffle_subobject(d.space, sub, m, truncation()).total_dim() == 1


def test_lax_sign_and_inverse():
    x = GradedSpace({0: [("x",)]})
    inner = KeyedCotensor(x.degree_of, SymSeq.from_keys([("m", 1, 1, 0)]))
    outer = KeyedCotensor(inner.degree, SymSeq.from_keys([("n", 2, 0, 0)]))
    phi = ("E", "m", (("x",),))
    nested = ("E", "n", (phi, phi))
    flat = ("E", ("n", ("m", "m")), (("x",), ("x",)))
    assert outer.lax(inner).on_basis(nested) == {flat: -ONE}
    assert outer.lax_inverse(inner).on_basis(flat) == {nested: -ONE}


def test_cotensor_contra_transposes_with_a_sign(truncation):
    x = GradedSpace({0: [("x",)], 1: [("y",)]})
    m = SymSeq.from_keys([("a", 1, 0, 0)])
    n = SymSeq.from_keys([("b", 1, 1, 0)])
    f = LinearOp(lambda key: {"b": 2 * ONE} if key == "a" else {}, 1, "f")
    contra = cotensor_contra(f, m, n, x, truncation())
    assert contra(("E", "b", (("x",),))) == {("E", "a", (("x",),)): -2 * ONE}
    assert contra(("E", "b", (("y",),))) == {("E", "a", (("y",),)): 2 * ONE}
    with pytest.raises(ValidationError):
        cotensor_contra(LinearOp(lambda key: {key: ONE}, 0, "id"), _binary(1), _binary(-1), x, truncation())


def test_lax_map_flattens_nested_cotensors(truncation):
    x = GradedSpace({0: [("x",)]})
    m = SymSeq.from_keys([("m", 1, 1, 0)])
    n = SymSeq.from_keys([("n", 2, 0, 0)])
    phi = ("E", "m", (("x",),))
    lax = lax_map(n, m, x, truncation())
    assert lax(("E", "n", (phi, phi))) == {("E", ("n", ("m", "m")), (("x",), ("x",))): -ONE}
    assert lax.rank(-2) == lax.source.dim(-2) == 1
    with pytest.raises(UnsupportedError):
        lax_map(_binary(), unit_seq(planar=False), x, truncation())
