"""Operads, curved coperads and the coradical filtration."""

import pytest

from services.builtins import as_planar, grouplike_coperad, qx_coperad, unit_operad
from services.errors import ShapeMismatchError, ValidationError
from services.graded import GradedMap, GradedSpace
from services.opcop import (
    CofreeCoperad,
    Operad,
    check_derivation,
    check_factorisation,
    check_subcoperad,
    coradical_filtration,
    extend_derivation,
    free_operad,
    is_locally_conilpotent,
    restrict_derivation,
    validate_curved_coperad,
    validate_operad,
)
from services.qlinalg import ONE
from services.symseq import SymSeq
from services.trees import UNIT, Label, corolla


def test_builtin_operads_satisfy_every_axiom(small):
    assert validate_operad(unit_operad(small)).passed
    report = validate_operad(as_planar(small))
    assert report.passed
    # planar operads skip the equivariance check
    assert [c.name for c in report] == [
        "unit",
        "sequential_associativity",
        "parallel_associativity",
        "derivation",
        "square_zero",
    ]


def test_broken_composition_is_reported_not_raised(small):
    ops = {n: ("μ", n) for n in range(1, 4)}
    seq = SymSeq.from_keys([(key, n, 0, n - 1) for n, key in ops.items()])

    def partial(x, i, y):
        n = x[1] + y[1] - 1
        return {ops[n]: ONE * i} if n in ops else {}

    report = validate_operad(Operad("As'", seq, ops[1], partial, truncation=small))
    assert not report.passed
    assert not report.get("unit").passed
    assert "∘2 η" in report.get("unit").detail


def test_operad_rejects_a_bad_unit(small):
    seq = SymSeq.from_keys([(("μ",), 2, 0, 1)])
    with pytest.raises(ValidationError):
        Operad("bad", seq, ("μ",), lambda x, i, y: {}, truncation=small)


def test_free_operad_dims_and_axioms(small):
    p = free_operad(SymSeq.from_keys([("μ", 2, 0, 1)]), small)
    assert p.seq.dims == {1: {0: 1}, 2: {0: 1}, 3: {0: 2}}
    assert validate_operad(p).passed


def test_symmetric_free_operad_on_a_commutative_generator(small):
    space = GradedSpace({0: [("μ",)]})
    gens = SymSeq({2: space}, actions={2: [GradedMap.identity(space)]}, planar=False)
    p = free_operad(gens, small, planar=False)
    # (ab)c, (ac)b and (bc)a
    assert p.seq.dims == {1: {0: 1}, 2: {0: 1}, 3: {0: 3}}
    assert validate_operad(p, ["unit"]).passed


def test_extended_derivation_is_a_square_zero_derivation(small):
    p = free_operad(SymSeq.from_keys([("μ", 2, 0, 1), ("ν", 2, 1, 1)]), small)
    d = extend_derivation(p, {"ν": {corolla(p.label("μ")): ONE}}, -1)
    assert check_derivation(p, d) is None
    assert validate_operad(p.with_differential(d)).passed
    assert restrict_derivation(p, d)["ν"] == {corolla(p.label("μ")): ONE}
    assert restrict_derivation(p, d)["μ"] == {}


def test_derivation_on_a_symmetric_free_operad(small):
    space = GradedSpace({0: [("μ",)], 1: [("ν",)]})
    gens = SymSeq({2: space}, actions={2: [GradedMap.identity(space)]}, planar=False)
    p = free_operad(gens, small, planar=False)
    d = extend_derivation(p, {("ν",): p.generator_class(("μ",))}, -1)
    assert check_derivation(p, d) is None
    report = validate_operad(p.with_differential(d))
    assert report.passed, report.failures()
    assert restrict_derivation(p, d)[("ν",)] == p.generator_class(("μ",))
    assert restrict_derivation(p, d)[("μ",)] == {}


def test_derivation_value_of_the_wrong_degree(small):
    p = free_operad(SymSeq.from_keys([("μ", 2, 0, 1), ("ν", 2, 1, 1)]), small)
    with pytest.raises(ShapeMismatchError):
        extend_derivation(p, {"μ": {corolla(p.label("ν")): ONE}}, -1)


def test_builtin_coperads_satisfy_every_axiom(small):
    assert validate_curved_coperad(qx_coperad(small)).passed
    assert validate_curved_coperad(grouplike_coperad(small)).passed


def test_central_curvature_is_accepted(small):
    q = CofreeCoperad("ℚ[X]θ", [Label("X", 2, 1, 1)], small, curvature_values={"X": ONE})
    assert q.theta(q.cogenerator("X")) == ONE
    assert validate_curved_coperad(q).passed


def test_decomposition_of_a_word(small):
    q = qx_coperad(small)
    x = q.cogenerator("X")
    xx = (x[0], (x,))
    assert q.w(xx) == {(UNIT, (xx,)): ONE, (x, (x,)): ONE, (xx, (UNIT,)): ONE}
    assert q.w_bar(xx) == {(x, (x,)): ONE}
    assert q.w2(xx) == {(x, 1, x): ONE}


def test_coradical_filtration_of_qx(truncation):
    q = qx_coperad(truncation(max_weight=5))
    filtration = coradical_filtration(q, truncation(max_weight=5))
    assert [sum(filtration.dims(n).values()) for n in range(len(filtration.stages))] == [1, 2, 3, 4, 5, 6]
    assert filtration.exhausts()
    assert check_subcoperad(filtration, 2) is None
    assert check_factorisation(filtration, 1) is None


def test_grouplike_element_is_not_conilpotent(small):
    filtration = coradical_filtration(grouplike_coperad(small), small)
    assert filtration.stable
    assert not filtration.exhausts()
    assert filtration.dims(5) == {1: 1}


def test_extended_coderivation_on_a_cofree_coperad(small):
    x, y = Label("X", 1, 1), Label("Y", 0, 1)

    def projection(tree):
        return {y: ONE} if tree == corolla(x) else {}

    q = CofreeCoperad("T(X→Y)", [x, y], small, projection=projection)
    assert q.d.on_basis(q.cogenerator("X")) == {q.cogenerator("Y"): ONE}
    report = validate_curved_coperad(q)
    assert report.passed, report.failures()
    bad = CofreeCoperad("T(X→X)", [x, y], small, projection=lambda tree: {x: ONE} if tree == corolla(x) else {})
    with pytest.raises(ShapeMismatchError):
        bad.d.on_basis(bad.cogenerator("X"))


def test_local_conilpotence(small):
    assert is_locally_conilpotent(qx_coperad(small), small)
    assert not is_locally_conilpotent(grouplike_coperad(small), small)
