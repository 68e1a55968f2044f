"""Bar, Bar† and twisting morphisms."""

import pytest

from services.barcobar import (
    CURVATURE_LABEL,
    bar,
    bar_dual,
    bar_twisting,
    canonical_alpha,
    check_twisting,
    is_twisting,
    perturb,
)
from services.builtins import as_planar, com_coperad, qx_coperad, unit_operad
from services.errors import UnsupportedError, ValidationError
from services.graded import ChainComplex, GradedMap, GradedSpace, homology_dims
from services.opcop import (
    CofreeCoperad,
    CurvedCoperad,
    Operad,
    SymmetricCoperad,
    free_operad,
    validate_curved_coperad,
    validate_operad,
)
from services.qlinalg import ONE, ZERO
from services.symseq import SymSeq
from services.trees import UNIT, Label, corolla

BAR_DUAL_AXIOMS = ["unit", "sequential_associativity", "parallel_associativity", "derivation", "square_zero"]


def _degree_totals(dims):
    totals = {}
    for by_degree in dims.values():
        for d, n in by_degree.items():
            totals[d] = totals.get(d, 0) + n
    return totals


def test_bar_of_the_unit_operad(truncation):
    t = truncation(max_weight=3)
    q = bar(unit_operad(t), t)
    # words of length ≤ 3 in sη (degree 1) and the curvature cogenerator (degree 2)
    assert _degree_totals(q.seq.dims) == {0: 1, 1: 1, 2: 2, 3: 3, 4: 4, 5: 3, 6: 1}
    assert validate_curved_coperad(q).passed


def test_bar_of_planar_as_is_a_curved_coperad(small):
    q = bar(as_planar(small), small)
    report = validate_curved_coperad(q)
    assert report.passed, report.failures()
    curvature = q.cogenerator(CURVATURE_LABEL)
    assert q.theta(curvature) == ONE
    # the coderivation sends the curvature cogenerator to the suspended unit
    assert q.d.on_basis(curvature) == {q.cogenerator(("s", ("μ", 1))): ONE}


def test_bar_rejects_arity_zero(small):
    unit, point = ("η",), ("k",)
    seq = SymSeq.from_keys([(unit, 1, 0, 0), (point, 0, 0, 0)])
    p = Operad("pointed", seq, unit, lambda x, i, y: {y: ONE} if x == unit else {}, truncation=small)
    with pytest.raises(UnsupportedError):
        bar(p, small)


def test_bar_rejects_symmetric_operads(small):
    space = GradedSpace({0: [("μ",)]})
    gens = SymSeq({2: space}, actions={2: [GradedMap.identity(space)]}, planar=False)
    with pytest.raises(UnsupportedError):
        bar(free_operad(gens, small, planar=False), small)


def test_bar_dual_of_qx(small):
    p = bar_dual(qx_coperad(small), small)
    report = validate_operad(p, BAR_DUAL_AXIOMS)
    assert report.passed, report.failures()
    # one generator s⁻¹Xⁿ of degree −1 per word length 1 ≤ n ≤ 3
    assert len(p.generators) == 3
    assert all(label.degree == -1 for label in p.generators)


def test_bar_dual_derivation_follows_the_decomposition(small):
    q = qx_coperad(small)
    p = bar_dual(q, small)
    x = q.cogenerator("X")
    xx = (x[0], (x,))
    e = {z: corolla(p.label(name)) for name, z in p.generator_of.items()}
    # w₂(X²) = (X; X) and |X| = 0
    assert p.d.on_basis(e[xx]) == {(e[x][0], (e[x],)): -ONE}
    assert p.d.on_basis(e[x]) == {}


def test_bar_dual_of_a_curved_coperad_reaches_the_unit(small):
    q = CofreeCoperad("ℚ[X]θ", [Label("X", 2, 1, 1)], small, curvature_values={"X": ONE})
    p = bar_dual(q, small)
    e_x = corolla(p.label(("e", q.cogenerator("X"))))
    assert p.d.on_basis(e_x) == {UNIT: ONE}
    assert validate_operad(p, BAR_DUAL_AXIOMS).passed


def test_bar_dual_needs_a_cogmentation(small):
    unit = ("ι",)
    seq = SymSeq.from_keys([(unit, 1, 0, 0)])
    q = CurvedCoperad("flat", seq, unit, lambda z: {(unit, (unit,)): ONE}, lambda z: ZERO, truncation=small)
    with pytest.raises(ValidationError):
        bar_dual(q, small)


def test_canonical_twisting_morphism(small):
    q = qx_coperad(small)
    twisting = canonical_alpha(q, bar_dual(q, small))
    assert twisting.kills_cogmentation
    assert check_twisting(twisting.alpha, q, twisting.operad).is_zero()
    assert is_twisting(twisting.alpha, q, twisting.operad)


def test_perturbed_twisting_morphism_is_detected(small):
    q = qx_coperad(small)
    twisting = canonical_alpha(q, bar_dual(q, small))
    x = q.cogenerator("X")
    doubled = perturb(twisting.alpha, x, twisting.alpha.on_basis(x))
    assert not is_twisting(doubled, q, twisting.operad)


def test_bar_twisting_morphism(small):
    p = as_planar(small)
    twisting = bar_twisting(p, bar(p, small))
    assert is_twisting(twisting.alpha, twisting.coperad, p)



def test_bar_of_planar_as_at_arity_and_weight_four(truncation):
    t = truncation(max_arity=4, max_weight=4)
    report = validate_curved_coperad(bar(as_planar(t), t))
    assert report.passed, report.failures()


def test_bar_dual_of_bar_as_squares_to_zero(truncation):
    t = truncation(max_arity=3, max_weight=3)
    p = bar_dual(bar(as_planar(t), t), t)
    report = validate_operad(p, ["derivation", "square_zero"])
    assert report.passed, report.failures()


def test_twisting_residuals_vanish_at_weight_three(truncation):
    t = truncation(max_arity=3, max_weight=3)
    for q in (bar(as_planar(t), t), qx_coperad(t)):
        twisting = canonical_alpha(q, bar_dual(q, t))
        assert check_twisting(twisting.alpha, q, twisting.operad).is_zero()
        assert is_twisting(twisting.alpha, q, twisting.operad)


# symmetric Bar†


def test_symmetric_bar_dual_of_com(truncation):
    t = truncation(max_arity=3, max_weight=2)
    p = bar_dual(com_coperad(t), t)
    assert not p.planar
    # s⁻¹c₂, s⁻¹c₃ and the three trees (ab)c, (ac)b, (bc)a
    assert p.seq.dims == {1: {0: 1}, 2: {-1: 1}, 3: {-1: 1, -2: 3}}
    space = p.seq.component(3)
    # the arity 3 homology is the two-dimensional Lie(3)
    assert homology_dims(ChainComplex(space, p.d.materialize(space, space))) == {-2: 2}


def test_symmetric_bar_dual_satisfies_the_operad_axioms(truncation):
    t = truncation(max_arity=4, max_weight=3)
    p = bar_dual(com_coperad(t), t)
    report = validate_operad(p, BAR_DUAL_AXIOMS + ["equivariance"])
    assert report.passed, report.failures()


def test_symmetric_canonical_twisting_morphism(truncation):
    t = truncation(max_arity=4, max_weight=3)
    q = com_coperad(t)
    twisting = canonical_alpha(q, bar_dual(q, t))
    assert twisting.beta is None
    assert is_twisting(twisting.alpha, q, twisting.operad)
    c3 = ("c", 3)
    assert not is_twisting(perturb(twisting.alpha, c3, twisting.alpha.on_basis(c3)), q, twisting.operad)


def test_symmetric_coperad_checks_its_relabellings(small):
    unit, c2 = ("ι",), ("c", 2)
    seq = SymSeq.from_keys([(unit, 1, 0, 0), (c2, 2, 0, 1)], planar=False)
    q = SymmetricCoperad("bad", seq, unit, lambda z: {(c2, 1, c2, (1, 1)): ONE}, lambda z: ONE if z == unit else ZERO)
    with pytest.raises(ValidationError):
        q.w2(c2)
    with pytest.raises(UnsupportedError):
        q.w(c2)
    report = validate_curved_coperad(com_coperad(small))
    assert [c.name for c in report] == ["cogmentation", "equivariance"]
    assert report.passed
