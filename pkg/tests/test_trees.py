"""Planar trees: grafting signs, cuts, contractions and enumeration."""

import pytest

from services.errors import TruncationError
from services.trees import (
    UNIT,
    Label,
    arity,
    assemble,
    contractions,
    corolla,
    cuts,
    enumerate_trees,
    graft,
    partial_compose,
    render,
    substitute_vertex,
    weight,
)

MU = Label("μ", 0, 2)
A = Label("a", 1, 2)
B = Label("b", 1, 1)
C = Label("c", 1, 1)


def test_graft_and_arity():
    t = graft(corolla(MU), 2, corolla(MU))
    assert arity(t) == 3
    assert weight(t) == 2
    assert render(t) == "μ(|, μ(|, |))"
    with pytest.raises(IndexError):
        graft(corolla(MU), 3, corolla(MU))


def test_partial_compose_sign_follows_preorder():
    # a(|, c) ∘₁ b = a(b, c): b overtakes c
    t = (A, (UNIT, corolla(C)))
    result, sign = partial_compose(t, 1, corolla(B))
    assert result == (A, (corolla(B), corolla(C)))
    assert sign == -1
    _, sign = partial_compose(t, 2, corolla(B))
    assert sign == 1


def test_assemble_checks_the_number_of_tops():
    with pytest.raises(ValueError):
        assemble(corolla(A), [UNIT])
    tree, sign = assemble(corolla(A), [corolla(B), corolla(C)])
    assert tree == (A, (corolla(B), corolla(C)))
    assert sign == 1


def test_cuts_of_a_two_vertex_tree():
    t = (A, (corolla(B), UNIT))
    found = cuts(t)
    assert len(found) == 3
    bottoms = [render(c.bottom) for c in found]
    assert bottoms == ["|", "a(|, |)", "a(b(|), |)"]
    assert all(c.sign == 1 for c in found)


def test_contractions_cover_every_connected_subtree():
    t = (A, (corolla(B), UNIT))
    assert sorted(render(c.subtree) for c in contractions(t)) == ["a(b(|), |)", "a(|, |)", "b(|)"]


def test_substitute_vertex_keeps_children():
    t = (A, (corolla(B), UNIT))
    result, sign = substitute_vertex(t, 1, corolla(C))
    assert result == (A, (corolla(C), UNIT))
    assert sign == 1


def test_enumeration_order_and_bounds():
    trees = enumerate_trees([MU], max_weight=2, max_arity=3)
    assert [render(t) for t in trees] == ["|", "μ(|, |)", "μ(|, μ(|, |))", "μ(μ(|, |), |)"]
    assert enumerate_trees([MU], max_weight=2, max_arity=2, include_unit=False) == [corolla(MU)]


def test_enumeration_rejects_weightless_generators():
    with pytest.raises(TruncationError):
        enumerate_trees([Label("z", 0, 1, 0)], max_weight=2, max_arity=2)
