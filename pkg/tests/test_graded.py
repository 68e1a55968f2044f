"""Graded spaces, Koszul signs and chain complexes."""

import numpy as np
import pytest

from services.errors import ShapeMismatchError, ValidationError
from services.graded import (
    ChainComplex,
    GradedMap,
    GradedSpace,
    compose,
    curry_map,
    disc,
    hom_pairing,
    homology_dims,
    is_quasi_iso,
    koszul_sign,
    permutation_sign,
    tensor_map,
    tensor_space,
)
from services.qlinalg import ONE


def test_koszul_signs():
    assert koszul_sign([(1, 1)]) == -1
    assert koszul_sign([(1, 2), (2, 3)]) == 1
    assert permutation_sign([1, 1], [1, 0]) == -1
    assert permutation_sign([1, 2, 1], [2, 1, 0]) == -1
    assert permutation_sign([1, 1, 1], [0, 1, 2]) == 1


def test_repeated_basis_label_is_rejected():
    with pytest.raises(ValidationError):
        GradedSpace({0: [("a",)], 1: [("a",)]})


def test_tensor_map_sign_convention():
    x = GradedSpace({1: [("x",)]})
    d = disc(1).differential
    f = tensor_map(GradedMap.identity(x), d)
    assert f((("x",), ("top",))) == {(("x",), ("bottom",)): -ONE}
    assert tensor_space(x, disc(1).space).dims == {1: 1, 2: 1}


def test_hom_pairing_sign_convention():
    y = GradedSpace({1: [("y",)]})
    d = disc(1).differential
    pairing = hom_pairing(d, GradedMap.identity(y))
    # φ has degree 1 and d has degree -1
    assert pairing(("E", ("bottom",), ("y",))) == {("E", ("top",), ("y",)): -ONE}


def test_curry_map_is_a_relabelling():
    x = GradedSpace({0: [("a",)]})
    x_prime = GradedSpace({1: [("b",)]})
    y = GradedSpace({1: [("c",)]})
    curry = curry_map(x, x_prime, y)
    assert curry(("E", (("a",), ("b",)), ("c",))) == {("E", ("a",), ("E", ("b",), ("c",))): ONE}


def test_chain_complex_rejects_nonzero_square():
    space = GradedSpace({2: [("a",)], 1: [("b",)], 0: [("c",)]})
    d = GradedMap.from_function(space, space, -1, lambda k: {("a",): {("b",): ONE}, ("b",): {("c",): ONE}}.get(k, {}))
    with pytest.raises(ValidationError):
        ChainComplex(space, d)


def test_from_function_rejects_wrong_degree():
    space = GradedSpace({0: [("a",)], 1: [("b",)]})
    with pytest.raises(ShapeMismatchError):
        GradedMap.from_function(space, space, -1, lambda k: {("a",): ONE} if k == ("a",) else {})


def test_disc_is_acyclic_in_every_shift():
    assert homology_dims(disc(0)) == {}
    assert homology_dims(disc(3).shift(2)) == {}
    assert disc(3).shift(2).space.dims == {5: 1, 4: 1}


def test_homology_of_a_sum_and_window():
    point = ChainComplex(GradedSpace({0: [("v",)], 5: [("w",)]}))
    total = point.direct_sum(disc(1))
    assert homology_dims(total) == {0: 1, 5: 1}
    assert homology_dims(total, (-1, 2)) == {0: 1}


def test_quasi_isomorphism_detects_the_inclusion():
    point = ChainComplex(GradedSpace({0: [("v",)]}))
    total = point.direct_sum(disc(1))
    inclusion = GradedMap.from_function(point.space, total.space, 0, lambda k: {(0, k): ONE})
    assert is_quasi_iso(inclusion, point, total, (-1, 2))
    assert not is_quasi_iso(GradedMap.zero(point.space, total.space), point, total, (-1, 2))


def _random_space(rng, name):
    degrees = rng.choice(np.arange(-3, 4), size=int(rng.integers(1, 3)), replace=False)
    return GradedSpace({int(d): [(name, int(d), i) for i in range(int(rng.integers(1, 4)))] for d in degrees})


def _random_map(rng, source, target):
    degree = int(rng.integers(-2, 3))

    def on_basis(key):
        images = target.basis(source.degree_of(key) + degree)
        return {k: ONE * int(rng.integers(-2, 3)) for k in images}

    return GradedMap.from_function(source, target, degree, on_basis)


@pytest.mark.parametrize("seed", range(50))
def test_sign_rules_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    x, x1, x2, x3 = (_random_space(rng, name) for name in ("x", "x1", "x2", "x3"))
    y, y1, y2 = (_random_space(rng, name) for name in ("y", "y1", "y2"))
    f1, f, h = _random_map(rng, x, x1), _random_map(rng, x1, x2), _random_map(rng, x3, x)
    g1, g = _random_map(rng, y, y1), _random_map(rng, y1, y2)

    # (f⊗g)∘(f1⊗g1) = (−1)^{|g||f1|} (f∘f1)⊗(g∘g1)
    lhs = compose(tensor_map(f, g), tensor_map(f1, g1))
    assert lhs == tensor_map(compose(f, f1), compose(g, g1)).scale(koszul_sign([(g.degree, f1.degree)]))

    # [h,g]∘[f1,g1] = (−1)^{|h|(|f1|+|g1|)} [f1∘h, g∘g1]
    lhs = compose(hom_pairing(h, g), hom_pairing(f1, g1))
    sign = koszul_sign([(h.degree, f1.degree + g1.degree)])
    assert lhs == hom_pairing(compose(f1, h), compose(g, g1)).scale(sign)

    # X^{f1}∘X^f = (−1)^{|f1||f|} X^{f∘f1}
    identity = GradedMap.identity(y)
    lhs = compose(hom_pairing(f1, identity), hom_pairing(f, identity))
    assert lhs == hom_pairing(compose(f, f1), identity).scale(koszul_sign([(f1.degree, f.degree)]))
