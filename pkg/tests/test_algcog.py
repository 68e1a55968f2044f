"""Algebras and cogebras over operads and coperads."""

import numpy as np
import pytest

from services import builtins
from services.algcog import (
    AlgebraOverOperad,
    CogebraOverOperad,
    check_square_zero_Pcog,
    check_square_zero_Qalg,
    extend_coderivation_Pcog,
    extend_derivation_Qalg,
    free_algebra_coperad,
    free_algebra_operad,
    free_cogebra_coperad,
    free_cogebra_operad,
    lax_is_injective,
    restrict_coderivation_Pcog,
    restrict_derivation_Qalg,
    validate_algebra,
    validate_cogebra_coperad,
    validate_cogebra_operad,
    validate_qalgebra,
    validate_tower,
)
from services.barcobar import bar_dual
from services.errors import ShapeMismatchError
from services.graded import ChainComplex, GradedSpace, disc
from services.qlinalg import ONE
from services.trees import UNIT, corolla

TOP, BOTTOM = ("top",), ("bottom",)


def test_free_algebra_over_planar_as(small):
    alg = free_algebra_operad(builtins.as_planar(small), disc(0))
    # μₙ on words of length n over {top, bottom}
    assert alg.carrier.total_dim == 2 + 4 + 8
    report = validate_algebra(alg)
    assert report.passed, report.failures()


def test_action_checks_the_number_of_inputs(small):
    alg = free_algebra_operad(builtins.unit_operad(small), disc(0))
    assert isinstance(alg, AlgebraOverOperad)
    with pytest.raises(ShapeMismatchError):
        alg.act(alg.operad.unit, (TOP, TOP))


def test_free_tower_over_qx(small):
    tower = free_algebra_coperad(builtins.qx_coperad(small), disc(0))
    assert tower.total_dims() == [2, 4, 6, 8]
    report = validate_tower(tower)
    assert report.passed, report.failures()
    assert restrict_derivation_Qalg(tower) == {TOP: {("E", UNIT, (BOTTOM,)): ONE}, BOTTOM: {}}
    assert check_square_zero_Qalg(tower, tower.generator_values).passed


def test_derivation_values_must_have_the_right_degree(small):
    tower = free_algebra_coperad(builtins.qx_coperad(small), disc(0))
    with pytest.raises(ShapeMismatchError):
        extend_derivation_Qalg(tower, lambda key: {("E", UNIT, (TOP,)): ONE} if key == TOP else {})


def test_head_acts_by_zero(small):
    tower = free_algebra_coperad(builtins.qx_coperad(small), disc(0))
    level = tower.level(1)
    headed = level.with_head(2)
    assert headed.level == 3
    x = builtins.qx_coperad(small).cogenerator("X")
    xx = (x[0], (x,))
    element = ("E", UNIT, (TOP,))
    assert level.act(xx, (element,)) == {}
    assert headed.act(xx, (element,)) == {}
    assert validate_qalgebra(headed).passed


@pytest.mark.parametrize("name", ["onedim-cogebra", "twodim-cogebra", "coaction-cogebra"])
def test_builtin_cogebras_over_bar_dual(small, name):
    v = builtins.build_cogebra(f"builtin:{name}", builtins.qx_coperad(small), small)
    report = validate_cogebra_operad(v)
    assert report.passed, report.failures()


def test_wrong_counit_is_reported(small):
    p = bar_dual(builtins.qx_coperad(small), small)
    carrier = GradedSpace({0: [("v",)]})
    v = CogebraOverOperad(p, carrier, lambda key: {("E", p.unit, (key,)): 2 * ONE}, name="2v")
    report = validate_cogebra_operad(v)
    assert not report.get("counit").passed


def test_free_cogebra_over_a_coperad(small):
    v = free_cogebra_coperad(builtins.qx_coperad(small), disc(0))
    # one letter under each of ι, X, X², X³
    assert v.carrier.total_dim == 8
    report = validate_cogebra_coperad(v)
    assert report.passed, report.failures()


# free cogebras over Bar†(Q) and the square-zero criteria


@pytest.fixture
def qx_dual(truncation):
    t = truncation(max_arity=1, max_weight=3, window=(-8, 8))
    q = builtins.qx_coperad(t)
    return q, bar_dual(q, t), t


@pytest.fixture
def three_letters():
    return ChainComplex(GradedSpace({1: [("x1",)], 0: [("x0",)], -1: [("x-1",)]}))


def test_free_cogebra_over_bar_dual(qx_dual):
    _, p, t = qx_dual
    lp = free_cogebra_operad(p, disc(0), t)
    # the eight arity 1 trees of weight ≤ 3, each over one of two letters
    assert lp.carrier.total_dim == 16
    report = validate_cogebra_operad(lp)
    assert report.passed, report.failures()
    assert lax_is_injective(lp)
    restricted = restrict_coderivation_Pcog(lp)
    assert restricted[("E", p.unit, (TOP,))] == {BOTTOM: ONE}
    assert all(not value for key, value in restricted.items() if key[1] != p.unit)
    assert check_square_zero_Pcog(lp, lp.generator_values).passed


def test_coderivation_that_does_not_square_to_zero(qx_dual):
    q, p, t = qx_dual
    lp = free_cogebra_operad(p, disc(0), t)
    e_x = corolla(p.label(("e", q.cogenerator("X"))))
    values = {("E", p.unit, (TOP,)): {BOTTOM: ONE}, ("E", e_x, (TOP,)): {TOP: ONE}}

    def f(key):
        return values.get(key, {})

    report = check_square_zero_Pcog(extend_coderivation_Pcog(lp, f), f)
    assert not report.get("generator").passed
    assert not report.get("square").passed
    assert report.get("equivalence").passed


def _random_values(rng, keys, degree_of, targets):
    values = {}
    for key in keys:
        if rng.random() < 0.5:
            continue
        values[key] = {k: ONE * int(rng.integers(-2, 3)) for k, d in targets if d == degree_of(key) - 1}

    def f(key):
        return {k: c for k, c in values.get(key, {}).items() if c}

    return f


@pytest.mark.parametrize("seed", range(20))
def test_square_zero_criteria_agree_on_random_coderivations(qx_dual, seed):
    _, p, t = qx_dual
    x = disc(0)
    lp = free_cogebra_operad(p, x, t)
    rng = np.random.default_rng(seed)
    targets = [(k, x.space.degree_of(k)) for k in x.space.keys()]
    f = _random_values(rng, lp.carrier.keys(), lp.carrier.degree_of, targets)
    report = check_square_zero_Pcog(extend_coderivation_Pcog(lp, f), f)
    assert report.get("equivalence").passed, report.get("equivalence").detail


def test_derivation_that_does_not_square_to_zero(small, three_letters):
    q = builtins.qx_coperad(small)
    tower = free_algebra_coperad(q, three_letters, small)
    unit = q.unit
    values = {("x1",): {("E", unit, (("x0",),)): ONE}, ("x0",): {("E", unit, (("x-1",),)): ONE}}

    def f(key):
        return values.get(key, {})

    report = check_square_zero_Qalg(extend_derivation_Qalg(tower, f), f)
    assert not report.get("level0.generator").passed
    assert not report.get("level0.square").passed
    assert all(report.get(f"level{n}.equivalence").passed for n in range(len(tower.levels)))


@pytest.mark.parametrize("seed", range(20))
def test_square_zero_criteria_agree_on_random_derivations(small, three_letters, seed):
    q = builtins.qx_coperad(small)
    tower = free_algebra_coperad(q, three_letters, small)
    rng = np.random.default_rng(seed)
    below = {("x1",): ("x0",), ("x0",): ("x-1",)}
    values = {
        key: {("E", z, (letter,)): ONE * int(rng.integers(-2, 3)) for z in q.keys(1)}
        for key, letter in below.items()
        if rng.random() < 0.75
    }

    def f(key):
        return {e: c for e, c in values.get(key, {}).items() if c}

    report = check_square_zero_Qalg(extend_derivation_Qalg(tower, f), f)
    for n in range(len(tower.levels)):
        check = report.get(f"level{n}.equivalence")
        assert check.passed, check.detail
