"""Canonical topology, completion and the non-complete algebra."""

import pytest

from services.algcog import free_algebra_coperad
from services.builtins import qx_coperad
from services.completion import (
    CounterexampleModel,
    canonical_topology,
    complete,
    counterexample_run,
    devissage_check,
    ideal_closure,
    ideal_generated,
    ideal_image,
    ideal_intersection,
    ideal_sum,
    infinite_ideal,
    is_continuous,
    is_fibration,
    is_ideal,
    quotient_algebra,
    quotient_cotensor_dims,
    radical_cofiltration,
    topology_report,
)
from services.errors import ValidationError
from services.graded import GradedMap, GradedSubspace, disc
from services.qlinalg import ONE

LINE = CounterexampleModel.LINE


@pytest.fixture
def free_level(small):
    return free_algebra_coperad(qx_coperad(small), disc(0)).top


def test_canonical_topology_of_a_free_level(small, free_level):
    topology = canonical_topology(free_level)
    # IⁿΛ is spanned by the letters under chains of weight > n
    assert [ideal.total_dim() for ideal in topology] == [8, 4, 2, 0]
    q = qx_coperad(small)
    for n in (1, 2):
        dims = {d: k for d, k in topology[n].dims.items() if k}
        assert dims == quotient_cotensor_dims(q, disc(0).space, n, small) == {0: 3 - n, -1: 3 - n}
    assert topology_report(free_level, topology).passed


def test_generated_ideal_absorbs_the_action(free_level):
    top_letter = GradedSubspace.span(free_level.carrier, [{("E", (), (("top",),)): ONE}])
    ideal = ideal_generated(free_level, top_letter)
    # the letter under ι, X, X² and X³
    assert ideal.total_dim() == 4
    assert ideal_closure(free_level, top_letter).sub == ideal.sub


def test_radical_cofiltration(free_level):
    tower = radical_cofiltration(free_level)
    assert tower.dims() == [0, 4, 6, 8]
    assert [sum(d.values()) for d in tower.graded_dims()] == [4, 2, 2]
    assert all(tower.graded_square_zero)


def test_free_algebras_are_complete_once_headed(free_level):
    headed = free_level.with_head(1)
    assert infinite_ideal(headed).total_dim() == 0
    assert complete(headed).isomorphism
    # without a head the top ideal survives every truncated intersection
    assert infinite_ideal(free_level).total_dim() == 2


def test_identity_is_a_devissage_equivalence(free_level):
    identity = GradedMap.identity(free_level.carrier)
    result = devissage_check(identity, free_level, free_level)
    assert result.equivalence
    assert sorted(result.stages) == [0, 1]


def test_counterexample_model_shift():
    model = CounterexampleModel(3)
    assert model.dim == 7
    assert model.epsilon({("T", 2, 1): ONE}) == {("T", 2, 2): ONE, LINE: ONE}
    assert model.epsilon_power({("T", 2, 1): ONE}, 2) == {LINE: ONE}
    assert model.epsilon({LINE: ONE}) == {}
    with pytest.raises(ValidationError):
        CounterexampleModel(1)


def test_counterexample_at_size_two():
    result = counterexample_run(2, seed=3)
    assert result.passed, result.report.failures()
    assert [check.name for check in result.report] == [
        "unit",
        "associativity",
        "spectrum",
        "line_in_images",
        "epsilon_on_intersection",
        "witnesses",
        "finite_nilpotent",
    ]
    assert result.data["image_ranks"] == [2]


def test_counterexample_is_not_complete(truncation):
    coperad = qx_coperad(truncation(max_arity=1, max_weight=7))
    result = counterexample_run(8, seed=0, trials=10, coperad=coperad)
    assert result.passed, result.report.failures()
    assert result.report.get("topology").passed
    assert result.data["infinite_ideal_dim"] >= 1
    assert result.data["witnesses"][7] == "e(7,1)"
    # at finite size the corner entry e(7,7) sits in every image but not in ker ε
    assert result.data["intersection_in_kernel"] is False


def test_ideals_along_a_quotient(free_level):
    topology = canonical_topology(free_level)
    quotient, pi = quotient_algebra(free_level, topology[2].sub, "Λ/I²")
    image = ideal_image(pi, topology[1], quotient)
    assert image.total_dim() == 2
    assert is_ideal(quotient, image.sub)
    assert is_continuous(pi, free_level, quotient)
    assert is_fibration([pi])
    both = ideal_sum(topology[1], topology[2])
    assert both == topology[1]
    assert ideal_intersection(topology[1], topology[2]) == topology[2]
