"""Cobar, its dual and the resolution C†C V."""

import pytest

from services import builtins
from services.algcog import free_algebra_coperad, lax_is_injective, restrict_coderivation_Pcog
from services.barcobar import bar_dual, canonical_alpha
from services.cobar import (
    PIECES,
    TrustWindow,
    cobar,
    cobar_dual,
    cobar_dual_functoriality,
    cobar_dual_report,
    cobar_functoriality,
    cobar_morphism,
    cobar_report,
    resolution_report,
    tree_identity_report,
    unit_resolution,
    verify_acyclicity,
    verify_homotopy_identities,
)
from services.errors import ShapeMismatchError
from services.graded import GradedMap, disc
from services.keyed import vadd
from services.qlinalg import ONE


@pytest.fixture
def qx_setting(truncation):
    t = truncation(max_arity=1, max_weight=3, window=(-8, 8))
    q = builtins.qx_coperad(t)
    p = bar_dual(q, t)
    return t, q, p, canonical_alpha(q, p)


@pytest.mark.parametrize("name", ["onedim-cogebra", "twodim-cogebra", "coaction-cogebra"])
def test_cobar_of_builtin_cogebras(qx_setting, name):
    t, q, p, twisting = qx_setting
    v = builtins.lookup(name, "cogebra").build(p)
    tower = cobar(v, twisting, t)
    assert tower.total_dims() == [n * v.carrier.total_dim for n in range(1, 5)]
    report = cobar_report(tower)
    assert report.passed, report.failures()


def test_cobar_refuses_a_cogebra_over_another_operad(qx_setting):
    t, q, _, twisting = qx_setting
    other = bar_dual(q, t)
    with pytest.raises(ShapeMismatchError):
        cobar(builtins.onedim_cogebra(other), twisting, t)


def test_cobar_dual_of_a_free_level(qx_setting):
    t, q, _, twisting = qx_setting
    tower = free_algebra_coperad(q, disc(0), t)
    lp = cobar_dual(tower, twisting, level=1)
    report = cobar_dual_report(lp)
    assert report.passed, report.failures()
    assert lax_is_injective(lp)
    restricted = restrict_coderivation_Pcog(lp)
    assert all(not vadd(dict(restricted[key]), lp.b(key), -ONE) for key in lp.carrier.keys())


def _onedim_to_twodim(p):
    v, w = builtins.onedim_cogebra(p), builtins.twodim_cogebra(p)
    return v, w, GradedMap.from_function(v.carrier, w.carrier, 0, lambda key: {("y",): ONE})


def test_cobar_sends_morphisms_to_morphisms(qx_setting):
    t, _, p, twisting = qx_setting
    v, w, f = _onedim_to_twodim(p)
    report = cobar_functoriality(f, v, w, twisting, t)
    assert report.passed, report.failures()
    maps = cobar_morphism(f, cobar(v, twisting, t), cobar(w, twisting, t))
    assert [g.rank(0) for g in maps] == [1, 2, 3, 4]


def test_a_map_that_breaks_the_differential_is_caught(qx_setting):
    t, _, p, twisting = qx_setting
    w = builtins.twodim_cogebra(p)
    f = GradedMap.from_function(w.carrier, w.carrier, 0, lambda key: {key: ONE} if key == ("x",) else {})
    report = cobar_functoriality(f, w, w, twisting, t)
    assert report.get("cogebra.coaction").passed
    assert not report.get("cogebra.differential").passed
    assert not report.get("level0.derivation").passed
    with pytest.raises(ShapeMismatchError):
        cobar_functoriality(GradedMap.from_function(w.carrier, w.carrier, -1, w.d.on_basis), w, w, twisting, t)


def test_cobar_dual_sends_morphisms_to_morphisms(qx_setting):
    t, _, p, twisting = qx_setting
    v, w, f = _onedim_to_twodim(p)
    source, target = cobar(v, twisting, t), cobar(w, twisting, t)
    g = cobar_morphism(f, source, target)[1]
    report = cobar_dual_functoriality(g, source, target, twisting, level=1)
    assert report.passed, report.failures()


def test_trust_window(truncation):
    window = TrustWindow.from_truncation(truncation(window=(-8, 8)))
    assert window.as_list() == [-6, 6]
    assert window.clamp((-10, 3)) == (-6, 3)
    assert window.clamp(None) == (-6, 6)


@pytest.fixture
def resolution(qx_setting):
    t, _, p, twisting = qx_setting
    return unit_resolution(builtins.coaction_cogebra(p), twisting, t)


def test_resolution_is_a_complex_split_by_the_unit(resolution):
    assert set(resolution.pieces) == set(PIECES)
    report = resolution_report(resolution)
    assert report.passed, report.failures()


def test_homotopy_identities(resolution):
    report = verify_homotopy_identities(resolution)
    assert report.passed, report.failures()
    report = tree_identity_report(resolution)
    assert report.passed, report.failures()


def test_kernel_is_acyclic(resolution):
    result = verify_acyclicity(resolution, (-2, 2))
    assert result.passed, result.report.failures()
    assert result.kernel_homology == {}
    assert result.window == (-2, 2)


def test_flipping_a_piece_breaks_the_first_identity(resolution):
    flipped = resolution.with_piece("D1", -resolution.pieces["D1"])
    report = verify_homotopy_identities(flipped)
    assert not report.get("first").passed
    with pytest.raises(ShapeMismatchError):
        resolution.with_piece("D7", resolution.pieces["D1"])


@pytest.mark.parametrize("level", range(5))
def test_cobar_dual_squares_to_zero_on_every_level(truncation, level):
    t = truncation(max_arity=1, max_weight=4, window=(-8, 8))
    q = builtins.qx_coperad(t)
    p = bar_dual(q, t)
    tower = free_algebra_coperad(q, disc(0), t)
    lp = cobar_dual(tower, canonical_alpha(q, p), level=level)
    report = cobar_dual_report(lp)
    assert report.passed, report.failures()
