"""Exact rational linear algebra."""

from fractions import Fraction

import pytest

from services.errors import ShapeMismatchError
from services.qlinalg import (
    ONE,
    QQ,
    RationalMatrix,
    Subspace,
    charpoly,
    format_rational,
    image_basis,
    inverse,
    kernel_basis,
    kronecker,
    parse_rational,
    quotient,
    rank,
    solve,
    to_rational,
)


def test_rational_parsing_and_formatting():
    assert parse_rational("3/6") == QQ(1, 2)
    assert parse_rational("-4") == QQ(-4)
    assert format_rational(QQ(-2, 4)) == "-1/2"
    assert format_rational(QQ(6, 3)) == "2"
    assert to_rational(Fraction(3, 9)) == QQ(1, 3)
    with pytest.raises(ValueError):
        parse_rational("1/0")
    with pytest.raises(TypeError):
        to_rational(True)


def test_matrix_drops_zeros_and_checks_shape():
    m = RationalMatrix.from_dense([[0, 1], [0, 0]])
    assert m.nnz() == 1
    assert m.get(0, 1) == ONE
    with pytest.raises(ShapeMismatchError):
        RationalMatrix(2, 2, {3: {0: 1}})
    with pytest.raises(ShapeMismatchError):
        m @ RationalMatrix.identity(3)


def test_rank_kernel_and_image_of_a_singular_matrix():
    m = RationalMatrix.from_dense([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
    assert rank(m) == 2
    kernel = kernel_basis(m)
    assert kernel.dim == 1
    for vector in kernel.vectors():
        assert not any(m.apply(vector).values())
    assert image_basis(m).dim == 2


def test_subspace_sum_and_intersection():
    a = Subspace.span(3, [{0: ONE}, {1: ONE}])
    b = Subspace.span(3, [{1: ONE}, {2: ONE}])
    assert a.sum(b) == Subspace.full(3)
    meet = a.intersection(b)
    assert meet.dim == 1
    assert meet.contains_vector({1: QQ(5)})
    assert not meet.contains_vector({0: ONE})


def test_inverse_and_solve():
    m = RationalMatrix.from_dense([[2, 1], [1, 1]])
    assert m @ inverse(m) == RationalMatrix.identity(2)
    assert solve(m, {0: QQ(3), 1: QQ(2)}) == {0: ONE, 1: ONE}
    singular = RationalMatrix.from_dense([[1, 1], [1, 1]])
    assert solve(singular, {0: ONE}) is None


def test_quotient_projection_splits_the_section():
    sub = Subspace.span(3, [{0: ONE, 1: ONE}])
    projection, section = quotient(3, sub)
    assert projection.shape == (2, 3)
    assert projection @ section == RationalMatrix.identity(2)
    assert projection.apply({0: ONE, 1: ONE}) == {}


def test_kronecker_and_charpoly():
    a = RationalMatrix.from_dense([[0, 1], [0, 0]])
    assert kronecker(a, RationalMatrix.identity(2)).shape == (4, 4)
    assert kronecker(a, a).nnz() == 1
    # nilpotent: x^2
    assert charpoly(a) == [ONE, QQ(0), QQ(0)]
