"""
Sparse vectors indexed by basis labels, and lazily evaluated linear operators on them.

Structure maps of free objects are given on basis elements; ``LinearOp`` keeps
them symbolic, caches their values per basis element, composes them, and
materializes them into ``GradedMap`` blocks when a rank or identity check needs
matrices.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Mapping, Tuple

from services.graded import GradedMap, GradedSpace, Key, Vec
from services.qlinalg import ONE, ZERO, Rational, format_rational, to_rational


def vadd(acc: Dict[Key, Rational], vec: Mapping[Key, Rational], coeff: Rational = ONE) -> Dict[Key, Rational]:
    """acc += coeff·vec, in place; zero entries are removed."""
    if not coeff:
        return acc
    for k, v in vec.items():
        total = acc.get(k, ZERO) + coeff * v
        if total:
            acc[k] = total
        else:
            acc.pop(k, None)
    return acc


def vscale(vec: Mapping[Key, Rational], coeff) -> Vec:
    coeff = to_rational(coeff)
    if not coeff:
        return {}
    return {k: coeff * v for k, v in vec.items()}


def basis_vector(key: Key) -> Vec:
    return {key: ONE}


class LinearOp:
    """Degree-p linear operator defined on basis labels."""

    __slots__ = ("_func", "degree", "name", "_cache")

    def __init__(self, func: Callable[[Key], Mapping[Key, Rational]], degree: int, name: str = "op"):
        self._func = func
        self.degree = degree
        self.name = name
        self._cache: Dict[Key, Vec] = {}

    def __repr__(self) -> str:
        return f"LinearOp({self.name}, degree={self.degree})"

    def on_basis(self, key: Key) -> Vec:
        cached = self._cache.get(key)
        if cached is None:
            cached = {k: v for k, v in self._func(key).items() if v}
            self._cache[key] = cached
        return cached

    def apply(self, vec: Mapping[Key, Rational]) -> Vec:
        acc: Vec = {}
        for key, c in vec.items():
            vadd(acc, self.on_basis(key), c)
        return acc

    def __call__(self, vec: Mapping[Key, Rational]) -> Vec:
        return self.apply(vec)

    @classmethod
    def zero(cls, degree: int = 0) -> "LinearOp":
        return cls(lambda key: {}, degree, "0")

    @classmethod
    def identity(cls) -> "LinearOp":
        return cls(basis_vector, 0, "id")

    @classmethod
    def from_graded_map(cls, f: GradedMap, name: str = "map") -> "LinearOp":
        return cls(f, f.degree, name)

    def compose(self, other: "LinearOp") -> "LinearOp":
        """self∘other."""
        return LinearOp(lambda key: self.apply(other.on_basis(key)), self.degree + other.degree,
                        f"{self.name}∘{other.name}")

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        return self.compose(other)

    def __add__(self, other: "LinearOp") -> "LinearOp":
        if other.degree != self.degree:
            raise ValueError(f"cannot add operators of degrees {self.degree} and {other.degree}")
        return LinearOp(lambda key: vadd(dict(self.on_basis(key)), other.on_basis(key)), self.degree,
                        f"({self.name}+{other.name})")

    def __neg__(self) -> "LinearOp":
        return self.scale(-1)

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        return self + (-other)

    def scale(self, coeff) -> "LinearOp":
        coeff = to_rational(coeff)
        return LinearOp(lambda key: vscale(self.on_basis(key), coeff), self.degree, f"{coeff}·{self.name}")

    def materialize(self, source: GradedSpace, target: GradedSpace, strict: bool = False) -> GradedMap:
        return GradedMap.from_function(source, target, self.degree, self.on_basis, strict=strict)


def bracket(d: LinearOp, e: LinearOp) -> LinearOp:
    """Graded commutator [d, e] = d∘e − (−1)^{|d||e|} e∘d."""
    sign = -1 if (d.degree * e.degree) % 2 else 1
    return (d @ e) - (e @ d).scale(sign)


def first_difference(
    left: LinearOp, right: LinearOp, keys: Iterable[Key], within: Callable[[Key], bool] | None = None
) -> Tuple[Key, Vec] | None:
    """First basis key on which two operators differ (optionally comparing only output keys in ``within``)."""
    for key in keys:
        diff = vadd(dict(left.on_basis(key)), right.on_basis(key), -ONE)
        if within is not None:
            diff = {k: v for k, v in diff.items() if within(k)}
        if diff:
            return key, diff
    return None


def vanishes_on(op: LinearOp, keys: Iterable[Key], within: Callable[[Key], bool] | None = None
                ) -> Tuple[Key, Vec] | None:
    """First basis key with a nonzero image, or None."""
    for key in keys:
        value = op.on_basis(key)
        if within is not None:
            value = {k: v for k, v in value.items() if within(k)}
        if value:
            return key, value
    return None


def describe(vec: Mapping[Key, Rational], limit: int = 3) -> List[str]:
    items = sorted(vec.items(), key=lambda kv: repr(kv[0]))[:limit]
    return [f"{format_rational(v)}·{k!r}" for k, v in items]
