"""
Built-in example objects, addressed as ``builtin:<name>`` on the command line and over HTTP.

Operads and coperads are built for a given truncation. Cogebras are built over
an operad of the form Bar†(Q), which the caller constructs from ``--coperad``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Dict, List

from services import trees
from services.algcog import CogebraOverOperad
from services.barcobar import bar, bar_dual
from services.errors import MalformedInputError, ValidationError
from services.graded import ChainComplex, GradedSpace, Key, Vec, disc
from services.keyed import LinearOp
from services.opcop import CofreeCoperad, CurvedCoperad, Operad, SymmetricCoperad
from services.qlinalg import ONE, ZERO
from services.symseq import SymSeq, Truncation
from services.trees import Label
from telemetrics.logger import logger

BUILTIN_PREFIX = "builtin:"


# operads


def unit_operad(t: Truncation) -> Operad:
    """𝟙: one basis element η in arity 1 and degree 0."""
    unit = ("η",)
    seq = SymSeq.from_keys([(unit, 1, 0, 0)])
    return Operad("𝟙", seq, unit, lambda x, i, y: {unit: ONE}, truncation=t)


def as_planar(t: Truncation) -> Operad:
    """Planar As: one operation μₙ per arity 1 ≤ n ≤ A, μₙ ∘ᵢ μₖ = μₙ₊ₖ₋₁."""
    ops = {n: ("μ", n) for n in range(1, t.max_arity + 1)}
    seq = SymSeq.from_keys([(key, n, 0, n - 1) for n, key in ops.items()])

    def partial(x: Key, i: int, y: Key) -> Vec:
        n = x[1] + y[1] - 1
        return {ops[n]: ONE} if n in ops else {}

    return Operad("As", seq, ops[1], partial, truncation=t)


# coperads


def unit_coperad(t: Truncation) -> CurvedCoperad:
    return CofreeCoperad("𝟙", [], t)


def qx_coperad(t: Truncation) -> CurvedCoperad:
    """ℚ[X] as the cofree coperad on one arity 1 cogenerator: Xⁿ ↦ Σ Xᵃ ⊗ Xᵇ."""
    return CofreeCoperad("ℚ[X]", [Label("X", 0, 1, 1)], t)


def grouplike_coperad(t: Truncation) -> CurvedCoperad:
    """Arity 1 coperad on ι and g − ι for a group-like g; it is not locally conilpotent."""
    unit, g = ("ι",), ("g",)
    seq = SymSeq.from_keys([(unit, 1, 0, 0), (g, 1, 0, 1)])

    def decompose(z: Key) -> Vec:
        if z == unit:
            return {(unit, (unit,)): ONE}
        return {(g, (g,)): ONE, (g, (unit,)): ONE, (unit, (g,)): ONE}

    return CurvedCoperad("ℚ[g]", seq, unit, decompose, lambda z: ONE if z == unit else ZERO, truncation=t)


def bar_as(t: Truncation) -> CurvedCoperad:
    return bar(as_planar(t), t)


def com_coperad(t: Truncation) -> CurvedCoperad:
    """Symmetric Com^c: one invariant cₙ per arity.

    w₂(cₙ) = Σ_S c_{n−|S|+1} ∘₁ c_{|S|}, the inputs in S feeding c_{|S|}, over the subsets 2 ≤ |S| < n.
    """
    ops = {n: ("c", n) for n in range(1, t.max_arity + 1)}
    seq = SymSeq.from_keys([(key, n, 0, n - 1) for n, key in ops.items()], planar=False)

    def infinitesimal(z: Key) -> Vec:
        n = z[1]
        out: Vec = {}
        for k in range(2, n):
            for chosen in combinations(range(1, n + 1), k):
                rest = tuple(j for j in range(1, n + 1) if j not in chosen)
                out[(ops[n - k + 1], 1, ops[k], chosen + rest)] = ONE
        return out

    return SymmetricCoperad("Com^c", seq, ops[1], infinitesimal, lambda z: ONE if z == ops[1] else ZERO, truncation=t)


# cogebras over P = Bar†(Q)


def onedim_cogebra(p: Operad) -> CogebraOverOperad:
    """ℚv in degree 0 with the coaction v ↦ E_{η,(v)}."""
    v = ("v",)
    carrier = GradedSpace({0: [v]})
    return CogebraOverOperad(p, carrier, lambda key: {("E", p.unit, (key,)): ONE}, name="ℚv")


def twodim_cogebra(p: Operad) -> CogebraOverOperad:
    """ℚx ⊕ ℚy with |x| = 1, |y| = 0, dx = y and the trivial coaction."""
    x, y = ("x",), ("y",)
    carrier = GradedSpace({1: [x], 0: [y]})
    d = LinearOp(lambda key: {y: ONE} if key == x else {}, -1, "d_V")
    return CogebraOverOperad(p, carrier, lambda key: {("E", p.unit, (key,)): ONE}, d, name="D(1)")


def _arity_one_generator(p: Operad) -> Label:
    generator_of = getattr(p, "generator_of", None)
    if generator_of is None:
        raise ValidationError(f"{p.name} was not built by bar_dual")
    q = p.source_coperad
    for name, z in sorted(generator_of.items(), key=repr):
        if q.arity_of(z) == 1 and q.weight_of(z) == 1 and q.degree_of(z) == 0:
            return p.label(name)
    raise ValidationError(f"{q.name} has no arity 1 cogenerator of weight 1 and degree 0")


def coaction_cogebra(p: Operad) -> CogebraOverOperad:
    """ℚv ⊕ ℚu, |v| = |u| + 1, with v ↦ E_{η,(v)} + E_{e,(u)} for the generator e = s⁻¹X."""
    e = trees.corolla(_arity_one_generator(p))
    v, u = ("v",), ("u",)
    carrier = GradedSpace({1: [v], 0: [u]})

    def coaction(key: Key) -> Vec:
        out = {("E", p.unit, (key,)): ONE}
        if key == v:
            out[("E", e, (u,))] = ONE
        return out

    return CogebraOverOperad(p, carrier, coaction, name="ℚv⊕ℚu")


# complexes


def disc_complex(t: Truncation) -> ChainComplex:
    return disc(0)


@dataclass(frozen=True)
class Builtin:
    name: str
    kind: str
    description: str
    build: Callable


BUILTINS: Dict[str, Builtin] = {
    b.name: b
    for b in [
        Builtin("unit-operad", "operad", "the unit operad 𝟙", unit_operad),
        Builtin("as-planar", "operad", "planar associative operad truncated at max_arity", as_planar),
        Builtin("unit-coperad", "coperad", "the unit coperad 𝟙", unit_coperad),
        Builtin("qx-coperad", "coperad", "ℚ[X] with the deconcatenation decomposition", qx_coperad),
        Builtin("grouplike-coperad", "coperad", "arity 1 coperad with a group-like element", grouplike_coperad),
        Builtin("bar-as", "coperad", "Bar of planar As", bar_as),
        Builtin("com-coperad", "coperad", "symmetric cocommutative coperad Com^c", com_coperad),
        Builtin("onedim-cogebra", "cogebra", "1-dimensional cogebra with trivial structure", onedim_cogebra),
        Builtin("twodim-cogebra", "cogebra", "ℚx ⊕ ℚy with dx = y", twodim_cogebra),
        Builtin("coaction-cogebra", "cogebra", "2-dimensional cogebra with a nontrivial coaction", coaction_cogebra),
        Builtin("disc", "complex", "the acyclic disc D(0)", disc_complex),
    ]
}


def is_builtin(ref: str) -> bool:
    return ref.startswith(BUILTIN_PREFIX)


def lookup(ref: str, kind: str | None = None) -> Builtin:
    name = ref[len(BUILTIN_PREFIX):] if is_builtin(ref) else ref
    builtin = BUILTINS.get(name)
    if builtin is None:
        raise MalformedInputError(f"unknown built-in {name!r}; available: {', '.join(sorted(BUILTINS))}")
    if kind is not None and builtin.kind != kind:
        raise MalformedInputError(f"built-in {name!r} is a {builtin.kind}, expected a {kind}")
    return builtin


def build_cogebra(ref: str, coperad: CurvedCoperad, t: Truncation) -> CogebraOverOperad:
    """A built-in cogebra over Bar†(coperad)."""
    p = bar_dual(coperad, t)
    logger.info(f"building {ref} over {p.name}", tag="builtins")
    return lookup(ref, "cogebra").build(p)


def names(kind: str | None = None) -> List[str]:
    return sorted(name for name, b in BUILTINS.items() if kind is None or b.kind == kind)
