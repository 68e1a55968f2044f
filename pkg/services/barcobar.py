"""
Bar and Bar† constructions, and twisting morphisms between coperads and operads.

Bar(P) is the cofree conilpotent coperad on sP ⊕ s²𝟙; its coderivation is
extended from

    s²𝟙 → sP      c ↦ sη
    sP → sP       sx ↦ −s(dx)
    sP ⋄ sP → sP  (sx ∘ᵢ sy) ↦ (−1)^{|x|} s(x ∘ᵢ y)

and its curvature is the projection onto s²𝟙. Bar†(Q) is the free operad on
s⁻¹Q̄ with the derivation extended from

    s⁻¹z ↦ −s⁻¹(dz) − Σ (−1)^{|x|} s⁻¹x ∘ᵢ s⁻¹y + θ(z)·1

where the sum runs over the infinitesimal decomposition w₂(z). For a symmetric
coperad each term of w₂ carries the relabelling of the composite's inputs, and
Bar† is the symmetric free operad on s⁻¹Q̄ with the transported action.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Hashable, List

from services import trees
from services.errors import UnsupportedError, ValidationError
from services.graded import GradedMap, GradedSpace, Key, Vec, koszul_sign
from services.keyed import LinearOp, vadd
from services.opcop import (
    CofreeCoperad,
    CurvedCoperad,
    FreeOperad,
    Operad,
    SymmetricFreeOperad,
    extend_derivation,
)
from services.qlinalg import ONE
from services.symseq import SymSeq, Truncation
from services.trees import UNIT, Label, Tree
from telemetrics.logger import logger

CURVATURE_LABEL = ("c",)


def _suspension_labels(p: Operad, t: Truncation) -> Dict[Key, Label]:
    labels = {}
    for key in p.keys():
        arity = p.arity_of(key)
        if arity == 0:
            raise UnsupportedError(f"{p.name} has an arity 0 element {key!r}; Bar needs arity ≥ 1")
        if arity <= t.max_arity:
            labels[key] = Label(("s", key), p.degree_of(key) + 1, arity, 1)
    return labels


def bar(p: Operad, t: Truncation | None = None) -> CofreeCoperad:
    """Bar(P) = T^c(sP ⊕ s²𝟙) truncated to weight ≤ W (vertices) and arity ≤ A."""
    if not p.planar:
        raise UnsupportedError("Bar is computed for planar operads only")
    t = t or p.truncation
    if t.weight_cap < 1:
        raise ValidationError("weight cap 0 cannot hold the generators of Bar")
    logger.info(f"bar of {p.name}: {p.seq.total_dim()} basis elements, A={t.max_arity} W={t.weight_cap}", tag="bar")
    by_key = _suspension_labels(p, t)
    curvature = Label(CURVATURE_LABEL, 2, 1, 1)

    def projection(tree: Tree) -> Vec:
        count = trees.vertex_count(tree)
        if count == 1:
            label = tree[0]
            if label == curvature:
                return {by_key[p.unit]: ONE}
            x = label.name[1]
            return {by_key[y]: -c for y, c in p.d.on_basis(x).items() if y in by_key}
        if count == 2:
            root, children = tree
            if root == curvature:
                return {}
            slot, child = next((j, c) for j, c in enumerate(children, start=1) if c != UNIT)
            if child[0] == curvature:
                return {}
            x, y = root.name[1], child[0].name[1]
            sign = koszul_sign([(p.degree_of(x), 1)])
            return {by_key[z]: c * sign for z, c in p.partial(x, slot, y).items() if z in by_key}
        return {}

    q = CofreeCoperad(f"Bar({p.name})", [*by_key.values(), curvature], t, projection, {CURVATURE_LABEL: ONE})
    q.source_operad = p
    logger.info(f"bar of {p.name}: dims {q.seq.dims}", tag="bar")
    return q


def _desuspension_labels(q: CurvedCoperad, t: Truncation) -> Dict[Key, Label]:
    labels = {}
    for z in q.reduced_keys():
        if q.arity_of(z) > t.max_arity:
            continue
        weight = q.weight_of(z) or 1
        if weight > t.weight_cap:
            continue
        labels[z] = Label(("e", z), q.degree_of(z) - 1, q.arity_of(z), weight)
    return labels


def bar_dual(q: CurvedCoperad, t: Truncation | None = None) -> Operad:
    """Bar†(Q) = T(s⁻¹Q̄) with the derivation extended from ι∘θ + s⁻¹d − s⁻²w₂."""
    if not q.is_cogmented:
        raise ValidationError(f"{q.name} is not cogmented: τ(ι) = {q.tau(q.unit)}")
    t = t or q.truncation
    logger.info(f"bar dual of {q.name}: {q.seq.total_dim()} basis elements", tag="bardual")
    by_key = _desuspension_labels(q, t)
    if not q.planar:
        return _symmetric_bar_dual(q, t, by_key)
    p = FreeOperad(f"Bar†({q.name})", list(by_key.values()), t)

    values: Dict[Hashable, Vec] = {}
    for z, label in by_key.items():
        value: Vec = {}
        for y, c in q.d.on_basis(z).items():
            if y in by_key:
                vadd(value, {trees.corolla(by_key[y]): ONE}, -c)
        for (x, i, y), c in q.w2(z).items():
            if x in by_key and y in by_key:
                tree = trees.graft(trees.corolla(by_key[x]), i, trees.corolla(by_key[y]))
                vadd(value, {tree: ONE}, -c * koszul_sign([(q.degree_of(x), 1)]))
        theta = q.theta(z)
        if theta:
            vadd(value, {UNIT: ONE}, theta)
        values[label.name] = value

    result = p.with_differential(extend_derivation(p, values, -1))
    result.source_coperad = q
    result.generator_of = {label.name: z for z, label in by_key.items()}
    logger.info(f"bar dual of {q.name}: dims {result.seq.dims}", tag="bardual")
    return result


def _transported(q: CurvedCoperad, n: int, i: int, by_key: Dict[Key, Label]):
    sigma = q.seq.transposition(n, i)
    names = {z: label.name for z, label in by_key.items()}

    def on_basis(name: Key) -> Vec:
        return {names[y]: c for y, c in sigma(name[1]).items() if y in names}

    return on_basis


def _symmetric_bar_dual(q: CurvedCoperad, t: Truncation, by_key: Dict[Key, Label]) -> SymmetricFreeOperad:
    components: Dict[int, Dict[int, List[Key]]] = {}
    for label in by_key.values():
        components.setdefault(label.arity, {}).setdefault(label.degree, []).append(label.name)
    spaces = {n: GradedSpace(basis) for n, basis in components.items()}
    actions = {
        n: [GradedMap.from_function(space, space, 0, _transported(q, n, i, by_key)) for i in range(1, n)]
        for n, space in spaces.items()
    }
    gens = SymSeq(spaces, actions, planar=False, weights={label.name: label.weight for label in by_key.values()})
    p = SymmetricFreeOperad(f"Bar†({q.name})", gens, t)

    values: Dict[Hashable, Vec] = {}
    for z, label in by_key.items():
        value: Vec = {}
        for y, c in q.d.on_basis(z).items():
            if y in by_key:
                vadd(value, p.generator_class(by_key[y].name), -c)
        for (x, i, y, leaves), c in q.w2(z).items():
            if x in by_key and y in by_key:
                composite = p.compose(p.generator_class(by_key[x].name), i, p.generator_class(by_key[y].name))
                vadd(value, p.relabel(composite, leaves), -c * koszul_sign([(q.degree_of(x), 1)]))
        theta = q.theta(z)
        if theta:
            vadd(value, {p.unit: ONE}, theta)
        values[label.name] = value

    result = p.with_differential(extend_derivation(p, values, -1))
    result.source_coperad = q
    result.generator_of = {label.name: z for z, label in by_key.items()}
    logger.info(f"bar dual of {q.name}: dims {result.seq.dims}", tag="bardual")
    return result


# twisting morphisms


@dataclass
class TwistingMorphism:
    """ᾱ : Q → P of degree −1 (α∘s⁻¹), and β : P → Q of degree +1 inverting it on generators."""

    coperad: CurvedCoperad
    operad: Operad
    alpha: LinearOp
    beta: LinearOp | None = None

    @property
    def kills_cogmentation(self) -> bool:
        return not self.alpha.on_basis(self.coperad.unit)


def twisting_residual(alpha: LinearOp, q: CurvedCoperad, p: Operad) -> LinearOp:
    """z ↦ d_P ᾱ(z) + ᾱ(d_Q z) + Σ_{w₂(z)} (−1)^{|x|} ᾱ(x) ∘ᵢ ᾱ(y) − θ(z)·η, keyed on Q."""

    def on_basis(z: Key) -> Vec:
        out = p.d(alpha.on_basis(z))
        vadd(out, alpha(q.d.on_basis(z)))
        for term, c in q.w2(z).items():
            x, i, y = term[:3]
            composite = p.compose(alpha.on_basis(x), i, alpha.on_basis(y))
            if len(term) == 4:
                composite = p.relabel(composite, term[3])
            vadd(out, composite, c * koszul_sign([(q.degree_of(x), 1)]))
        theta = q.theta(z)
        if theta:
            vadd(out, {p.unit: ONE}, -theta)
        return out

    return LinearOp(on_basis, -2, "residual")


def check_twisting(alpha: LinearOp, q: CurvedCoperad, p: Operad) -> GradedMap:
    """The residual as a graded map Q → P within the truncation; α is twisting iff it is zero."""
    if alpha.degree != -1:
        raise ValidationError(f"ᾱ must have degree -1, got {alpha.degree}")
    source = GradedSpace.from_keys(q.keys(), q.degree_of)
    target = GradedSpace.from_keys(p.keys(), p.degree_of)
    residual = twisting_residual(alpha, q, p).materialize(source, target)
    if residual.is_zero():
        logger.info(f"twisting check {q.name} → {p.name}: residual vanishes", tag="twisting")
    else:
        logger.warning(f"twisting check {q.name} → {p.name}: residual is nonzero", tag="twisting")
    return residual


def is_twisting(alpha: LinearOp, q: CurvedCoperad, p: Operad) -> bool:
    return not alpha.on_basis(q.unit) and check_twisting(alpha, q, p).is_zero()


def canonical_alpha(q: CurvedCoperad, p: Operad | None = None) -> TwistingMorphism:
    """Inclusion of the generators s⁻¹Q̄ ↪ Bar†(Q), with β the projection back onto Q̄ (planar only)."""
    p = p or bar_dual(q)
    generator_of = getattr(p, "generator_of", None)
    if generator_of is None:
        raise ValidationError(f"{p.name} was not built by bar_dual")
    if isinstance(p, SymmetricFreeOperad):
        classes = {z: p.generator_class(name) for name, z in generator_of.items()}
        return TwistingMorphism(q, p, LinearOp(lambda z: classes.get(z, {}), -1, "ᾱ"))
    labels = {z: p.label(name) for name, z in generator_of.items()}

    def alpha(z: Key) -> Vec:
        label = labels.get(z)
        return {trees.corolla(label): ONE} if label is not None else {}

    def beta(tree: Key) -> Vec:
        if tree == UNIT or trees.vertex_count(tree) != 1:
            return {}
        return {generator_of[tree[0].name]: ONE}

    return TwistingMorphism(q, p, LinearOp(alpha, -1, "ᾱ"), LinearOp(beta, 1, "β"))


def bar_twisting(p: Operad, q: CofreeCoperad | None = None) -> TwistingMorphism:
    """Canonical Bar(P) → P: the corolla sx goes to x, every other tree to 0."""
    q = q or bar(p)
    names = {g.name for g in q.cogenerators}

    def alpha(tree: Key) -> Vec:
        if tree == UNIT or trees.vertex_count(tree) != 1 or tree[0].name == CURVATURE_LABEL:
            return {}
        return {tree[0].name[1]: ONE}

    def beta(x: Key) -> Vec:
        name = ("s", x)
        return {q.cogenerator(name): ONE} if name in names else {}

    return TwistingMorphism(q, p, LinearOp(alpha, -1, "π"), LinearOp(beta, 1, "s"))


def perturb(alpha: LinearOp, z: Key, value: Vec) -> LinearOp:
    """ᾱ with ``value`` added on the basis element z."""

    def on_basis(key: Key) -> Vec:
        out = dict(alpha.on_basis(key))
        if key == z:
            vadd(out, value)
        return out

    return LinearOp(on_basis, alpha.degree, f"{alpha.name}+δ")

