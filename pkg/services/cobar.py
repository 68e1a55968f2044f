"""
Cobar constructions and the resolution V ≃ C†C V.

For a twisting morphism ᾱ : Q → P and a P-cogebra V, ``cobar`` builds the curved
Q-algebra V^Q with the derivation generated by b = i∘d_V − V^α∘a_V, and
``cobar_dual`` builds L^P(Λ) with the coderivation generated by
b = d_Λ∘π + a_Λ∘Λ^α. For P = Bar†(Q) the composite C†C V is realised on
V^{P⋄Q}, keyed ("E", (p, (z₁…z_k)), word), with its coderivation written as
D₁ + … + D₆ and the contracting homotopy H = −V^h on the kernel of the
projection q = V^{η⋄ι}.

Everything is truncated by combined weight: the weight of p plus the weights of
the zᵢ. No piece of D lowers combined weight and H preserves it, so the
truncated complex is a quotient complex and the identities are exact on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Hashable, List, Mapping, Sequence, Set, Tuple

from services import trees
from services.algcog import (
    AlgebraTower,
    CogebraOverOperad,
    algebra_morphism_report,
    check_square_zero_Pcog,
    check_square_zero_Qalg,
    cogebra_morphism_report,
    extend_coderivation_Pcog,
    extend_derivation_Qalg,
    free_algebra_coperad,
    free_cogebra_operad,
)
from services.barcobar import TwistingMorphism, is_twisting
from services.errors import ShapeMismatchError, UnsupportedError, ValidationError
from services.graded import ChainComplex, GradedMap, GradedSpace, Key, Vec, compose, homology_dims, is_quasi_iso, \
    koszul_sign
from services.keyed import LinearOp, describe, vadd
from services.opcop import CurvedCoperad, FreeOperad
from services.qlinalg import ONE, Rational
from services.report import Report
from services.symseq import KeyedCotensor, SymSeq, Truncation, planar_composite_keys, tensor_vectors
from services.trees import UNIT, Tree
from telemetrics.logger import logger

PIECES = ("D1", "D2u", "D2d", "D3", "D4", "D5", "D6")


def _parity(n: int) -> int:
    return -1 if n % 2 else 1


def _check_twisting(twisting: TwistingMorphism):
    if not is_twisting(twisting.alpha, twisting.coperad, twisting.operad):
        raise ValidationError(f"ᾱ : {twisting.coperad.name} → {twisting.operad.name} is not a twisting morphism")


def cobar(v: CogebraOverOperad, twisting: TwistingMorphism, t: Truncation | None = None) -> AlgebraTower:
    """The tower V^{FₙQ} with d_b, b = i∘d_V − V^α∘a_V."""
    q, p = twisting.coperad, twisting.operad
    if v.operad is not p:
        raise ShapeMismatchError(f"{v.name} is a cogebra over {v.operad.name}, not over {p.name}")
    _check_twisting(twisting)
    tower = free_algebra_coperad(q, ChainComplex(v.carrier), t)
    alpha_dual = v.cotensor.contra(twisting.alpha, q.keys())
    unit = q.unit

    def b(key: Key) -> Vec:
        out = {("E", unit, (k,)): c for k, c in v.d.on_basis(key).items()}
        vadd(out, alpha_dual(v.coaction(key)), -ONE)
        return out

    result = extend_derivation_Qalg(tower, b)
    result.name = f"Cobar({v.name})"
    result.cogebra = v
    result.twisting = twisting
    result.b = b
    logger.info(f"cobar of {v.name}: level dims {result.total_dims()}", tag="cobar")
    return result


def cobar_report(tower: AlgebraTower) -> Report:
    """Curvature equation on every level of a cobar tower."""
    return check_square_zero_Qalg(tower, tower.b)


def cobar_dual(tower: AlgebraTower, twisting: TwistingMorphism, level: int | None = None) -> CogebraOverOperad:
    """L^P(Λ) for the chosen level Λ, with d_b, b = d_Λ∘π + a_Λ∘Λ^α."""
    q, p = twisting.coperad, twisting.operad
    _check_twisting(twisting)
    lam = tower.levels[-1 if level is None else level]
    if lam.coperad is not q:
        raise ShapeMismatchError(f"{lam.name} is an algebra over {lam.coperad.name}, not over {q.name}")
    lp = free_cogebra_operad(p, ChainComplex(lam.carrier), p.truncation, lam.key_weight)
    alpha_dual = KeyedCotensor(lam.carrier.degree_of, p, lam.key_weight).contra(twisting.alpha, q.keys())
    unit = p.unit

    def b(key: Key) -> Vec:
        _, y, word = key
        out: Vec = dict(lam.d.on_basis(word[0])) if y == unit else {}
        vadd(out, lam.act_element(alpha_dual.on_basis(key)))
        return out

    result = extend_coderivation_Pcog(lp, b)
    result.name = f"Cobar†({lam.name})"
    result.b = b
    result.algebra = lam
    logger.info(f"cobar dual of {lam.name}: dims {result.carrier.dims}", tag="cobar")
    return result


def cobar_dual_report(lp: CogebraOverOperad) -> Report:
    return check_square_zero_Pcog(lp, lp.b)


# functoriality


def _cotensor_map(f: GradedMap, source: GradedSpace, target: GradedSpace) -> GradedMap:
    """E_{m,(x₁…x_k)} ↦ E_{m,(f x₁, …, f x_k)}."""
    if f.degree:
        raise ShapeMismatchError(f"a morphism has degree 0, got {f.degree}")

    def on_basis(key: Key) -> Vec:
        _, m, word = key
        return {("E", m, image): c for image, c in tensor_vectors([f(x) for x in word]).items()}

    return GradedMap.from_function(source, target, 0, on_basis, strict=False)


def cobar_morphism(f: GradedMap, source: AlgebraTower, target: AlgebraTower) -> List[GradedMap]:
    """The levelwise maps f^{FₙQ} between two cobar towers."""
    if len(source.levels) != len(target.levels):
        raise ShapeMismatchError(f"towers of heights {len(source.levels)} and {len(target.levels)}")
    return [_cotensor_map(f, s.carrier, t.carrier) for s, t in zip(source.levels, target.levels)]


def cobar_functoriality(f: GradedMap, v: CogebraOverOperad, w: CogebraOverOperad, twisting: TwistingMorphism,
                        t: Truncation | None = None) -> Report:
    """A cogebra morphism f : V → W and the algebra morphisms Cobar(f) on every level."""
    report = Report(f"Cobar of {v.name} → {w.name}")
    report.extend(cogebra_morphism_report(f, v, w), "cogebra")
    source, target = cobar(v, twisting, t), cobar(w, twisting, t)
    for n, (g, lam, gam) in enumerate(zip(cobar_morphism(f, source, target), source.levels, target.levels)):
        report.extend(algebra_morphism_report(g, lam, gam), f"level{n}")
    return report


def cobar_dual_morphism(g: GradedMap, source: CogebraOverOperad, target: CogebraOverOperad) -> GradedMap:
    """L^P(g) : L^P(Λ) → L^P(Γ)."""
    return _cotensor_map(g, source.carrier, target.carrier)


def cobar_dual_functoriality(g: GradedMap, source: AlgebraTower, target: AlgebraTower, twisting: TwistingMorphism,
                             level: int | None = None) -> Report:
    n = len(source.levels) - 1 if level is None else level
    lam, gam = source.levels[n], target.levels[n]
    report = Report(f"Cobar† of {lam.name} → {gam.name}")
    report.extend(algebra_morphism_report(g, lam, gam), "algebra")
    lp, gp = cobar_dual(source, twisting, n), cobar_dual(target, twisting, n)
    report.extend(cogebra_morphism_report(cobar_dual_morphism(g, lp, gp), lp, gp), "cogebra")
    return report


# the resolution V ≃ C†C V


@dataclass(frozen=True)
class TrustWindow:
    """Degrees whose homology is unaffected by the truncation: the degree window shrunk by the reach of D and H."""

    lo: int
    hi: int

    REACH = 2

    @classmethod
    def from_truncation(cls, t: Truncation) -> "TrustWindow":
        lo, hi = t.degree_window
        return cls(lo + cls.REACH, hi - cls.REACH)

    def clamp(self, window: Tuple[int, int] | None) -> Tuple[int, int]:
        if window is None:
            return self.lo, self.hi
        lo, hi = window
        if lo < self.lo or hi > self.hi:
            logger.warning(f"window [{lo}, {hi}] exceeds the trust window [{self.lo}, {self.hi}]", tag="resolve")
        return max(lo, self.lo), min(hi, self.hi)

    def as_list(self) -> List[int]:
        return [self.lo, self.hi]


def _top_vertices(tree: Tree, zs: Sequence[Key], unit: Key) -> List[Tuple[int, int]]:
    """(preorder index, first leaf) of the vertices all of whose inputs are bare leaves carrying ι."""
    found: List[Tuple[int, int]] = []
    vertex, leaf = 0, 0

    def walk(node: Tree):
        nonlocal vertex, leaf
        if node == UNIT:
            leaf += 1
            return
        k, first = vertex, leaf
        vertex += 1
        children = node[1]
        if all(c == UNIT for c in children) and all(zs[first + i] == unit for i in range(len(children))):
            found.append((k, first))
        for c in children:
            walk(c)

    walk(tree)
    return found


def _leibniz(tree: Tree, values: Mapping[Hashable, Mapping[Tree, Rational]],
             allowed: Set[int] | None = None) -> Vec:
    """Degree −1 derivation of the free operad, applied only at the vertices in ``allowed``."""
    out: Vec = {}
    before = 0
    for k, label in enumerate(trees.labels(tree)):
        if allowed is None or k in allowed:
            for r, c in values.get(label.name, {}).items():
                new, sign = trees.substitute_vertex(tree, k, r)
                vadd(out, {new: ONE}, c * sign * koszul_sign([(-1, before)]))
        before += label.degree
    return out


@dataclass
class CobarResolution:
    cogebra: CogebraOverOperad
    twisting: TwistingMorphism
    cotensor: KeyedCotensor
    composites: List[Key]
    space: GradedSpace
    tree_maps: Dict[str, LinearOp]
    pieces: Dict[str, LinearOp]
    j: GradedMap
    q: GradedMap
    kernel: GradedSpace
    trust: TrustWindow
    h: LinearOp | None = None
    H: LinearOp | None = None

    @property
    def unit_composite(self) -> Key:
        return (self.twisting.operad.unit, (self.twisting.coperad.unit,))

    @cached_property
    def differential(self) -> LinearOp:
        total = self.pieces[PIECES[0]]
        for name in PIECES[1:]:
            total = total + self.pieces[name]
        return total

    def with_piece(self, name: str, op: LinearOp) -> "CobarResolution":
        """A copy with one piece of D replaced."""
        if name not in self.pieces:
            raise ShapeMismatchError(f"unknown piece {name!r}")
        pieces = dict(self.pieces)
        pieces[name] = op
        return CobarResolution(self.cogebra, self.twisting, self.cotensor, self.composites, self.space,
                               self.tree_maps, pieces, self.j, self.q, self.kernel, self.trust, self.h, self.H)

    def complex(self) -> ChainComplex:
        return ChainComplex(self.space, self.differential.materialize(self.space, self.space), check=False)

    def kernel_complex(self) -> ChainComplex:
        return ChainComplex(self.kernel, self.differential.materialize(self.kernel, self.kernel), check=False)


def _tree_side(p: FreeOperad, q: CurvedCoperad, twisting: TwistingMorphism, pq: Set[Key]):
    """f₁, the three derivation parts of d_P, and Id⋄′d_Q, as operators on P⋄Q keys."""
    labels = {z: p.label(name) for name, z in p.generator_of.items()}
    by_name = {label.name: z for z, label in labels.items()}
    w_values: Dict[Hashable, Vec] = {}
    s_values: Dict[Hashable, Vec] = {}
    theta_values: Dict[Hashable, Vec] = {}
    for z, label in labels.items():
        value: Vec = {}
        for (x, i, y), c in q.w2(z).items():
            if x in labels and y in labels:
                tree = trees.graft(trees.corolla(labels[x]), i, trees.corolla(labels[y]))
                vadd(value, {tree: ONE}, -c * _parity(q.degree_of(x)))
        w_values[label.name] = value
        s_values[label.name] = {trees.corolla(labels[y]): -c for y, c in q.d.on_basis(z).items() if y in labels}
        theta = q.theta(z)
        theta_values[label.name] = {UNIT: theta} if theta else {}
    alpha = twisting.alpha
    unit = q.unit

    def keep(vec: Vec) -> Vec:
        return {k: c for k, c in vec.items() if c and k in pq}

    def f1(c: Key) -> Vec:
        ptree, zs = c
        out: Vec = {}
        p_degree = trees.degree(ptree)
        seen = 0
        for i, z in enumerate(zs):
            for (b, tops), cw in q.w(z).items():
                if b == unit:
                    continue
                for r, ca in alpha.on_basis(b).items():
                    slots = (UNIT,) * i + (r,) + (UNIT,) * (len(zs) - i - 1)
                    new_tree, sign = trees.assemble(ptree, slots)
                    sign *= _parity(q.degree_of(b) * seen + p_degree)
                    vadd(out, {(new_tree, zs[:i] + tops + zs[i + 1:]): ONE}, cw * ca * sign)
            seen += q.degree_of(z)
        return keep(out)

    def derivation_part(values, up_only: bool = False) -> Callable[[Key], Vec]:
        def on_basis(c: Key) -> Vec:
            ptree, zs = c
            allowed = {k for k, _ in _top_vertices(ptree, zs, unit)} if up_only else None
            return keep({(t, zs): -coeff for t, coeff in _leibniz(ptree, values, allowed).items()})

        return on_basis

    def dq_part(c: Key) -> Vec:
        ptree, zs = c
        out: Vec = {}
        before = trees.degree(ptree)
        for i, z in enumerate(zs):
            for dz, coeff in q.d.on_basis(z).items():
                vadd(out, {(ptree, zs[:i] + (dz,) + zs[i + 1:]): ONE}, -coeff * _parity(before))
            before += q.degree_of(z)
        return keep(out)

    w_full = derivation_part(w_values)
    w_up = derivation_part(w_values, up_only=True)

    def w_down(c: Key) -> Vec:
        return vadd(dict(w_full(c)), w_up(c), -ONE)

    s_part = derivation_part(s_values)

    def f3(c: Key) -> Vec:
        return vadd(dict(s_part(c)), dq_part(c))

    maps = {
        "f1": LinearOp(f1, -1, "f1"),
        "f2u": LinearOp(w_up, -1, "f2u"),
        "f2d": LinearOp(w_down, -1, "f2d"),
        "f3": LinearOp(f3, -1, "f3"),
        "f6": LinearOp(derivation_part(theta_values), -1, "f6"),
    }

    def h(c: Key) -> Vec:
        ptree, zs = c
        tops = _top_vertices(ptree, zs, unit)
        if not tops:
            return {}
        k, first = tops[0]
        tree_labels = trees.labels(ptree)
        label = tree_labels[k]
        y = by_name[label.name]
        before = sum(l.degree for l in tree_labels[:k])
        after = sum(l.degree for l in tree_labels[k + 1:])
        path = trees.vertex_paths(ptree)[k]
        new_tree = trees.replace_at_path(ptree, path, UNIT)
        new_zs = tuple(zs[:first]) + (y,) + tuple(zs[first + label.arity:])
        return keep({(new_tree, new_zs): ONE * _parity(before + q.degree_of(y) * after)})

    maps["h"] = LinearOp(h, 1, "h")
    return maps, (w_values, s_values, theta_values)


def unit_resolution(v: CogebraOverOperad, twisting: TwistingMorphism, t: Truncation | None = None) -> CobarResolution:
    """C†C V on V^{P⋄Q} with D = D₁ + … + D₆, the unit j, the projection q and K = ker q."""
    p, q = twisting.operad, twisting.coperad
    if not (p.planar and q.planar):
        raise UnsupportedError("the resolution is built in planar mode only")
    if not isinstance(p, FreeOperad) or getattr(p, "generator_of", None) is None:
        raise ValidationError(f"{p.name} is not of the form Bar†(Q)")
    if v.operad is not p:
        raise ShapeMismatchError(f"{v.name} is a cogebra over {v.operad.name}, not over {p.name}")
    _check_twisting(twisting)
    t = t or p.truncation
    logger.info(f"resolving {v.name} over {p.name}, A={t.max_arity} W={t.weight_cap}", tag="resolve")

    entries = planar_composite_keys(p.seq, q.seq, t)
    pq_seq = SymSeq.from_keys(entries, planar=True)
    composites = [e[0] for e in entries]
    pq = set(composites)
    cot = KeyedCotensor(v.carrier.degree_of, pq_seq, v.key_weight)
    keys = cot.keys(v.carrier.keys(), t)
    t.check_cells(len(keys), f"{v.name}^(P⋄Q)")
    space = GradedSpace.from_keys(keys, cot.degree)

    tree_maps, _ = _tree_side(p, q, twisting, pq)

    def dual(name: str) -> LinearOp:
        contra = cot.contra(tree_maps[name], composites)
        return LinearOp(lambda key: {k: c for k, c in contra.on_basis(key).items() if k in space}, -1, f"V^{name}")

    pieces = {
        "D1": dual("f1"),
        "D2u": dual("f2u"),
        "D2d": dual("f2d"),
        "D3": dual("f3"),
        "D4": cot.shuffle(LinearOp.identity(), v.d),
        "D5": _d5(v, twisting, cot, space),
        "D6": dual("f6"),
    }

    unit_composite = (p.unit, (q.unit,))

    def j_on(key: Key) -> Vec:
        out: Vec = {}
        for (_, r, word), c in v.coaction(key).items():
            target = ("E", (r, (q.unit,) * len(word)), word)
            if target in space:
                vadd(out, {target: ONE}, c)
        return out

    def q_on(key: Key) -> Vec:
        _, composite, word = key
        return {word[0]: ONE} if composite == unit_composite else {}

    j_map = GradedMap.from_function(v.carrier, space, 0, j_on)
    q_map = GradedMap.from_function(space, v.carrier, 0, q_on)
    kernel = GradedSpace.from_keys([k for k in keys if k[1] != unit_composite], cot.degree)
    h = tree_maps["h"]
    contra_h = cot.contra(h, composites)
    H = LinearOp(lambda key: {k: -c for k, c in contra_h.on_basis(key).items() if k in space}, 1, "H")
    trust = TrustWindow.from_truncation(t)
    logger.info(f"resolution of {v.name}: dims {space.dims}, kernel {kernel.dims}", tag="resolve")
    return CobarResolution(v, twisting, cot, composites, space, tree_maps, pieces, j_map, q_map, kernel, trust,
                           h, H)


def _d5(v: CogebraOverOperad, twisting: TwistingMorphism, cot: KeyedCotensor, space: GradedSpace) -> LinearOp:
    """−V^{Id⋄w}∘V^{Id⋄Σ(τ,α)}∘l∘a^{P⋄Q}: the coaction of one letter is merged into the Q-part above it."""
    p, q = twisting.operad, twisting.coperad
    alpha_t: Dict[Key, List[Tuple[Key, Rational]]] = {}
    for y in q.keys():
        for r, c in twisting.alpha.on_basis(y).items():
            alpha_t.setdefault(r, []).append((y, c))
    degree = v.carrier.degree_of

    def on_basis(key: Key) -> Vec:
        _, (ptree, zs), u = key
        owners = []
        for i, z in enumerate(zs):
            owners.extend((i, local) for local in range(q.arity_of(z)))
        total = trees.degree(ptree) + sum(q.degree_of(z) for z in zs)
        outer_sign = _parity(total + cot.degree(key))
        out: Vec = {}
        for j, letter in enumerate(u):
            after = sum(degree(x) for x in u[j + 1:])
            i0, local = owners[j]
            z = zs[i0]
            later = sum(q.degree_of(x) for x in zs[i0 + 1:])
            for (_, r, word), ca in v.coaction(letter).items():
                for y, c_alpha in alpha_t.get(r, ()):
                    tops = (q.unit,) * local + (y,) + (q.unit,) * (q.arity_of(z) - local - 1)
                    sign = -_parity(p.degree_of(r) * after + q.degree_of(y) * later) * outer_sign
                    for merged, cw in q.w_transpose((z, tops)).items():
                        target = ("E", (ptree, zs[:i0] + (merged,) + zs[i0 + 1:]), u[:j] + word + u[j + 1:])
                        if target in space:
                            vadd(out, {target: ONE}, ca * c_alpha * cw * sign)
        return out

    return LinearOp(on_basis, -1, "D5")


# verification


def _first_nonzero(op: LinearOp, keys: Sequence[Key], within: Callable[[Key], bool]) -> str | None:
    for key in keys:
        value = {k: c for k, c in op.on_basis(key).items() if within(k)}
        if value:
            return f"{op.name} on {key!r}: {describe(value)}"
    return None


def resolution_report(res: CobarResolution) -> Report:
    """q∘j = id, Dᵢ(K) ⊆ K, D² = 0, j a chain map and C†C V ≅ V ⊕ K."""
    report = Report(f"resolution of {res.cogebra.name}")
    unit_composite = res.unit_composite
    section = compose(res.q, res.j)
    report.add("section", None if section == GradedMap.identity(res.cogebra.carrier) else "q∘j ≠ id")
    kernel_keys = res.kernel.keys()
    for name in PIECES:
        failure = None
        for key in kernel_keys:
            escaped = {k: c for k, c in res.pieces[name].on_basis(key).items() if k[1] == unit_composite}
            if escaped:
                failure = f"{name}({key!r}) leaves K: {describe(escaped)}"
                break
        report.add(f"stable_{name}", failure)
    d = res.differential
    report.add("square_zero", _first_nonzero(d @ d, res.space.keys(), res.space.__contains__))
    dv = res.cogebra.d.materialize(res.cogebra.carrier, res.cogebra.carrier)
    d_mat = d.materialize(res.space, res.space)
    chain = compose(d_mat, res.j) == compose(res.j, dv)
    report.add("chain_map", None if chain else "D∘j ≠ j∘d_V")
    split = all(res.space.dim(n) == res.cogebra.carrier.dim(n) + res.kernel.dim(n)
                for n in set(res.space.degrees()) | set(res.cogebra.carrier.degrees()))
    report.add("splitting", None if split else "dim C†C V ≠ dim V + dim K")
    return report


def homotopy(res: CobarResolution) -> LinearOp:
    if not res.twisting.operad.planar:
        raise UnsupportedError("the contracting homotopy is built in planar mode only")
    return res.H


def tree_identity_report(res: CobarResolution) -> Report:
    """(f₁ + f₂ᵤ)∘h + h∘(f₁ + f₂ᵤ) = Id on P⋄Q away from η⋄ι."""
    report = Report("tree identity")
    f = res.tree_maps["f1"] + res.tree_maps["f2u"]
    h = res.tree_maps["h"]
    residual = (f @ h) + (h @ f) - LinearOp.identity()
    keys = [c for c in res.composites if c != res.unit_composite]
    within = set(res.composites).__contains__
    report.add("f_h", _first_nonzero(residual, keys, within))
    return report


def verify_homotopy_identities(res: CobarResolution) -> Report:
    """(D₁ + D₂ᵤ)H + H(D₁ + D₂ᵤ) = Id_K and (D₃ + D₄)H + H(D₃ + D₄) = 0 on K, plus H∘H = 0."""
    report = Report(f"homotopy identities for {res.cogebra.name}")
    H = homotopy(res)
    lo, hi = res.trust.lo, res.trust.hi
    keys = [k for k in res.kernel.keys() if lo <= res.kernel.degree_of(k) <= hi]
    within = res.kernel.__contains__
    up = res.pieces["D1"] + res.pieces["D2u"]
    first = (up @ H) + (H @ up) - LinearOp.identity()
    report.add("first", _first_nonzero(first, keys, within))
    middle = res.pieces["D3"] + res.pieces["D4"]
    second = (middle @ H) + (H @ middle)
    report.add("second", _first_nonzero(second, keys, within))
    report.add("H_squared", _first_nonzero(H @ H, keys, within))
    degree_ok = all(res.space.degree_of(k) == res.space.degree_of(key) + 1
                    for key in keys for k in H.on_basis(key) if k in res.space)
    report.add("H_degree", None if degree_ok else "H does not raise degree by one")
    return report


@dataclass
class AcyclicityResult:
    report: Report
    window: Tuple[int, int]
    kernel_homology: Dict[int, int]
    resolution_homology: Dict[int, int]
    cogebra_homology: Dict[int, int]

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_dict(self) -> dict:
        return {
            **self.report.to_dict(),
            "window": list(self.window),
            "homology": {str(d): n for d, n in sorted(self.kernel_homology.items())},
            "resolution_homology": {str(d): n for d, n in sorted(self.resolution_homology.items())},
            "cogebra_homology": {str(d): n for d, n in sorted(self.cogebra_homology.items())},
        }


def verify_acyclicity(res: CobarResolution, window: Tuple[int, int] | None = None) -> AcyclicityResult:
    """H_*(K) = 0, DH + HD invertible on K and j a quasi-isomorphism, inside the trust window."""
    window = res.trust.clamp(window)
    lo, hi = window
    report = Report(f"acyclicity of K for {res.cogebra.name}")
    kernel_complex = res.kernel_complex()
    kernel_homology = homology_dims(kernel_complex, window)
    report.add("kernel_acyclic", None if not kernel_homology else f"H_*(K) = {kernel_homology}")
    d = res.differential
    H = homotopy(res)
    commutator = ((d @ H) + (H @ d)).materialize(res.kernel, res.kernel)
    failure = None
    for n in range(lo, hi + 1):
        if commutator.rank(n) != res.kernel.dim(n):
            failure = f"DH + HD has rank {commutator.rank(n)} < {res.kernel.dim(n)} in degree {n}"
            break
    report.add("homotopy_invertible", failure)
    v = res.cogebra
    v_complex = ChainComplex(v.carrier, v.d.materialize(v.carrier, v.carrier), check=False)
    total = res.complex()
    try:
        quasi = is_quasi_iso(res.j, v_complex, total, window)
        report.add("unit_quasi_iso", None if quasi else "j is not a quasi-isomorphism")
    except ValidationError as error:
        report.add("unit_quasi_iso", str(error))
    logger.info(f"acyclicity of K for {v.name} in [{lo}, {hi}]: {report.passed}", tag="resolve")
    return AcyclicityResult(report, window, kernel_homology, homology_dims(total, window),
                            homology_dims(v_complex, window))
