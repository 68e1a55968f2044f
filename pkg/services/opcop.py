"""
Operads and curved coperads on basis labels.

An ``Operad`` is encoded by its partial compositions ∘ᵢ on basis labels; the
full composition is assembled on demand. A ``CurvedCoperad`` is encoded by its
decomposition w(z) = Σ c·(b; t₁, …, t_k), its counit τ, its cogmentation (the
unit label), its coderivation and its curvature θ. Free operads and cofree
conilpotent coperads use planar trees as basis labels (``services.trees``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product
from typing import Callable, Dict, Hashable, Iterator, List, Mapping, Sequence, Tuple

from services import trees
from services.errors import ShapeMismatchError, TruncationError, UnsupportedError, ValidationError
from services.graded import (
    GradedMap,
    GradedSpace,
    GradedSubspace,
    Key,
    Vec,
    koszul_sign,
    permutation_sign,
    preimage,
)
from services.keyed import LinearOp, describe, vadd
from services.qlinalg import ONE, ZERO, Rational, Subspace, quotient
from services.report import Report
from services.symseq import ExactnessCert, SymSeq, Truncation, tensor_vectors
from services.trees import UNIT, Label, Tree
from telemetrics.logger import logger

Composite = Tuple[Key, Tuple[Key, ...]]


def _first_mismatch(lhs: Mapping[Key, Rational], rhs: Mapping[Key, Rational],
                    within: Callable[[Key], bool] | None = None) -> Vec:
    diff = vadd(dict(lhs), rhs, -ONE)
    if within is not None:
        diff = {k: v for k, v in diff.items() if within(k)}
    return diff


# operads


class Operad:
    """Graded operad given by partial compositions on basis labels."""

    def __init__(
        self,
        name: str,
        seq: SymSeq,
        unit: Key,
        partial: Callable[[Key, int, Key], Mapping[Key, Rational]],
        differential: LinearOp | None = None,
        truncation: Truncation | None = None,
    ):
        if unit not in seq or seq.arity_of(unit) != 1 or seq.degree_of(unit) != 0:
            raise ValidationError(f"unit {unit!r} is not a degree 0 element of arity 1")
        self.name = name
        self.seq = seq
        self.unit = unit
        self._partial = partial
        self._partial_cache: Dict[Tuple[Key, int, Key], Vec] = {}
        self.d = differential or LinearOp.zero(-1)
        if self.d.degree != -1:
            raise ShapeMismatchError(f"operad differential has degree {self.d.degree}, expected -1")
        self.truncation = truncation or Truncation.default()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}, {self.seq.dims})"

    @property
    def planar(self) -> bool:
        return self.seq.planar

    def arities(self) -> List[int]:
        return self.seq.arities()

    def keys(self, arity: int | None = None) -> List[Key]:
        return self.seq.keys(arity)

    def arity_of(self, key: Key) -> int:
        return self.seq.arity_of(key)

    def degree_of(self, key: Key) -> int:
        return self.seq.degree_of(key)

    def weight_of(self, key: Key) -> int:
        return self.seq.weight_of(key)

    def contains(self, key: Key) -> bool:
        return key in self.seq

    def partial(self, x: Key, i: int, y: Key) -> Vec:
        """x ∘ᵢ y on basis labels (1 ≤ i ≤ arity of x)."""
        if not 1 <= i <= self.arity_of(x):
            raise ShapeMismatchError(f"cannot compose at input {i} of an arity {self.arity_of(x)} element")
        cache_key = (x, i, y)
        cached = self._partial_cache.get(cache_key)
        if cached is None:
            cached = {k: v for k, v in self._partial(x, i, y).items() if v}
            self._partial_cache[cache_key] = cached
        return cached

    def compose(self, xv: Mapping[Key, Rational], i: int, yv: Mapping[Key, Rational]) -> Vec:
        out: Vec = {}
        for x, a in xv.items():
            for y, b in yv.items():
                vadd(out, self.partial(x, i, y), a * b)
        return out

    def full(self, x: Key, tops: Sequence[Key]) -> Vec:
        """x ∘ (y₁, …, y_k), assembled from right to left out of partial compositions."""
        if len(tops) != self.arity_of(x):
            raise ShapeMismatchError(f"{len(tops)} inputs given to an arity {self.arity_of(x)} element")
        degrees = [self.degree_of(y) for y in tops]
        sign = permutation_sign(degrees, list(reversed(range(len(tops)))))
        result: Vec = {x: ONE * sign}
        for j in range(len(tops), 0, -1):
            result = self.compose(result, j, {tops[j - 1]: ONE})
        return result

    def restrict(self, vec: Mapping[Key, Rational]) -> Vec:
        return {k: v for k, v in vec.items() if k in self.seq}

    def m_transpose(self, p: Key) -> Vec:
        """Σ c·(x; y⃗) over the composites whose full composition contains p with coefficient c."""
        index = self.__dict__.get("_m_index")
        if index is None:
            index = {}
            A, W = self.truncation.max_arity, self.truncation.weight_cap
            for x in self.keys():
                budget = W - self.weight_of(x)
                if budget < 0:
                    continue
                for tops in _top_sequences(self, self.arity_of(x), A, budget):
                    for r, c in self.full(x, tops).items():
                        index.setdefault(r, {})[(x, tops)] = c
            self._m_index = index
        return index.get(p, {})

    def with_differential(self, d: LinearOp) -> "Operad":
        return Operad(self.name, self.seq, self.unit, self._partial, d, self.truncation)


def _top_sequences(p, k: int, arity_budget: int, weight_budget: int) -> Iterator[Tuple[Key, ...]]:
    if k == 0:
        yield ()
        return
    for y in p.keys():
        a, w = p.arity_of(y), p.weight_of(y)
        if a <= arity_budget - (k - 1) and w <= weight_budget:
            for rest in _top_sequences(p, k - 1, arity_budget - a, weight_budget - w):
                yield (y,) + rest


class FreeOperad(Operad):
    """Planar free operad T(M): planar trees with vertices labelled by generators, ∘ᵢ = grafting."""

    def __init__(
        self,
        name: str,
        generators: Sequence[Label],
        t: Truncation,
        differential: LinearOp | None = None,
    ):
        if t.max_arity < 1:
            raise TruncationError("max_arity must be at least 1 to hold the unit")
        self.generators: Tuple[Label, ...] = tuple(generators)
        self._labels: Dict[Hashable, Label] = {g.name: g for g in self.generators}
        basis = [tr for tr in trees.enumerate_trees(self.generators, t.weight_cap, t.max_arity)
                 if t.in_window(trees.degree(tr))]
        t.check_cells(len(basis), f"free operad {name}")
        seq = SymSeq.from_keys(
            ((tr, trees.arity(tr), trees.degree(tr), trees.weight(tr)) for tr in basis),
            planar=True,
            cert=ExactnessCert.full(t),
        )
        super().__init__(name, seq, UNIT, _graft, differential, t)

    def arity_of(self, key: Key) -> int:
        return trees.arity(key)

    def degree_of(self, key: Key) -> int:
        return trees.degree(key)

    def weight_of(self, key: Key) -> int:
        return trees.weight(key)

    def label(self, name: Hashable) -> Label:
        try:
            return self._labels[name]
        except KeyError:
            raise ShapeMismatchError(f"{name!r} is not a generator of {self.name}") from None

    def generator(self, name: Hashable) -> Tree:
        return trees.corolla(self.label(name))

    def full(self, x: Key, tops: Sequence[Key]) -> Vec:
        tree, sign = trees.assemble(x, tops)
        return {tree: ONE * sign}

    def m_transpose(self, p: Key) -> Vec:
        return _split(p)

    def with_differential(self, d: LinearOp) -> "FreeOperad":
        clone = FreeOperad.__new__(FreeOperad)
        clone.__dict__.update(self.__dict__)
        clone._partial_cache = {}
        clone.d = d
        return clone


def _graft(x: Tree, i: int, y: Tree) -> Vec:
    tree, sign = trees.partial_compose(x, i, y)
    return {tree: ONE * sign}


class SymmetricFreeOperad(Operad):
    """Symmetric free operad: leaf-labelled planar trees modulo the generators' symmetric actions.

    Basis labels are ("cls", (tree, leaves)) for the representatives picked by
    the quotient; ``leaves`` lists the input numbers read from left to right.
    """

    def __init__(self, name: str, gens: SymSeq, t: Truncation):
        if t.max_arity < 1:
            raise TruncationError("max_arity must be at least 1 to hold the unit")
        self.gens = gens
        self.generators = tuple(_labels_of(gens))
        plain = [tr for tr in trees.enumerate_trees(self.generators, t.weight_cap, t.max_arity)
                 if t.in_window(trees.degree(tr))]
        blocks: Dict[Tuple[int, int], List[Tuple[Tree, Tuple[int, ...]]]] = {}
        for tr in plain:
            n = trees.arity(tr)
            for leaves in permutations(range(1, n + 1)):
                blocks.setdefault((n, trees.degree(tr)), []).append((tr, leaves))
        t.check_cells(sum(len(v) for v in blocks.values()), f"symmetric free operad {name}")

        self._projections: Dict[Tuple[int, int], Tuple[Dict[Key, int], object, List[Key]]] = {}
        components: Dict[int, Dict[int, List[Key]]] = {}
        weights: Dict[Key, int] = {}
        for (n, d), keys in blocks.items():
            index = {k: j for j, k in enumerate(keys)}
            relations = []
            for key in keys:
                for swapped in self._vertex_swaps(key):
                    rel = {index[key]: ONE}
                    for other, c in swapped.items():
                        rel[index[other]] = rel.get(index[other], ZERO) - c
                    relations.append({j: c for j, c in rel.items() if c})
            projection, section = quotient(len(keys), Subspace.span(len(keys), relations))
            reps = [keys[next(iter(col))] for col in section.columns()]
            self._projections[(n, d)] = (index, projection, reps)
            components.setdefault(n, {})[d] = [("cls", rep) for rep in reps]
            for rep in reps:
                weights[("cls", rep)] = trees.weight(rep[0])

        spaces = {n: GradedSpace(basis) for n, basis in components.items()}
        actions = {
            n: [GradedMap.from_function(space, space, 0, self._leaf_transposition(j)) for j in range(1, n)]
            for n, space in spaces.items()
        }
        seq = SymSeq(spaces, actions, planar=False, cert=ExactnessCert.full(t), weights=weights)
        unit = ("cls", (UNIT, (1,)))
        super().__init__(name, seq, unit, self._compose_classes, None, t)
        self._labels: Dict[Hashable, Label] = {g.name: g for g in self.generators}

    def label(self, name: Hashable) -> Label:
        try:
            return self._labels[name]
        except KeyError:
            raise ShapeMismatchError(f"{name!r} is not a generator of {self.name}") from None

    def generator_class(self, name: Hashable) -> Vec:
        """Class of the corolla on ``name`` with its inputs in order."""
        label = self.label(name)
        return self.project({(trees.corolla(label), tuple(range(1, label.arity + 1))): ONE})

    def relabel(self, vec: Mapping[Key, Rational], leaves: Sequence[int]) -> Vec:
        """Input j becomes input ``leaves[j - 1]`` in every class of ``vec``."""
        out: Vec = {}
        for key, c in vec.items():
            if key == self.unit:
                vadd(out, {key: ONE}, c)
                continue
            tree, labels = key[1]
            vadd(out, self.project({(tree, tuple(leaves[l - 1] for l in labels)): ONE}), c)
        return out

    def with_differential(self, d: LinearOp) -> "SymmetricFreeOperad":
        if d.degree != -1:
            raise ShapeMismatchError(f"operad differential has degree {d.degree}, expected -1")
        clone = SymmetricFreeOperad.__new__(SymmetricFreeOperad)
        clone.__dict__.update(self.__dict__)
        clone._partial_cache = {}
        clone.d = d
        return clone

    def _vertex_swaps(self, key) -> Iterator[Vec]:
        """σᵢ at one vertex paired with swapping that vertex's children i and i+1."""
        tree, leaves = key
        for path in trees.vertex_paths(tree):
            node = trees.subtree_at(tree, path)
            label, children = node
            offset = _leaf_offset(tree, path)
            for i in range(1, label.arity):
                left, right = children[i - 1], children[i]
                sign = koszul_sign([(trees.degree(left), trees.degree(right))])
                start = offset + sum(trees.arity(c) for c in children[:i - 1])
                a, b = trees.arity(left), trees.arity(right)
                new_leaves = (leaves[:start] + leaves[start + a:start + a + b]
                              + leaves[start:start + a] + leaves[start + a + b:])
                new_children = children[:i - 1] + (right, left) + children[i + 1:]
                sigma = self.gens.transposition(label.arity, i)
                out: Vec = {}
                for name, c in sigma(label.name).items():
                    new_label = Label(name, self.gens.degree_of(name), label.arity, label.weight)
                    new_tree = trees.replace_at_path(tree, path, (new_label, new_children))
                    vadd(out, {(new_tree, new_leaves): ONE}, c * sign)
                yield out

    def project(self, vec: Mapping[Tuple[Tree, Tuple[int, ...]], Rational]) -> Vec:
        """Class of a combination of leaf-labelled trees; trees beyond the truncation are dropped."""
        grouped: Dict[Tuple[int, int], Dict[int, Rational]] = {}
        for key, c in vec.items():
            block = (trees.arity(key[0]), trees.degree(key[0]))
            entry = self._projections.get(block)
            if entry is None or key not in entry[0]:
                continue
            coords = grouped.setdefault(block, {})
            j = entry[0][key]
            coords[j] = coords.get(j, ZERO) + c
        out: Vec = {}
        for block, coords in grouped.items():
            _, projection, reps = self._projections[block]
            for row, c in projection.apply(coords).items():
                out[("cls", reps[row])] = c
        return out

    def _leaf_transposition(self, j: int):
        def on_basis(key):
            tree, leaves = key[1]
            swapped = tuple(j + 1 if l == j else j if l == j + 1 else l for l in leaves)
            return self.project({(tree, swapped): ONE})

        return on_basis

    def _compose_classes(self, x: Key, i: int, y: Key) -> Vec:
        (tx, lx), (ty, ly) = x[1], y[1]
        position = lx.index(i)
        tree, sign = trees.partial_compose(tx, position + 1, ty)
        m = len(ly)
        shifted = tuple(l if l < i else l + m - 1 for l in lx)
        leaves = shifted[:position] + tuple(i - 1 + l for l in ly) + shifted[position + 1:]
        return self.project({(tree, leaves): ONE * sign})


def _leaf_offset(tree: Tree, path: Sequence[int]) -> int:
    offset = 0
    node = tree
    for k in path:
        offset += sum(trees.arity(c) for c in node[1][:k])
        node = node[1][k]
    return offset


def _labels_of(gens: SymSeq) -> List[Label]:
    labels = []
    for key in gens.keys():
        if gens.arity_of(key) == 0:
            raise UnsupportedError(f"generator {key!r} has arity 0; arity-0 generators are not supported")
        labels.append(Label(key, gens.degree_of(key), gens.arity_of(key), gens.weight_of(key) or 1))
    return labels


def free_operad(gens: SymSeq, t: Truncation, planar: bool = True, name: str = "T") -> Operad:
    """Free operad on a sequence of generators, truncated to weight ≤ W and arity ≤ A."""
    logger.info(f"free operad {name}: {gens.total_dim()} generators, planar={planar}", tag="free_operad")
    if planar:
        result: Operad = FreeOperad(name, _labels_of(gens), t)
    else:
        result = SymmetricFreeOperad(name, gens, t)
    logger.info(f"free operad {name}: dims {result.seq.dims}", tag="free_operad")
    return result


def extend_derivation(p: Operad, gen_values: Mapping[Hashable, Mapping[Key, Rational]], degree: int) -> LinearOp:
    """The derivation of T(M) restricting to ``gen_values`` (generator name → element) on generators.

    On a tree, the Leibniz sum replaces one vertex at a time by the value of its label.
    """
    if not isinstance(p, (FreeOperad, SymmetricFreeOperad)):
        raise UnsupportedError("derivations are extended on free operads only")
    values: Dict[Hashable, Dict[Key, Rational]] = {}
    for name, value in gen_values.items():
        label = p.label(name)
        for key, c in value.items():
            if not c:
                continue
            if p.arity_of(key) != label.arity:
                raise ShapeMismatchError(f"value on {name!r} has arity {p.arity_of(key)}, expected {label.arity}")
            if p.degree_of(key) != label.degree + degree:
                raise ShapeMismatchError(
                    f"value on {name!r} has degree {p.degree_of(key)}, expected {label.degree + degree}"
                )
        values[name] = {key: c for key, c in value.items() if c}

    if isinstance(p, SymmetricFreeOperad):
        return LinearOp(_symmetric_leibniz(p, values, degree), degree, f"der({p.name})")

    def on_basis(t: Tree) -> Vec:
        out: Vec = {}
        before = 0
        for k, label in enumerate(trees.labels(t)):
            for r, c in values.get(label.name, {}).items():
                new, sign = trees.substitute_vertex(t, k, r)
                vadd(out, {new: ONE}, c * sign * koszul_sign([(degree, before)]))
            before += label.degree
        return out

    return LinearOp(on_basis, degree, f"der({p.name})")


def _symmetric_leibniz(p: SymmetricFreeOperad, values: Mapping[Hashable, Mapping[Key, Rational]], degree: int):
    """Leibniz sum on leaf-labelled trees; a value class (r, order) feeds child order[j] into leaf j of r."""

    def on_basis(key: Key) -> Vec:
        if key == p.unit:
            return {}
        tree, leaves = key[1]
        out: Vec = {}
        before = 0
        for k, path in enumerate(trees.vertex_paths(tree)):
            label, children = trees.subtree_at(tree, path)
            offset = _leaf_offset(tree, path)
            blocks, start = [], offset
            for child in children:
                blocks.append(leaves[start:start + trees.arity(child)])
                start += trees.arity(child)
            prefix, suffix = leaves[:offset], leaves[start:]
            for value, c in values.get(label.name, {}).items():
                r, order = value[1]
                picked = [j - 1 for j in order]
                sign = permutation_sign([trees.degree(child) for child in children], picked)
                permuted = trees.replace_at_path(tree, path, (label, tuple(children[j] for j in picked)))
                new, graft_sign = trees.substitute_vertex(permuted, k, r)
                new_leaves = prefix + tuple(l for j in picked for l in blocks[j]) + suffix
                term = p.project({(new, new_leaves): ONE})
                vadd(out, term, c * sign * graft_sign * koszul_sign([(degree, before)]))
            before += label.degree
        return out

    return on_basis


def restrict_derivation(p: Operad, d: LinearOp) -> Dict[Hashable, Vec]:
    """Values of a derivation on the generators; inverse of ``extend_derivation``."""
    if isinstance(p, SymmetricFreeOperad):
        return {g.name: d(p.generator_class(g.name)) for g in p.generators if p.generator_class(g.name)}
    return {g.name: dict(d.on_basis(trees.corolla(g))) for g in p.generators if trees.corolla(g) in p.seq}


def check_derivation(p: Operad, d: LinearOp) -> str | None:
    """First failure of d(x ∘ᵢ y) = dx ∘ᵢ y + (−1)^{|d||x|} x ∘ᵢ dy, or None."""
    A, W = p.truncation.max_arity, p.truncation.weight_cap
    for x in p.keys():
        for y in p.keys():
            if p.arity_of(x) + p.arity_of(y) - 1 > A or p.weight_of(x) + p.weight_of(y) > W:
                continue
            for i in range(1, p.arity_of(x) + 1):
                lhs = d(p.partial(x, i, y))
                rhs = p.compose(d.on_basis(x), i, {y: ONE})
                vadd(rhs, p.compose({x: ONE}, i, d.on_basis(y)), ONE * koszul_sign([(d.degree, p.degree_of(x))]))
                diff = _first_mismatch(lhs, rhs, p.contains)
                if diff:
                    return f"d({x!r} ∘{i} {y!r}) differs by {describe(diff)}"
    return None


def _triples(p: Operad) -> Iterator[Tuple[Key, Key, Key]]:
    A, W = p.truncation.max_arity, p.truncation.weight_cap
    keys = p.keys()
    for x in keys:
        for y in keys:
            if p.arity_of(x) + p.arity_of(y) - 1 > A or p.weight_of(x) + p.weight_of(y) > W:
                continue
            for z in keys:
                if p.arity_of(x) + p.arity_of(y) + p.arity_of(z) - 2 > A:
                    continue
                if p.weight_of(x) + p.weight_of(y) + p.weight_of(z) > W:
                    continue
                yield x, y, z


def _unit_failure(p: Operad) -> str | None:
    for x in p.keys():
        if p.restrict(p.partial(p.unit, 1, x)) != {x: ONE}:
            return f"η ∘1 {x!r} ≠ {x!r}"
        for i in range(1, p.arity_of(x) + 1):
            if p.restrict(p.partial(x, i, p.unit)) != {x: ONE}:
                return f"{x!r} ∘{i} η ≠ {x!r}"
    return None


def _sequential_failure(p: Operad) -> str | None:
    for x, y, z in _triples(p):
        for i in range(1, p.arity_of(x) + 1):
            for j in range(1, p.arity_of(y) + 1):
                lhs = p.compose(p.partial(x, i, y), i - 1 + j, {z: ONE})
                rhs = p.compose({x: ONE}, i, p.partial(y, j, z))
                diff = _first_mismatch(lhs, rhs, p.contains)
                if diff:
                    return f"({x!r} ∘{i} {y!r}) ∘{i - 1 + j} {z!r} differs by {describe(diff)}"
    return None


def _parallel_failure(p: Operad) -> str | None:
    for x, y, z in _triples(p):
        ar_x, ar_y = p.arity_of(x), p.arity_of(y)
        sign = koszul_sign([(p.degree_of(y), p.degree_of(z))])
        for i in range(1, ar_x + 1):
            for k in range(i + 1, ar_x + 1):
                lhs = p.compose(p.partial(x, i, y), k - 1 + ar_y, {z: ONE})
                rhs = p.compose(p.partial(x, k, z), i, {y: ONE * sign})
                diff = _first_mismatch(lhs, rhs, p.contains)
                if diff:
                    return f"({x!r} ∘{i} {y!r}) ∘{k - 1 + ar_y} {z!r} differs by {describe(diff)}"
    return None


def _square_zero_failure(d: LinearOp, keys: Sequence[Key], within: Callable[[Key], bool]) -> str | None:
    for key in keys:
        value = {k: v for k, v in d(d.on_basis(key)).items() if within(k)}
        if value:
            return f"d²({key!r}) = {describe(value)}"
    return None


OPERAD_AXIOMS = ("unit", "sequential_associativity", "parallel_associativity", "equivariance", "derivation",
                 "square_zero")


def validate_operad(p: Operad, axioms: Sequence[str] | None = None) -> Report:
    """Check the operad axioms on every basis element within the truncation."""
    axioms = tuple(axioms or OPERAD_AXIOMS)
    logger.info(f"validating operad {p.name}: {p.seq.total_dim()} basis elements", tag="validate")
    report = Report(f"operad {p.name}")
    if "unit" in axioms:
        report.add("unit", _unit_failure(p))
    if "sequential_associativity" in axioms:
        report.add("sequential_associativity", _sequential_failure(p))
    if "parallel_associativity" in axioms:
        report.add("parallel_associativity", _parallel_failure(p))
    if "equivariance" in axioms and not p.planar:
        failures = p.seq.coxeter_failures()
        report.add("equivariance", failures[0] if failures else None)
    if "derivation" in axioms:
        report.add("derivation", check_derivation(p, p.d))
    if "square_zero" in axioms:
        report.add("square_zero", _square_zero_failure(p.d, p.keys(), p.contains))
    return report


# curved coperads


class CurvedCoperad:
    """Curved cogmented coperad given by its decomposition on basis labels.

    ``decompose(z)`` returns Σ c·(b, (t₁, …, t_k)) with k the arity of b and the
    tops read from left to right.
    """

    def __init__(
        self,
        name: str,
        seq: SymSeq,
        unit: Key,
        decompose: Callable[[Key], Mapping[Composite, Rational]],
        counit: Callable[[Key], Rational],
        differential: LinearOp | None = None,
        curvature: Callable[[Key], Rational] | None = None,
        truncation: Truncation | None = None,
    ):
        if unit not in seq or seq.arity_of(unit) != 1 or seq.degree_of(unit) != 0:
            raise ValidationError(f"cogmentation {unit!r} is not a degree 0 element of arity 1")
        self.name = name
        self.seq = seq
        self.unit = unit
        self._decompose = decompose
        self._counit = counit
        self._curvature = curvature or (lambda key: ZERO)
        self._w_cache: Dict[Key, Vec] = {}
        self.d = differential or LinearOp.zero(-1)
        if self.d.degree != -1:
            raise ShapeMismatchError(f"coperad coderivation has degree {self.d.degree}, expected -1")
        self.truncation = truncation or Truncation.default()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}, {self.seq.dims})"

    @property
    def planar(self) -> bool:
        return self.seq.planar

    def arities(self) -> List[int]:
        return self.seq.arities()

    def keys(self, arity: int | None = None) -> List[Key]:
        return self.seq.keys(arity)

    def arity_of(self, key: Key) -> int:
        return self.seq.arity_of(key)

    def degree_of(self, key: Key) -> int:
        return self.seq.degree_of(key)

    def weight_of(self, key: Key) -> int:
        return self.seq.weight_of(key)

    def composite_degree(self, composite: Composite) -> int:
        b, tops = composite
        return self.degree_of(b) + sum(self.degree_of(t) for t in tops)

    def w(self, z: Key) -> Vec:
        cached = self._w_cache.get(z)
        if cached is None:
            cached = {k: v for k, v in self._decompose(z).items() if v}
            self._w_cache[z] = cached
        return cached

    def tau(self, z: Key) -> Rational:
        return self._counit(z) if self.arity_of(z) == 1 else ZERO

    def theta(self, z: Key) -> Rational:
        return self._curvature(z) if self.arity_of(z) == 1 else ZERO

    @property
    def is_cogmented(self) -> bool:
        return self.tau(self.unit) == ONE

    def reduced_keys(self) -> List[Key]:
        """Basis of Q̄ = ker τ, when it is spanned by the labels other than the cogmentation."""
        keys = []
        for key in self.keys():
            if key == self.unit:
                continue
            if self.tau(key):
                raise UnsupportedError(f"{self.name}: counit does not vanish on {key!r}; Q̄ is not key-spanned")
            keys.append(key)
        return keys

    def w_bar(self, z: Key) -> Vec:
        """Reduced decomposition (w − (ιτ⋄Id) − (Id⋄ιτ))(z)."""
        out = dict(self.w(z))
        for (b, tops), c in self.w(z).items():
            tau_b = self.tau(b)
            if tau_b:
                vadd(out, {(self.unit, tops): ONE}, -c * tau_b)
            tau_tops = ONE
            for top in tops:
                tau_tops *= self.tau(top)
                if not tau_tops:
                    break
            if tau_tops:
                vadd(out, {(b, (self.unit,) * len(tops)): ONE}, -c * tau_tops)
        return out

    def w2(self, z: Key) -> Dict[Tuple[Key, int, Key], Rational]:
        """Infinitesimal part of w on Q̄: terms (x; ι, …, y, …, ι) with x ≠ ι and exactly one top y ≠ ι."""
        out: Dict[Tuple[Key, int, Key], Rational] = {}
        for (b, tops), c in self.w(z).items():
            if b == self.unit:
                continue
            others = [(i, top) for i, top in enumerate(tops, start=1) if top != self.unit]
            if len(others) == 1:
                i, y = others[0]
                out[(b, i, y)] = out.get((b, i, y), ZERO) + c
        return {k: v for k, v in out.items() if v}

    def w_transpose(self, composite: Composite) -> Vec:
        """Σ c·y over the basis elements y whose decomposition contains ``composite`` with coefficient c."""
        index = self.__dict__.get("_w_index")
        if index is None:
            index = {}
            for y in self.keys():
                for comp, c in self.w(y).items():
                    index.setdefault(comp, {})[y] = c
            self._w_index = index
        return index.get(composite, {})


Shuffle = Tuple[Key, int, Key, Tuple[int, ...]]


class SymmetricCoperad(CurvedCoperad):
    """Symmetric cogmented coperad known through its infinitesimal decomposition.

    ``infinitesimal(z)`` returns Σ c·(x, i, y, leaves): the planar x ∘ᵢ y with
    input j of the composite relabelled ``leaves[j - 1]``. The full decomposition
    is not available, so ``w`` raises.
    """

    def __init__(
        self,
        name: str,
        seq: SymSeq,
        unit: Key,
        infinitesimal: Callable[[Key], Mapping[Shuffle, Rational]],
        counit: Callable[[Key], Rational],
        differential: LinearOp | None = None,
        curvature: Callable[[Key], Rational] | None = None,
        truncation: Truncation | None = None,
    ):
        if seq.planar:
            raise ShapeMismatchError(f"{name}: a symmetric coperad needs a non-planar sequence")
        super().__init__(name, seq, unit, self._no_decomposition, counit, differential, curvature, truncation)
        self._infinitesimal = infinitesimal

    def _no_decomposition(self, z: Key) -> Vec:
        raise UnsupportedError(f"{self.name} only carries its infinitesimal decomposition")

    def w2(self, z: Key) -> Dict[Shuffle, Rational]:
        if z == self.unit:
            return {}
        out: Dict[Shuffle, Rational] = {}
        for (x, i, y, leaves), c in self._infinitesimal(z).items():
            if x == self.unit or y == self.unit:
                continue
            if sorted(leaves) != list(range(1, self.arity_of(z) + 1)):
                raise ValidationError(f"{self.name}: w₂({z!r}) relabels inputs by {leaves}, not a permutation")
            out[(x, i, y, tuple(leaves))] = out.get((x, i, y, tuple(leaves)), ZERO) + c
        return {k: v for k, v in out.items() if v}


class CofreeCoperad(CurvedCoperad):
    """Cofree conilpotent planar coperad T^c(V): planar trees, w = splitting along lower sets."""

    def __init__(
        self,
        name: str,
        cogenerators: Sequence[Label],
        t: Truncation,
        projection: Callable[[Tree], Mapping[Label, Rational]] | None = None,
        curvature_values: Mapping[Hashable, Rational] | None = None,
    ):
        if t.max_arity < 1:
            raise TruncationError("max_arity must be at least 1 to hold the cogmentation")
        self.cogenerators: Tuple[Label, ...] = tuple(cogenerators)
        self._labels = {g.name: g for g in self.cogenerators}
        basis = [tr for tr in trees.enumerate_trees(self.cogenerators, t.weight_cap, t.max_arity)
                 if t.in_window(trees.degree(tr))]
        t.check_cells(len(basis), f"cofree coperad {name}")
        seq = SymSeq.from_keys(
            ((tr, trees.arity(tr), trees.degree(tr), trees.weight(tr)) for tr in basis),
            planar=True,
            cert=ExactnessCert.full(t),
        )
        self.curvature_values = dict(curvature_values or {})
        super().__init__(name, seq, UNIT, _split, _tree_counit, None, self._tree_curvature, t)
        if projection is not None:
            self.d = extend_coderivation(self, projection)

    def label(self, name: Hashable) -> Label:
        try:
            return self._labels[name]
        except KeyError:
            raise ShapeMismatchError(f"{name!r} is not a cogenerator of {self.name}") from None

    def cogenerator(self, name: Hashable) -> Tree:
        return trees.corolla(self.label(name))

    def _tree_curvature(self, z: Tree) -> Rational:
        if z == UNIT or trees.vertex_count(z) != 1:
            return ZERO
        return self.curvature_values.get(z[0].name, ZERO)


def _split(t: Tree) -> Vec:
    out: Vec = {}
    for cut in trees.cuts(t):
        vadd(out, {(cut.bottom, cut.tops): ONE}, ONE * cut.sign)
    return out


def _tree_counit(t: Tree) -> Rational:
    return ONE if t == UNIT else ZERO


def extend_coderivation(q: CofreeCoperad, proj_values: Callable[[Tree], Mapping[Label, Rational]],
                        degree: int = -1) -> LinearOp:
    """The coderivation of T^c(V) whose projection onto the cogenerators is ``proj_values``.

    On a tree, each nonempty connected subtree is contracted in turn to one vertex
    labelled by the projection of that subtree.
    """
    if not isinstance(q, CofreeCoperad):
        raise UnsupportedError("coderivations are extended on cofree coperads only")

    def on_basis(t: Tree) -> Vec:
        out: Vec = {}
        for c in trees.contractions(t):
            for label, coeff in proj_values(c.subtree).items():
                if not coeff:
                    continue
                if label.arity != trees.arity(c.subtree):
                    raise ShapeMismatchError(
                        f"projection of {trees.render(c.subtree)} has arity {label.arity}, "
                        f"expected {trees.arity(c.subtree)}"
                    )
                if label.degree != trees.degree(c.subtree) + degree:
                    raise ShapeMismatchError(
                        f"projection of {trees.render(c.subtree)} has degree {label.degree}, "
                        f"expected {trees.degree(c.subtree) + degree}"
                    )
                new = trees.replace_at_path(t, c.path, (label, c.tops))
                vadd(out, {new: ONE}, coeff * c.sign * koszul_sign([(degree, c.degree_before)]))
        return out

    return LinearOp(on_basis, degree, f"coder({q.name})")


# coperad checks


def _decompose_bottom(q: CurvedCoperad, z: Key) -> Vec:
    """(w⋄Id)∘w in the normal form (x, ys, zs)."""
    out: Vec = {}
    for (b, tops), c in q.w(z).items():
        for (x, ys), c2 in q.w(b).items():
            vadd(out, {(x, ys, tops): ONE}, c * c2)
    return out


def _decompose_tops(q: CurvedCoperad, z: Key) -> Vec:
    """(Id⋄w)∘w in the normal form (x, ys, zs), with the Koszul sign of regrouping."""
    out: Vec = {}
    for (b, tops), c in q.w(z).items():
        expansions = [list(q.w(top).items()) for top in tops]
        for combo in product(*expansions):
            coeff = c
            parity = 0
            seen = 0
            ys, zs = [], []
            for (y, group), c_i in combo:
                coeff *= c_i
                parity += q.degree_of(y) * seen
                seen += sum(q.degree_of(g) for g in group)
                ys.append(y)
                zs.extend(group)
            vadd(out, {(b, tuple(ys), tuple(zs)): ONE}, coeff * (-1 if parity % 2 else 1))
    return out


def _counit_failure(q: CurvedCoperad) -> str | None:
    for z in q.keys():
        left: Vec = {}
        right: Vec = {}
        for (b, tops), c in q.w(z).items():
            if q.arity_of(b) == 1:
                vadd(left, {tops[0]: ONE}, c * q.tau(b))
            tau_tops = ONE
            for top in tops:
                tau_tops *= q.tau(top)
            vadd(right, {b: ONE}, c * tau_tops)
        if left != {z: ONE}:
            return f"(τ⋄Id)w({z!r}) = {describe(left)}"
        if right != {z: ONE}:
            return f"(Id⋄τ)w({z!r}) = {describe(right)}"
    return None


def _coassociativity_failure(q: CurvedCoperad) -> str | None:
    for z in q.keys():
        diff = _first_mismatch(_decompose_bottom(q, z), _decompose_tops(q, z))
        if diff:
            return f"coassociativity fails on {z!r}: {describe(diff)}"
    return None


def _coderivation_failure(q: CurvedCoperad) -> str | None:
    d = q.d
    for z in q.keys():
        lhs: Vec = {}
        for y, c in d.on_basis(z).items():
            vadd(lhs, q.w(y), c)
        rhs: Vec = {}
        for (b, tops), c in q.w(z).items():
            for db, c2 in d.on_basis(b).items():
                vadd(rhs, {(db, tops): ONE}, c * c2)
            before = q.degree_of(b)
            for i, top in enumerate(tops):
                sign = koszul_sign([(d.degree, before)])
                for dt, c2 in d.on_basis(top).items():
                    vadd(rhs, {(b, tops[:i] + (dt,) + tops[i + 1:]): ONE}, c * c2 * sign)
                before += q.degree_of(top)
        diff = _first_mismatch(lhs, rhs)
        if diff:
            return f"w∘d ≠ (d⋄Id + Id⋄′d)∘w on {z!r}: {describe(diff)}"
    return None


def _theta_d_failure(q: CurvedCoperad) -> str | None:
    for z in q.keys():
        value = sum((c * q.theta(y) for y, c in q.d.on_basis(z).items()), ZERO)
        if value:
            return f"θ(d {z!r}) = {value}"
    return None


def curvature_term(q: CurvedCoperad, z: Key) -> Vec:
    """(θ⋄Id − Id⋄Σ(τ,θ))∘w(z)."""
    out: Vec = {}
    for (b, tops), c in q.w(z).items():
        if q.arity_of(b) == 1:
            theta_b = q.theta(b)
            if theta_b:
                vadd(out, {tops[0]: ONE}, c * theta_b)
        for i in range(len(tops)):
            coeff = c
            for j, top in enumerate(tops):
                coeff *= q.theta(top) if j == i else q.tau(top)
                if not coeff:
                    break
            if coeff:
                vadd(out, {b: ONE}, -coeff)
    return out


def _curvature_failure(q: CurvedCoperad) -> str | None:
    for z in q.keys():
        diff = _first_mismatch(q.d(q.d.on_basis(z)), curvature_term(q, z))
        if diff:
            return f"d² ≠ (θ⋄Id − Id⋄Σ(τ,θ))∘w on {z!r}: {describe(diff)}"
    return None


COPERAD_AXIOMS = ("counit", "cogmentation", "coassociativity", "coderivation", "theta_d", "curvature")


def validate_curved_coperad(q: CurvedCoperad, axioms: Sequence[str] | None = None) -> Report:
    axioms = tuple(axioms or COPERAD_AXIOMS)
    logger.info(f"validating coperad {q.name}: {q.seq.total_dim()} basis elements", tag="validate")
    report = Report(f"coperad {q.name}")
    if isinstance(q, SymmetricCoperad):
        if "cogmentation" in axioms:
            report.add("cogmentation", None if q.is_cogmented else f"τ(ι) = {q.tau(q.unit)}")
        failures = q.seq.coxeter_failures()
        report.add("equivariance", failures[0] if failures else None)
        skipped = [a for a in axioms if a != "cogmentation"]
        if skipped:
            logger.warning(f"{q.name}: {', '.join(skipped)} need the full decomposition; skipped", tag="validate")
        return report
    if "counit" in axioms:
        report.add("counit", _counit_failure(q))
    if "cogmentation" in axioms:
        report.add("cogmentation", None if q.is_cogmented else f"τ(ι) = {q.tau(q.unit)}")
    if "coassociativity" in axioms:
        report.add("coassociativity", _coassociativity_failure(q))
    if "coderivation" in axioms:
        report.add("coderivation", _coderivation_failure(q))
    if "theta_d" in axioms:
        report.add("theta_d", _theta_d_failure(q))
    if "curvature" in axioms:
        report.add("curvature", _curvature_failure(q))
    return report


# coradical filtration


@dataclass
class Filtration:
    """F₀Q ⊆ F₁Q ⊆ … per arity, with the reduced parts F_nQ̄ = F_nQ ∩ Q̄."""

    coperad: CurvedCoperad
    stages: List[Dict[int, GradedSubspace]]
    reduced: List[Dict[int, GradedSubspace]]
    stable: bool

    def stage(self, n: int) -> Dict[int, GradedSubspace]:
        return self.stages[min(n, len(self.stages) - 1)]

    def reduced_stage(self, n: int) -> Dict[int, GradedSubspace]:
        return self.reduced[min(n, len(self.reduced) - 1)]

    def dims(self, n: int) -> Dict[int, int]:
        return {a: sub.total_dim() for a, sub in self.stage(n).items()}

    def contains(self, n: int, vec: Mapping[Key, Rational]) -> bool:
        if not vec:
            return True
        arity = self.coperad.arity_of(next(iter(vec)))
        space = self.coperad.seq.component(arity)
        by_degree: Dict[int, Vec] = {}
        for key, c in vec.items():
            by_degree.setdefault(space.degree_of(key), {})[key] = c
        stage = self.stage(n).get(arity) or GradedSubspace.zero(space)
        return stage.contains(GradedSubspace.span(space, by_degree.values()))

    def quotient_map(self, n: int, arity: int) -> GradedMap:
        """q_n : Q(arity) ↠ Q(arity)/F_nQ(arity), on the complement coordinates."""
        space = self.coperad.seq.component(arity)
        stage = self.stage(n).get(arity) or GradedSubspace.zero(space)
        blocks, target = {}, {}
        for d in space.degrees():
            projection, _ = quotient(space.dim(d), stage.part(d))
            blocks[d] = projection
            target[d] = [("q", n, d, j) for j in range(projection.rows)]
        return GradedMap(space, GradedSpace(target), 0, blocks)

    def exhausts(self) -> bool:
        last = self.stages[-1]
        for a in self.coperad.seq.arities():
            space = self.coperad.seq.component(a)
            if (last.get(a) or GradedSubspace.zero(space)) != GradedSubspace.full(space):
                return False
        return True


def _reduced_space(q: CurvedCoperad, arity: int) -> GradedSubspace:
    space = q.seq.component(arity)
    if arity != 1:
        return GradedSubspace.full(space)
    vectors = []
    for key in space.keys():
        if key == q.unit:
            continue
        vec = {key: ONE}
        if q.tau(key):
            vec[q.unit] = -q.tau(key)
        vectors.append(vec)
    return GradedSubspace.span(space, vectors)


def _compositions(total: int, parts: int, cap: int) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(0, min(total, cap) + 1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


def _arity_splits(total: int, parts: int, arities: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for a in arities:
        if a <= total:
            for rest in _arity_splits(total - a, parts - 1, arities):
                yield (a,) + rest


def _product_vectors(
    bottoms: Mapping[int, List[Vec]], tops: Sequence[Mapping[int, List[Vec]]], arity: int, arities: Sequence[int]
) -> Iterator[Vec]:
    """(u; v₁, …, v_k) for u among ``bottoms[k]`` and vₗ among ``tops[l][aₗ]``, with Σ aₗ = arity."""
    k = len(tops)
    for split in _arity_splits(arity, k, arities):
        choices = [tops[l].get(split[l], []) for l in range(k)]
        if any(not c for c in choices):
            continue
        for u in bottoms.get(k, []):
            for combo in product(*choices):
                word_vec = tensor_vectors([u, *combo])
                yield {(word[0], tuple(word[1:])): c for word, c in word_vec.items()}


def coradical_filtration(q: CurvedCoperad, t: Truncation | None = None) -> Filtration:
    """Coradical filtration, F_{n}Q̄ = Q̄ ∩ w̄⁻¹(Σ F_{i₀}Q̄ ⋄ (F_{i₁}Q, …)) with i₀ ≥ 1, all indices < n, sum n."""
    if not q.is_cogmented:
        raise ValidationError(f"{q.name} is not cogmented: τ(ι) = {q.tau(q.unit)}")
    t = t or q.truncation
    arities = q.seq.arities()
    logger.info(f"coradical filtration of {q.name}, up to stage {t.weight_cap}", tag="coradical")
    spaces = {a: q.seq.component(a) for a in arities}
    reduced_space = {a: _reduced_space(q, a) for a in arities}
    unit_span = {a: GradedSubspace.zero(spaces[a]) for a in arities}
    unit_span[1] = GradedSubspace.span(spaces[1], [{q.unit: ONE}])

    w_bar_images = {a: {z: q.w_bar(z) for z in spaces[a].keys()} for a in arities}
    stages = [dict(unit_span)]
    reduced = [{a: GradedSubspace.zero(spaces[a]) for a in arities}]
    stable = False

    for n in range(1, t.weight_cap + 1):
        bottom_vectors = [{k: sub.keyed_vectors() for k, sub in stage.items()} for stage in reduced]
        top_vectors = [{k: sub.keyed_vectors() for k, sub in stage.items()} for stage in stages]
        new_reduced, new_stage = {}, {}
        for a in arities:
            spanning: List[Vec] = []
            for k in arities:
                if k > a:
                    continue
                for i0 in range(1, n):
                    for js in _compositions(n - i0, k, n - 1):
                        spanning.extend(_product_vectors(
                            bottom_vectors[i0], [top_vectors[j] for j in js], a, arities
                        ))
            keys = set()
            for image in w_bar_images[a].values():
                keys.update(image)
            for vec in spanning:
                keys.update(vec)
            target = GradedSpace.from_keys(sorted(keys, key=repr), q.composite_degree)
            w_bar_map = GradedMap.from_function(spaces[a], target, 0, w_bar_images[a].__getitem__)
            allowed = GradedSubspace.span(target, spanning)
            new_reduced[a] = preimage(w_bar_map, allowed).intersection(reduced_space[a])
            new_stage[a] = new_reduced[a].sum(unit_span[a])
        logger.debug(f"stage {n}: {({a: s.total_dim() for a, s in new_stage.items()})}", tag="coradical")
        if all(new_stage[a] == stages[-1][a] for a in arities):
            stable = True
            break
        stages.append(new_stage)
        reduced.append(new_reduced)

    filtration = Filtration(q, stages, reduced, stable)
    logger.info(f"coradical filtration of {q.name}: {len(stages)} stages, stable={stable}", tag="coradical")
    return filtration


def is_locally_conilpotent(q: CurvedCoperad, t: Truncation | None = None,
                           filtration: Filtration | None = None) -> bool:
    """∪ F_nQ = Q in every arity within the truncation."""
    filtration = filtration or coradical_filtration(q, t)
    return filtration.exhausts()


def check_subcoperad(filtration: Filtration, n: int) -> str | None:
    """First element z of F_nQ with w(z) ∉ F_nQ ⋄ F_nQ, or None."""
    q = filtration.coperad
    arities = q.seq.arities()
    stage = {k: sub.keyed_vectors() for k, sub in filtration.stage(n).items()}
    for a in arities:
        vectors = filtration.stage(n).get(a)
        if vectors is None:
            continue
        spanning: List[Vec] = []
        for k in arities:
            if k <= a:
                spanning.extend(_product_vectors(stage, [stage] * k, a, arities))
        for z in vectors.keyed_vectors():
            image: Vec = {}
            for key, c in z.items():
                vadd(image, q.w(key), c)
            keys = set(image)
            for vec in spanning:
                keys.update(vec)
            target = GradedSpace.from_keys(sorted(keys, key=repr), q.composite_degree)
            allowed = GradedSubspace.span(target, spanning)
            if image and not allowed.contains(GradedSubspace.span(target, [image])):
                return f"w({describe(z)}) leaves F_{n}Q ⋄ F_{n}Q"
    return None


def check_factorisation(filtration: Filtration, n: int) -> str | None:
    """Q̄ → Q̄⋄Q → Q̄⋄Σ(Q, Q/F_nQ) vanishes on F_{n+1}Q̄: first failing element, or None."""
    q = filtration.coperad
    for a, sub in filtration.reduced_stage(n + 1).items():
        for z in sub.keyed_vectors():
            grouped: Dict[Tuple[int, Key, Tuple[Key, ...]], Vec] = {}
            for key, c in z.items():
                for (b, tops), c2 in q.w(key).items():
                    terms = [(b, c * c2)]
                    if q.tau(b):
                        terms.append((q.unit, -c * c2 * q.tau(b)))
                    for bottom, coeff in terms:
                        for i, top in enumerate(tops):
                            slot = (i, bottom, tops[:i] + (None,) + tops[i + 1:])
                            vadd(grouped.setdefault(slot, {}), {top: ONE}, coeff)
            for (i, bottom, _), vec in grouped.items():
                if vec and not filtration.contains(n, vec):
                    return f"slot {i + 1} under {bottom!r} of w({describe(z)}) is nonzero modulo F_{n}Q"
    return None
