"""
Truncated symmetric sequences.

A ``SymSeq`` holds one ``GradedSpace`` per arity, with the symmetric group
acting through adjacent transpositions. Planar sequences carry no action.
The composition product ⋄ and the cotensor X^M take coinvariants/invariants
through the averaging idempotent; the keyed operators at the bottom of the
module (``KeyedCotensor``) work in planar mode directly on basis labels and are
what the constructions of the later modules are built from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import factorial
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

from services.errors import ShapeMismatchError, TruncationError, UnsupportedError, ValidationError
from services.graded import (
    GradedMap,
    GradedSpace,
    GradedSubspace,
    Key,
    Vec,
    compose,
    koszul_sign,
)
from services.keyed import LinearOp, vadd
from services.qlinalg import ONE, ZERO, Rational, RationalMatrix, pivot_columns, solve
from services.trees import UNIT
from static_memory_cache import StaticMemoryCache
from telemetrics.logger import logger


@dataclass(frozen=True)
class Truncation:
    """Finite window on arities, degrees and weights."""

    max_arity: int
    degree_window: Tuple[int, int]
    weight_cap: int

    def __post_init__(self):
        lo, hi = self.degree_window
        if lo > hi:
            raise TruncationError(f"empty degree window [{lo}, {hi}]")
        if self.max_arity < 0 or self.weight_cap < 0:
            raise TruncationError("max_arity and weight_cap must be non-negative")

    @classmethod
    def default(cls) -> "Truncation":
        max_arity, max_weight, window = StaticMemoryCache.get_default_truncation()
        return cls(max_arity, window, max_weight)

    def with_weight(self, weight_cap: int) -> "Truncation":
        return Truncation(self.max_arity, self.degree_window, weight_cap)

    def in_window(self, degree: int) -> bool:
        lo, hi = self.degree_window
        return lo <= degree <= hi

    def check_cells(self, count: int, what: str):
        """Refuse truncations whose basis would exceed the configured cell cap."""
        cap = StaticMemoryCache.get_max_cells()
        if count > cap:
            raise TruncationError(f"{what} needs {count} basis cells, above the cap of {cap}")


@dataclass(frozen=True)
class ExactnessCert:
    """Ranges on which a truncated result equals the untruncated one."""

    exact_arities: Tuple[int, int]
    exact_degrees: Tuple[int, int]
    exact_weights: Tuple[int, int]

    @classmethod
    def full(cls, t: Truncation) -> "ExactnessCert":
        return cls((0, t.max_arity), t.degree_window, (0, t.weight_cap))

    def meet(self, other: "ExactnessCert") -> "ExactnessCert":
        def cap(a, b):
            return (max(a[0], b[0]), min(a[1], b[1]))

        return ExactnessCert(
            cap(self.exact_arities, other.exact_arities),
            cap(self.exact_degrees, other.exact_degrees),
            cap(self.exact_weights, other.exact_weights),
        )

    def within(self, t: Truncation) -> bool:
        lo, hi = t.degree_window
        return (
            0 <= self.exact_arities[0]
            and self.exact_arities[1] <= t.max_arity
            and lo <= self.exact_degrees[0]
            and self.exact_degrees[1] <= hi
            and self.exact_weights[1] <= t.weight_cap
        )


@dataclass(frozen=True)
class PlanarFlag:
    is_planar: bool = True


class SymSeq:
    """Arity-indexed graded spaces with adjacent-transposition actions."""

    __slots__ = ("components", "actions", "planar", "cert", "_arity", "_weights")

    def __init__(
        self,
        components: Mapping[int, GradedSpace],
        actions: Mapping[int, Sequence[GradedMap]] | None = None,
        planar: bool = True,
        cert: ExactnessCert | None = None,
        weights: Mapping[Key, int] | None = None,
    ):
        self.components: Dict[int, GradedSpace] = {
            n: space for n, space in sorted(components.items()) if space.total_dim
        }
        self.planar = planar
        self.actions: Dict[int, List[GradedMap]] = {}
        if actions and not planar:
            for n, maps in actions.items():
                maps = list(maps)
                if len(maps) != max(n - 1, 0):
                    raise ShapeMismatchError(f"arity {n} needs {max(n - 1, 0)} transpositions, got {len(maps)}")
                for sigma in maps:
                    if sigma.degree != 0 or sigma.source != self.component(n) or sigma.target != self.component(n):
                        raise ShapeMismatchError(f"transposition in arity {n} is not a degree 0 endomorphism")
                self.actions[n] = maps
        self._arity: Dict[Key, int] = {}
        for n, space in self.components.items():
            for key in space.keys():
                if key in self._arity:
                    raise ValidationError(f"basis label {key!r} appears in two arities")
                self._arity[key] = n
        self._weights = dict(weights or {})
        max_arity = max(self.components, default=0)
        self.cert = cert or ExactnessCert((0, max_arity), (-(2**31), 2**31), (0, 2**31))

    @classmethod
    def from_keys(
        cls, entries: Iterable[Tuple[Key, int, int, int]], planar: bool = True, cert: ExactnessCert | None = None
    ) -> "SymSeq":
        """Planar sequence from (key, arity, degree, weight) entries, kept in the given order."""
        by_arity: Dict[int, Dict[int, List[Key]]] = {}
        weights: Dict[Key, int] = {}
        for key, arity, degree, weight in entries:
            by_arity.setdefault(arity, {}).setdefault(degree, []).append(key)
            weights[key] = weight
        components = {n: GradedSpace(basis) for n, basis in by_arity.items()}
        return cls(components, planar=planar, cert=cert, weights=weights)

    def __repr__(self) -> str:
        kind = "planar" if self.planar else "symmetric"
        return f"SymSeq({kind}, {self.dims})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymSeq):
            return NotImplemented
        return self.planar == other.planar and self.components == other.components

    def __hash__(self):
        return id(self)

    @property
    def dims(self) -> Dict[int, Dict[int, int]]:
        return {n: space.dims for n, space in self.components.items()}

    def arities(self) -> List[int]:
        return list(self.components)

    def component(self, n: int) -> GradedSpace:
        return self.components.get(n) or GradedSpace.zero()

    def keys(self, arity: int | None = None) -> List[Key]:
        if arity is not None:
            return self.component(arity).keys()
        return [k for space in self.components.values() for k in space.keys()]

    def __contains__(self, key: Key) -> bool:
        return key in self._arity

    def arity_of(self, key: Key) -> int:
        return self._arity[key]

    def degree_of(self, key: Key) -> int:
        return self.components[self._arity[key]].degree_of(key)

    def weight_of(self, key: Key) -> int:
        return self._weights.get(key, 0)

    @property
    def weights(self) -> Dict[Key, int]:
        return dict(self._weights)

    def total_dim(self) -> int:
        return sum(space.total_dim for space in self.components.values())

    def restrict(self, keep: Callable[[Key], bool]) -> "SymSeq":
        """Sub-sequence spanned by the basis labels satisfying ``keep`` (planar only)."""
        if not self.planar:
            raise UnsupportedError("restriction to basis labels needs a planar sequence")
        entries = [
            (k, n, space.degree_of(k), self.weight_of(k))
            for n, space in self.components.items()
            for k in space.keys()
            if keep(k)
        ]
        return SymSeq.from_keys(entries, planar=True, cert=self.cert)

    # symmetric group

    def transposition(self, n: int, i: int) -> GradedMap:
        """Action of σᵢ (1 ≤ i ≤ n−1) on arity n."""
        if not 1 <= i <= n - 1:
            raise ShapeMismatchError(f"σ_{i} does not exist in arity {n}")
        if self.planar or n not in self.actions:
            return GradedMap.identity(self.component(n))
        return self.actions[n][i - 1]

    def coxeter_failures(self) -> List[str]:
        """Coxeter relations that fail, as human-readable strings."""
        failures: List[str] = []
        if self.planar:
            return failures
        for n in self.components:
            space = self.component(n)
            identity = GradedMap.identity(space)
            sigmas = [self.transposition(n, i) for i in range(1, n)]
            for i, s in enumerate(sigmas, start=1):
                if compose(s, s) != identity:
                    failures.append(f"arity {n}: σ_{i}² ≠ id")
            for i in range(len(sigmas)):
                for j in range(i + 2, len(sigmas)):
                    if compose(sigmas[i], sigmas[j]) != compose(sigmas[j], sigmas[i]):
                        failures.append(f"arity {n}: σ_{i + 1}σ_{j + 1} ≠ σ_{j + 1}σ_{i + 1}")
            for i in range(len(sigmas) - 1):
                a, b = sigmas[i], sigmas[i + 1]
                if compose(a, compose(b, a)) != compose(b, compose(a, b)):
                    failures.append(f"arity {n}: σ_{i + 1}σ_{i + 2}σ_{i + 1} ≠ σ_{i + 2}σ_{i + 1}σ_{i + 2}")
        return failures

    def averaging(self, n: int) -> GradedMap:
        """e = (1/n!) Σ_σ σ on arity n."""
        space = self.component(n)
        if self.planar:
            return GradedMap.identity(space)
        return averaging_idempotent(space, [self.transposition(n, i) for i in range(1, n)])


def symmetrizer(space: GradedSpace, sigmas: Sequence[GradedMap]) -> GradedMap:
    """Σ_{σ ∈ 𝔖_k} σ for the representation generated by σ₁..σ_{k−1}.

    Uses the coset decomposition 𝔖_k = ⊔ᵢ 𝔖_{k−1}·(σ_{k−1}σ_{k−2}⋯σᵢ).
    """
    total = GradedMap.identity(space)
    for k in range(2, len(sigmas) + 2):
        coset_sum = GradedMap.identity(space)
        word = GradedMap.identity(space)
        for i in range(k - 1, 0, -1):
            word = compose(word, sigmas[i - 1])
            coset_sum = coset_sum + word
        total = compose(total, coset_sum)
    return total


def averaging_idempotent(space: GradedSpace, sigmas: Sequence[GradedMap]) -> GradedMap:
    order = factorial(len(sigmas) + 1)
    return symmetrizer(space, sigmas).scale(ONE / order)


def unit_seq(planar: bool = True) -> SymSeq:
    """𝟙: one basis element, the unit tree, in arity 1 and degree 0."""
    return SymSeq({1: GradedSpace({0: [UNIT]})}, planar=planar)


# composition product


def _input_sequences(n_seq: SymSeq, k: int, arity_budget: int) -> Iterator[Tuple[Key, ...]]:
    if k == 0:
        yield ()
        return
    for a in n_seq.arities():
        if a > arity_budget:
            continue
        for first in n_seq.keys(a):
            for rest in _input_sequences(n_seq, k - 1, arity_budget - a):
                yield (first,) + rest


def planar_composite_keys(m_seq: SymSeq, n_seq: SymSeq, t: Truncation) -> List[Tuple[Key, int, int, int]]:
    """(key, arity, degree, weight) of M⋄N in planar mode, key = (m, (n₁, …, n_k))."""
    entries = []
    for k in m_seq.arities():
        if k > t.max_arity:
            continue
        for m in m_seq.keys(k):
            for inputs in _input_sequences(n_seq, k, t.max_arity):
                weight = m_seq.weight_of(m) + sum(n_seq.weight_of(x) for x in inputs)
                if weight > t.weight_cap:
                    continue
                arity = sum(n_seq.arity_of(x) for x in inputs)
                degree = m_seq.degree_of(m) + sum(n_seq.degree_of(x) for x in inputs)
                entries.append(((m, inputs), arity, degree, weight))
    entries.sort(key=lambda e: (e[1], tuple(n_seq.arity_of(x) for x in e[0][1])))
    t.check_cells(len(entries), "composition product")
    return entries


def compose_product(m_seq: SymSeq, n_seq: SymSeq, t: Truncation) -> SymSeq:
    """M⋄N truncated to arity ≤ A and weight ≤ W."""
    if m_seq.planar != n_seq.planar:
        raise TruncationError("cannot compose a planar with a symmetric sequence")
    cert = m_seq.cert.meet(n_seq.cert).meet(ExactnessCert.full(t))
    entries = planar_composite_keys(m_seq, n_seq, t)
    if m_seq.planar:
        return SymSeq.from_keys(entries, planar=True, cert=cert)
    return _symmetric_composite(m_seq, n_seq, entries, t, cert)


def _block_assignments(sizes: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """Sequences assigning each leaf a block, block j receiving sizes[j] leaves in order."""
    total = sum(sizes)
    if total == 0:
        yield ()
        return
    remaining = list(sizes)

    def walk(prefix):
        if len(prefix) == total:
            yield tuple(prefix)
            return
        for j, r in enumerate(remaining):
            if r:
                remaining[j] -= 1
                prefix.append(j)
                yield from walk(prefix)
                prefix.pop()
                remaining[j] += 1

    yield from walk([])


def _symmetric_composite(
    m_seq: SymSeq, n_seq: SymSeq, entries, t: Truncation, cert: ExactnessCert
) -> SymSeq:
    """Coinvariants of ⊕ M(k)⊗(induced N(n₁)⊗…⊗N(n_k)) under 𝔖_k, as the image of the averaging idempotent."""
    induced: Dict[int, Dict[int, List[Key]]] = {}
    degree_of: Dict[Key, int] = {}
    for (m, inputs), arity, degree, _ in entries:
        sizes = [n_seq.arity_of(x) for x in inputs]
        for blocks in _block_assignments(sizes):
            key = (m, inputs, blocks)
            induced.setdefault(arity, {}).setdefault(degree, []).append(key)
            degree_of[key] = degree
    components: Dict[int, GradedSpace] = {}
    actions: Dict[int, List[GradedMap]] = {}
    for arity, basis in sorted(induced.items()):
        space = GradedSpace(basis)
        by_k: Dict[int, List[Key]] = {}
        for key in space.keys():
            by_k.setdefault(len(key[1]), []).append(key)
        total = GradedMap.zero(space, space)
        for k in by_k:
            sigmas = [
                GradedMap.from_function(space, space, 0, _factor_swap(m_seq, n_seq, k, j), strict=True)
                for j in range(1, k)
            ]
            e_k = averaging_idempotent(space, sigmas) if sigmas else GradedMap.identity(space)
            restrict = GradedMap.from_function(
                space, space, 0, lambda key, k=k: {key: ONE} if len(key[1]) == k else {}
            )
            total = total + compose(e_k, restrict)
        e_blocks = total
        coinvariants, embed = _image_with_basis(space, e_blocks, tag="avg")
        components[arity] = coinvariants
        if arity >= 2:
            leaf_swaps = [
                GradedMap.from_function(space, space, 0, _leaf_swap(n_seq, i), strict=True)
                for i in range(1, arity)
            ]
            actions[arity] = [_restrict_action(coinvariants, embed, compose(s, e_blocks)) for s in leaf_swaps]
    logger.debug(f"symmetric composite dims {{{', '.join(f'{n}: {s.total_dim}' for n, s in components.items())}}}")
    return SymSeq(components, actions=actions, planar=False, cert=cert)


def _factor_swap(m_seq: SymSeq, n_seq: SymSeq, k: int, j: int):
    """Diagonal action of the transposition of factors j, j+1 on M(k)⊗N^{⊗k}⊗(leaf assignment)."""

    def on_basis(key):
        m, inputs, blocks = key
        if len(inputs) != k:
            return {key: ONE}
        sign = koszul_sign([(n_seq.degree_of(inputs[j - 1]), n_seq.degree_of(inputs[j]))])
        swapped = inputs[: j - 1] + (inputs[j], inputs[j - 1]) + inputs[j + 1:]
        relabel = {j - 1: j, j: j - 1}
        new_blocks = tuple(relabel.get(b, b) for b in blocks)
        out: Vec = {}
        for m2, c in m_seq.transposition(k, j).apply({m: ONE}).items():
            new_key = (m2, swapped, new_blocks)
            out[new_key] = out.get(new_key, ZERO) + sign * c
        return out

    return on_basis


def _leaf_swap(n_seq: SymSeq, i: int):
    """Action of the leaf transposition σᵢ on the induced representation."""

    def on_basis(key):
        m, inputs, blocks = key
        a, b = blocks[i - 1], blocks[i]
        if a != b:
            new_blocks = blocks[: i - 1] + (b, a) + blocks[i + 1:]
            return {(m, inputs, new_blocks): ONE}
        position = sum(1 for x in blocks[: i - 1] if x == a) + 1
        x = inputs[a]
        out: Vec = {}
        for x2, c in n_seq.transposition(n_seq.arity_of(x), position).apply({x: ONE}).items():
            new_inputs = inputs[:a] + (x2,) + inputs[a + 1:]
            out[(m, new_inputs, blocks)] = c
        return out

    return on_basis


def _image_with_basis(space: GradedSpace, e: GradedMap, tag: str) -> Tuple[GradedSpace, Dict[int, RationalMatrix]]:
    """Image of an idempotent, with basis labels (tag, key) for the pivot keys and the embedding matrices."""
    basis: Dict[int, List[Key]] = {}
    embed: Dict[int, RationalMatrix] = {}
    for d in space.degrees():
        block = e.block(d)
        pivots = list(pivot_columns(block))
        if not pivots:
            continue
        keys = space.basis(d)
        basis[d] = [(tag, keys[p]) for p in pivots]
        embed[d] = block.select_columns(pivots)
    return GradedSpace(basis), embed


def _restrict_action(sub: GradedSpace, embed: Mapping[int, RationalMatrix], full_map: GradedMap) -> GradedMap:
    """Matrix of a degree-0 map preserving im(embed), in the basis of ``sub``."""
    blocks = {}
    for d in sub.degrees():
        columns = []
        basis = embed[d]
        for vector in (full_map.block(d) @ basis).columns():
            coords = solve(basis, vector)
            if coords is None:
                raise ValidationError("action does not preserve the invariant subspace")
            columns.append(coords)
        blocks[d] = RationalMatrix.from_columns(basis.cols, columns)
    return GradedMap(sub, sub, 0, blocks)


# cotensor


def _words(x: GradedSpace, n: int) -> Iterator[Tuple[Key, ...]]:
    return product(x.keys(), repeat=n)


def _word_degree(x: GradedSpace, word: Sequence[Key]) -> int:
    return sum(x.degree_of(k) for k in word)


@dataclass
class CotensorResult:
    """X^M as a graded space, its embedding into the full product of hom spaces and the arity projections."""

    space: GradedSpace
    full: GradedSpace
    embedding: GradedMap
    projections: Dict[int, GradedMap] = field(default_factory=dict)


def _full_cotensor(x: GradedSpace, m_seq: SymSeq, t: Truncation) -> GradedSpace:
    basis: Dict[int, List[Key]] = {}
    count = 0
    for n in m_seq.arities():
        if n > t.max_arity:
            continue
        for m in m_seq.keys(n):
            for word in _words(x, n):
                d = _word_degree(x, word) - m_seq.degree_of(m)
                basis.setdefault(d, []).append(("E", m, word))
                count += 1
    t.check_cells(count, "cotensor")
    return GradedSpace(basis)


def _hom_swap(x: GradedSpace, m_seq: SymSeq, n: int, i: int):
    """(σ·φ) = σ_X ∘ φ ∘ σ_M⁻¹ on the basis E_{m,w}, for the adjacent transposition σᵢ."""
    sigma = m_seq.transposition(n, i)
    preimages: Dict[Key, List[Tuple[Key, Rational]]] = {}
    for m2 in m_seq.keys(n):
        for m, c in sigma.apply({m2: ONE}).items():
            preimages.setdefault(m, []).append((m2, c))

    def on_basis(key):
        _, m, word = key
        if m_seq.arity_of(m) != n:
            return {key: ONE}
        sign = koszul_sign([(x.degree_of(word[i - 1]), x.degree_of(word[i]))])
        swapped = word[: i - 1] + (word[i], word[i - 1]) + word[i + 1:]
        return {("E", m2, swapped): sign * c for m2, c in preimages.get(m, ())}

    return on_basis


def cotensor(x: GradedSpace, m_seq: SymSeq, t: Truncation) -> CotensorResult:
    """X^M = ∏_{n ≤ A} [M(n), X^{⊗n}]^{𝔖ₙ}."""
    full = _full_cotensor(x, m_seq, t)
    if m_seq.planar:
        space, embedding = full, GradedMap.identity(full)
    else:
        total = GradedMap.zero(full, full)
        for n in m_seq.arities():
            if n > t.max_arity:
                continue
            sigmas = [GradedMap.from_function(full, full, 0, _hom_swap(x, m_seq, n, i)) for i in range(1, n)]
            e_n = averaging_idempotent(full, sigmas) if sigmas else GradedMap.identity(full)
            only_n = GradedMap.from_function(
                full, full, 0, lambda key, n=n: {key: ONE} if m_seq.arity_of(key[1]) == n else {}
            )
            total = total + compose(e_n, only_n)
        space, embed = _image_with_basis(full, total, tag="inv")
        embedding = GradedMap(space, full, 0, embed)
    projections = {}
    for n in m_seq.arities():
        if n > t.max_arity:
            continue
        block_keys = [k for k in space.keys() if m_seq.arity_of(_inner(k)[1]) == n]
        block = GradedSpace.from_keys(block_keys, space.degree_of)
        projections[n] = GradedMap.from_function(
            space, block, 0, lambda key: {key: ONE} if key in block else {}, strict=False
        )
    return CotensorResult(space, full, embedding, projections)


def _inner(key: Key) -> Key:
    return key[1] if key[0] == "inv" else key


def _transfer(full_map: GradedMap, source: CotensorResult, target: CotensorResult) -> GradedMap:
    """Restrict a map between full cotensors to the invariant parts."""
    blocks = {}
    embedded = compose(full_map, source.embedding)
    for d in source.space.degrees():
        target_basis = target.embedding.block(d + full_map.degree)
        columns = []
        for vector in embedded.block(d).columns():
            coords = solve(target_basis, vector) if vector else {}
            if coords is None:
                raise ValidationError("map does not preserve invariants (non-equivariant input)")
            columns.append(coords)
        blocks[d] = RationalMatrix.from_columns(target.space.dim(d + full_map.degree), columns)
    return GradedMap(source.space, target.space, full_map.degree, blocks)


def is_equivariant(f: LinearOp, source: SymSeq, target: SymSeq) -> bool:
    if source.planar:
        return True
    for n in source.arities():
        for i in range(1, n):
            for key in source.keys(n):
                left = target.transposition(n, i).apply(f.on_basis(key))
                right = f.apply(source.transposition(n, i).apply({key: ONE}))
                if vadd(dict(left), right, -ONE):
                    return False
    return True


def cotensor_contra(f: LinearOp, source: SymSeq, target: SymSeq, x: GradedSpace, t: Truncation) -> GradedMap:
    """X^f : X^N → X^M for f : M → N of degree p, X^f(φ) = (−1)^{p|φ|} φ∘f."""
    if not is_equivariant(f, source, target):
        raise ValidationError(f"{f.name} is not equivariant")
    src = cotensor(x, target, t)
    tgt = cotensor(x, source, t)
    keyed = KeyedCotensor(x.degree_of, target).contra(f, source.keys())
    full_map = keyed.materialize(src.full, tgt.full)
    if source.planar:
        return full_map
    return _transfer(full_map, src, tgt)


def shuffle_power(f: GradedMap, g: GradedMap, m_seq: SymSeq, t: Truncation) -> GradedMap:
    """Σ(f,g)^M : X^M → Y^M, one insertion of g among copies of f in each slot."""
    if f.degree != 0:
        raise ShapeMismatchError("Σ(f,g) needs f of degree 0")
    if f.source != g.source or f.target != g.target:
        raise ShapeMismatchError("f and g must share source and target")
    src = cotensor(f.source, m_seq, t)
    tgt = cotensor(f.target, m_seq, t)
    op = KeyedCotensor(f.source.degree_of, m_seq).shuffle(
        LinearOp.from_graded_map(f, "f"), LinearOp.from_graded_map(g, "g")
    )
    full_map = op.materialize(src.full, tgt.full, strict=True)
    if m_seq.planar:
        return full_map
    return _transfer(full_map, src, tgt)


def lax_map(n_seq: SymSeq, m_seq: SymSeq, x: GradedSpace, t: Truncation) -> GradedMap:
    """l(N,M,X) : (X^M)^N → X^{N⋄M}, restricted to total arity ≤ A and total weight ≤ W."""
    if not (n_seq.planar and m_seq.planar):
        raise UnsupportedError("the lax map is computed in planar mode")
    inner = KeyedCotensor(x.degree_of, m_seq)
    inner_space = cotensor(x, m_seq, t).space
    outer = KeyedCotensor(inner.degree, n_seq, inner.weight, inner.arity)
    composite = compose_product(n_seq, m_seq, t)
    source = outer.space(inner_space.keys(), t)
    target = KeyedCotensor(x.degree_of, composite).space(x.keys(), t)
    return outer.lax(inner).materialize(source, target, strict=True)


def shuffle_subobject(y: GradedSpace, sub: GradedSubspace, m_seq: SymSeq, t: Truncation) -> GradedSubspace:
    """Σ(Y,X)^M ⊆ Y^M: the span of E_{m,w} with one tensor factor of w taken in X (planar)."""
    if not m_seq.planar:
        raise UnsupportedError("Σ(Y,X)^M is computed in planar mode")
    space = cotensor(y, m_seq, t).space
    vectors: List[Vec] = []
    for n in m_seq.arities():
        if n == 0 or n > t.max_arity:
            continue
        for m in m_seq.keys(n):
            for i in range(n):
                for x_vec in sub.keyed_vectors():
                    for left in _words(y, i):
                        for right in _words(y, n - 1 - i):
                            vectors.append({("E", m, left + (k,) + right): c for k, c in x_vec.items()})
    return GradedSubspace.span(space, vectors)


# keyed planar cotensors


def tensor_vectors(vectors: Sequence[Mapping[Key, Rational]]) -> Vec:
    """Expand v₁⊗…⊗vₙ over tuples of keys (no sign)."""
    out: Vec = {(): ONE}
    for vec in vectors:
        nxt: Vec = {}
        for word, a in out.items():
            for k, b in vec.items():
                nxt[word + (k,)] = nxt.get(word + (k,), ZERO) + a * b
        out = {k: v for k, v in nxt.items() if v}
        if not out:
            break
    return out


class KeyedCotensor:
    """X^M on basis labels ("E", m, w), planar.

    ``x_degree`` gives degrees of labels of X (which may itself be a cotensor),
    ``seq`` any planar sequence exposing degree_of/arity_of/weight_of.
    """

    def __init__(
        self,
        x_degree: Callable[[Key], int],
        seq,
        x_weight: Callable[[Key], int] | None = None,
        x_arity: Callable[[Key], int] | None = None,
    ):
        self.x_degree = x_degree
        self.seq = seq
        self.x_weight = x_weight or (lambda key: 0)
        self.x_arity = x_arity or (lambda key: 1)

    def degree(self, key: Key) -> int:
        _, m, word = key
        return sum(self.x_degree(k) for k in word) - self.seq.degree_of(m)

    def weight(self, key: Key) -> int:
        _, m, word = key
        return self.seq.weight_of(m) + sum(self.x_weight(k) for k in word)

    def arity(self, key: Key) -> int:
        """Total arity once nested labels are flattened by the lax map."""
        _, _, word = key
        return sum(self.x_arity(k) for k in word)

    def keys(self, x_keys: Sequence[Key], t: Truncation) -> List[Key]:
        """Basis labels with total arity ≤ A and total weight ≤ W."""
        out: List[Key] = []
        candidates = [(k, self.x_arity(k), self.x_weight(k)) for k in x_keys]
        cap = StaticMemoryCache.get_max_cells()

        def words(n, arity_budget, weight_budget):
            if n == 0:
                yield ()
                return
            for k, a, w in candidates:
                if a <= arity_budget and w <= weight_budget:
                    for rest in words(n - 1, arity_budget - a, weight_budget - w):
                        yield (k,) + rest

        for n in self.seq.arities():
            if n > t.max_arity:
                continue
            for m in self.seq.keys(n):
                budget = t.weight_cap - self.seq.weight_of(m)
                if budget < 0:
                    continue
                for word in words(n, t.max_arity, budget):
                    out.append(("E", m, word))
                    if len(out) > cap:
                        t.check_cells(len(out), "cotensor")
        return out

    def space(self, x_keys: Sequence[Key], t: Truncation) -> GradedSpace:
        keys = self.keys(x_keys, t)
        t.check_cells(len(keys), "cotensor")
        return GradedSpace.from_keys(keys, self.degree)

    def contra(self, f: LinearOp, domain_keys: Iterable[Key]) -> LinearOp:
        """X^f : X^N → X^M for f : M → N given on the labels of M.

        ``self`` describes X^N; the transpose of f is indexed once from ``domain_keys``.
        """
        transpose: Dict[Key, List[Tuple[Key, Rational]]] = {}
        for m in domain_keys:
            for n, c in f.on_basis(m).items():
                transpose.setdefault(n, []).append((m, c))

        def on_basis(key):
            _, n, word = key
            sign = -1 if (f.degree * self.degree(key)) % 2 else 1
            return {("E", m, word): sign * c for m, c in transpose.get(n, ())}

        return LinearOp(on_basis, f.degree, f"X^{f.name}")

    def shuffle(self, f: LinearOp, g: LinearOp) -> LinearOp:
        """Σ(f,g)^M; f has degree 0 on the labels of X."""
        if f.degree != 0:
            raise ShapeMismatchError("Σ(f,g) needs f of degree 0")

        def on_basis(key):
            _, m, word = key
            out: Vec = {}
            before = 0
            for i, k in enumerate(word):
                sign = -1 if (g.degree * before) % 2 else 1
                factors = [f.on_basis(w) for w in word[:i]] + [g.on_basis(k)] + [f.on_basis(w) for w in word[i + 1:]]
                for new_word, c in tensor_vectors(factors).items():
                    out[("E", m, new_word)] = out.get(("E", m, new_word), ZERO) + sign * c
                before += self.x_degree(k)
            return out

        return LinearOp(on_basis, g.degree, f"Σ({f.name},{g.name})")

    def lax(self, inner: "KeyedCotensor") -> LinearOp:
        """l : (X^M)^N → X^{N⋄M}; ``self`` is the outer cotensor, ``inner`` describes X^M.

        E_{n,(φ₁…φ_k)} with φᵢ = E_{mᵢ,uᵢ} goes to (−1)^{Σᵢ|φᵢ|·Σ_{j<i}|mⱼ|} E_{(n;m⃗), u₁…u_k}.
        """

        def on_basis(key):
            _, n, phis = key
            parity = 0
            seen = 0
            ms, flat = [], ()
            for phi in phis:
                _, m, u = phi
                parity += inner.degree(phi) * seen
                seen += inner.seq.degree_of(m)
                ms.append(m)
                flat += u
            sign = -1 if parity % 2 else 1
            return {("E", (n, tuple(ms)), flat): ONE if sign > 0 else -ONE}

        return LinearOp(on_basis, 0, "l")

    def lax_inverse(self, inner: "KeyedCotensor") -> LinearOp:
        """Inverse of ``lax`` on its image; ``self`` describes X^{N⋄M} keys."""

        def on_basis(key):
            _, (n, ms), flat = key
            phis = []
            position = 0
            for m in ms:
                width = inner.seq.arity_of(m)
                phis.append(("E", m, tuple(flat[position:position + width])))
                position += width
            nested = ("E", n, tuple(phis))
            parity = 0
            seen = 0
            for phi in phis:
                parity += inner.degree(phi) * seen
                seen += inner.seq.degree_of(phi[1])
            return {nested: -ONE if parity % 2 else ONE}

        return LinearOp(on_basis, 0, "l⁻¹")
