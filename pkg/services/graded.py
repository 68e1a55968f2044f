"""
Graded vector spaces, graded maps and chain complexes.

Every sign produced anywhere in the engine goes through ``koszul_sign`` (or its
permutation form ``permutation_sign``). Conventions:

    (f⊗g)(x⊗y) = (−1)^{|g||x|} f(x)⊗g(y)
    [f,g](φ)   = (−1)^{|f||φ|} g∘φ∘f
    curry(φ)(x)(x′) = φ(x⊗x′)
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Dict, Hashable, Iterable, List, Mapping, Sequence, Tuple

from services.errors import ShapeMismatchError, ValidationError
from services.qlinalg import (
    ONE,
    ZERO,
    Rational,
    RationalMatrix,
    SparseVector,
    Subspace,
    kernel_basis,
    quotient,
    rank,
)

Key = Hashable
Vec = Dict[Key, Rational]


def koszul_sign(pairs: Iterable[Tuple[int, int]]) -> int:
    """Sign of a sequence of transpositions of graded symbols of degrees (a, b)."""
    parity = 0
    for a, b in pairs:
        parity ^= (a & 1) & (b & 1)
    return -1 if parity else 1


def permutation_sign(degrees: Sequence[int], order: Sequence[int]) -> int:
    """Koszul sign of reordering symbols of the given degrees into ``order``.

    ``order[k]`` is the index (in the original list) of the symbol that ends up
    at position k.
    """
    pairs = []
    for k in range(len(order)):
        for l in range(k + 1, len(order)):
            if order[k] > order[l]:
                pairs.append((degrees[order[k]], degrees[order[l]]))
    return koszul_sign(pairs)


class GradedSpace:
    """Finite-dimensional ℤ-graded space with a labelled basis in each degree."""

    __slots__ = ("_basis", "_index")

    def __init__(self, basis: Mapping[int, Sequence[Key]] | None = None):
        self._basis: Dict[int, Tuple[Key, ...]] = {
            int(d): tuple(keys) for d, keys in sorted((basis or {}).items()) if len(keys)
        }
        self._index: Dict[Key, Tuple[int, int]] = {}
        for d, keys in self._basis.items():
            for i, key in enumerate(keys):
                if key in self._index:
                    raise ValidationError(f"basis label {key!r} repeated")
                self._index[key] = (d, i)

    @classmethod
    def from_dims(cls, dims: Mapping[int, int], prefix: str = "e") -> "GradedSpace":
        return cls({d: [(prefix, d, i) for i in range(n)] for d, n in dims.items() if n > 0})

    @classmethod
    def from_keys(cls, keys: Iterable[Key], degree_of: Callable[[Key], int]) -> "GradedSpace":
        buckets: Dict[int, List[Key]] = {}
        for key in keys:
            buckets.setdefault(degree_of(key), []).append(key)
        return cls(buckets)

    @classmethod
    def zero(cls) -> "GradedSpace":
        return cls()

    @property
    def dims(self) -> Dict[int, int]:
        return {d: len(keys) for d, keys in self._basis.items()}

    def dim(self, degree: int) -> int:
        return len(self._basis.get(degree, ()))

    @property
    def total_dim(self) -> int:
        return len(self._index)

    def degrees(self) -> List[int]:
        return list(self._basis)

    def basis(self, degree: int) -> Tuple[Key, ...]:
        return self._basis.get(degree, ())

    def keys(self) -> List[Key]:
        return [key for keys in self._basis.values() for key in keys]

    def degree_of(self, key: Key) -> int:
        return self._index[key][0]

    def index_of(self, key: Key) -> int:
        return self._index[key][1]

    def __contains__(self, key: Key) -> bool:
        return key in self._index

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, GradedSpace):
            return NotImplemented
        return self._basis == other._basis

    def __hash__(self):
        return hash(tuple(self._basis.items()))

    def __repr__(self) -> str:
        return f"GradedSpace({self.dims})"

    def shift(self, p: int) -> "GradedSpace":
        """s^p X, with (s^p X)_d = X_{d−p}."""
        return GradedSpace({d + p: [("s", p, key) for key in keys] for d, keys in self._basis.items()})

    def direct_sum(self, other: "GradedSpace") -> "GradedSpace":
        degrees = sorted(set(self._basis) | set(other._basis))
        return GradedSpace(
            {
                d: [(0, k) for k in self.basis(d)] + [(1, k) for k in other.basis(d)]
                for d in degrees
            }
        )

    def vector(self, coefficients: Mapping[Key, Rational], degree: int) -> SparseVector:
        """Coordinates of a keyed vector inside the degree block."""
        out: SparseVector = {}
        for key, c in coefficients.items():
            d, i = self._index[key]
            if d != degree:
                raise ShapeMismatchError(f"{key!r} has degree {d}, expected {degree}")
            if c:
                out[i] = c
        return out


def tensor_space(x: GradedSpace, y: GradedSpace) -> GradedSpace:
    """X⊗Y; in each total degree, left degree ascending, then left index, then right index."""
    basis: Dict[int, List[Key]] = {}
    for a in x.degrees():
        for b in y.degrees():
            target = basis.setdefault(a + b, [])
            for kx, ky in product(x.basis(a), y.basis(b)):
                target.append((kx, ky))
    return GradedSpace(basis)


def hom_space(x: GradedSpace, y: GradedSpace) -> GradedSpace:
    """[X,Y]; the basis element ("E", kx, ky) sends kx to ky and every other basis vector to 0."""
    basis: Dict[int, List[Key]] = {}
    for a in x.degrees():
        for b in y.degrees():
            target = basis.setdefault(b - a, [])
            for kx, ky in product(x.basis(a), y.basis(b)):
                target.append(("E", kx, ky))
    return GradedSpace(basis)


class GradedMap:
    """Degree-p linear map, one matrix block per source degree."""

    __slots__ = ("source", "target", "degree", "_blocks")

    def __init__(
        self,
        source: GradedSpace,
        target: GradedSpace,
        degree: int,
        blocks: Mapping[int, RationalMatrix] | None = None,
    ):
        self.source = source
        self.target = target
        self.degree = degree
        kept: Dict[int, RationalMatrix] = {}
        for d, block in (blocks or {}).items():
            expected = (target.dim(d + degree), source.dim(d))
            if block.shape != expected:
                raise ShapeMismatchError(f"block at degree {d} has shape {block.shape}, expected {expected}")
            if not block.is_zero():
                kept[d] = block
        self._blocks = kept

    @classmethod
    def zero(cls, source: GradedSpace, target: GradedSpace, degree: int = 0) -> "GradedMap":
        return cls(source, target, degree)

    @classmethod
    def identity(cls, space: GradedSpace) -> "GradedMap":
        return cls(space, space, 0, {d: RationalMatrix.identity(space.dim(d)) for d in space.degrees()})

    @classmethod
    def from_function(
        cls,
        source: GradedSpace,
        target: GradedSpace,
        degree: int,
        func: Callable[[Key], Mapping[Key, Rational]],
        strict: bool = True,
    ) -> "GradedMap":
        """Materialize a keyed linear map. Non-strict mode drops components outside the target."""
        blocks: Dict[int, Dict[int, Dict[int, Rational]]] = {}
        for d in source.degrees():
            rows: Dict[int, Dict[int, Rational]] = {}
            for j, key in enumerate(source.basis(d)):
                for out_key, c in func(key).items():
                    if not c:
                        continue
                    if out_key not in target:
                        if strict:
                            raise ShapeMismatchError(f"image {out_key!r} of {key!r} is outside the target")
                        continue
                    e, i = target.degree_of(out_key), target.index_of(out_key)
                    if e != d + degree:
                        raise ShapeMismatchError(
                            f"image {out_key!r} of {key!r} has degree {e}, expected {d + degree}"
                        )
                    rows.setdefault(i, {})[j] = c
            blocks[d] = rows
        return cls(
            source,
            target,
            degree,
            {
                d: RationalMatrix(target.dim(d + degree), source.dim(d), rows)
                for d, rows in blocks.items()
            },
        )

    def block(self, d: int) -> RationalMatrix:
        return self._blocks.get(d) or RationalMatrix.zero(self.target.dim(d + self.degree), self.source.dim(d))

    @property
    def blocks(self) -> Dict[int, RationalMatrix]:
        return dict(self._blocks)

    def is_zero(self) -> bool:
        return not self._blocks

    def apply(self, vector: Mapping[Key, Rational]) -> Vec:
        """Apply to a keyed vector of the source."""
        by_degree: Dict[int, SparseVector] = {}
        for key, c in vector.items():
            if c:
                d, i = self.source.degree_of(key), self.source.index_of(key)
                by_degree.setdefault(d, {})[i] = c
        out: Vec = {}
        for d, coords in by_degree.items():
            keys = self.target.basis(d + self.degree)
            for i, c in self.block(d).apply(coords).items():
                out[keys[i]] = out.get(keys[i], ZERO) + c
        return {k: v for k, v in out.items() if v}

    def __call__(self, key: Key) -> Vec:
        return self.apply({key: ONE})

    def _check_parallel(self, other: "GradedMap"):
        if self.source != other.source or self.target != other.target or self.degree != other.degree:
            raise ShapeMismatchError("maps are not parallel")

    def __add__(self, other: "GradedMap") -> "GradedMap":
        self._check_parallel(other)
        degrees = set(self._blocks) | set(other._blocks)
        return GradedMap(self.source, self.target, self.degree, {d: self.block(d) + other.block(d) for d in degrees})

    def __neg__(self) -> "GradedMap":
        return self.scale(-1)

    def __sub__(self, other: "GradedMap") -> "GradedMap":
        return self + (-other)

    def scale(self, c) -> "GradedMap":
        return GradedMap(self.source, self.target, self.degree, {d: b.scale(c) for d, b in self._blocks.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedMap):
            return NotImplemented
        return (
            self.degree == other.degree
            and self.source == other.source
            and self.target == other.target
            and self._blocks == other._blocks
        )

    def __repr__(self) -> str:
        return f"GradedMap(degree={self.degree}, {self.source!r} -> {self.target!r})"

    def rank(self, d: int) -> int:
        return rank(self.block(d))


def compose(g: GradedMap, f: GradedMap) -> GradedMap:
    """g∘f; degrees add and no sign is introduced."""
    if f.target != g.source:
        raise ShapeMismatchError("cannot compose: target of f differs from source of g")
    blocks = {d: g.block(d + f.degree) @ f.block(d) for d in f.source.degrees()}
    return GradedMap(f.source, g.target, f.degree + g.degree, blocks)


def tensor_map(f: GradedMap, g: GradedMap) -> GradedMap:
    """f⊗g with (f⊗g)(x⊗y) = (−1)^{|g||x|} f(x)⊗g(y)."""
    source = tensor_space(f.source, g.source)
    target = tensor_space(f.target, g.target)

    def on_basis(key):
        kx, ky = key
        sign = koszul_sign([(g.degree, f.source.degree_of(kx))])
        out: Vec = {}
        for fx, a in f(kx).items():
            for gy, b in g(ky).items():
                out[(fx, gy)] = out.get((fx, gy), ZERO) + sign * a * b
        return out

    return GradedMap.from_function(source, target, f.degree + g.degree, on_basis)


def hom_pairing(f: GradedMap, g: GradedMap) -> GradedMap:
    """[f,g] : [X,Y] → [X′,Y′] for f : X′ → X and g : Y → Y′, [f,g](φ) = (−1)^{|f||φ|} g∘φ∘f."""
    source = hom_space(f.target, g.source)
    target = hom_space(f.source, g.target)
    # transpose of f: for each basis vector kx of X, the x′ with f(x′) ∋ kx
    preimages: Dict[Key, List[Tuple[Key, Rational]]] = {}
    for x_prime in f.source.keys():
        for kx, c in f(x_prime).items():
            preimages.setdefault(kx, []).append((x_prime, c))

    def on_basis(key):
        _, kx, ky = key
        phi_degree = g.source.degree_of(ky) - f.target.degree_of(kx)
        sign = koszul_sign([(f.degree, phi_degree)])
        out: Vec = {}
        for x_prime, a in preimages.get(kx, ()):
            for y_prime, b in g(ky).items():
                k = ("E", x_prime, y_prime)
                out[k] = out.get(k, ZERO) + sign * a * b
        return out

    return GradedMap.from_function(source, target, f.degree + g.degree, on_basis)


def curry_map(x: GradedSpace, x_prime: GradedSpace, y: GradedSpace) -> GradedMap:
    """[X⊗X′, Y] ≅ [X, [X′, Y]], curry(φ)(x)(x′) = φ(x⊗x′)."""
    source = hom_space(tensor_space(x, x_prime), y)
    target = hom_space(x, hom_space(x_prime, y))

    def on_basis(key):
        _, (kx, kx_prime), ky = key
        return {("E", kx, ("E", kx_prime, ky)): ONE}

    return GradedMap.from_function(source, target, 0, on_basis)


class ChainComplex:
    """Graded space with a degree −1 differential squaring to zero."""

    __slots__ = ("space", "differential")

    def __init__(self, space: GradedSpace, differential: GradedMap | None = None, check: bool = True):
        if differential is None:
            differential = GradedMap.zero(space, space, -1)
        if differential.degree != -1 or differential.source != space or differential.target != space:
            raise ShapeMismatchError("differential must be a degree -1 endomorphism of the space")
        if check and not compose(differential, differential).is_zero():
            raise ValidationError("differential does not square to zero")
        self.space = space
        self.differential = differential

    def __repr__(self) -> str:
        return f"ChainComplex({self.space.dims})"

    def shift(self, p: int) -> "ChainComplex":
        """s^p C with differential (−1)^p d."""
        space = self.space.shift(p)

        def on_basis(key):
            _, _, inner = key
            sign = koszul_sign([(p, 1)])
            return {("s", p, k): sign * c for k, c in self.differential(inner).items()}

        return ChainComplex(space, GradedMap.from_function(space, space, -1, on_basis))

    def direct_sum(self, other: "ChainComplex") -> "ChainComplex":
        space = self.space.direct_sum(other.space)

        def on_basis(key):
            side, inner = key
            d = self.differential if side == 0 else other.differential
            return {(side, k): c for k, c in d(inner).items()}

        return ChainComplex(space, GradedMap.from_function(space, space, -1, on_basis))


def disc(degree: int = 0) -> ChainComplex:
    """D(degree): ℚ in degrees degree and degree−1 with identity differential."""
    space = GradedSpace({degree: [("top",)], degree - 1: [("bottom",)]})
    d = GradedMap.from_function(space, space, -1, lambda k: {("bottom",): ONE} if k == ("top",) else {})
    return ChainComplex(space, d)


def homology(c: ChainComplex) -> GradedSpace:
    """Dimensions dim ker(d_n) − rank(d_{n+1}) per degree."""
    dims = {}
    for n in c.space.degrees():
        cycles = c.space.dim(n) - c.differential.rank(n)
        boundaries = c.differential.rank(n + 1)
        if cycles - boundaries:
            dims[n] = cycles - boundaries
    return GradedSpace.from_dims(dims, prefix="h")


def homology_dims(c: ChainComplex, window: Tuple[int, int] | None = None) -> Dict[int, int]:
    dims = homology(c).dims
    if window is None:
        return dims
    lo, hi = window
    return {d: n for d, n in dims.items() if lo <= d <= hi}


def is_chain_map(f: GradedMap, source: ChainComplex, target: ChainComplex) -> bool:
    return compose(target.differential, f) == compose(f, source.differential)


def is_quasi_iso(f: GradedMap, source: ChainComplex, target: ChainComplex, window: Tuple[int, int]) -> bool:
    """True iff f induces isomorphisms on homology in every degree of the window."""
    if f.degree != 0:
        raise ShapeMismatchError("a quasi-isomorphism must have degree 0")
    if not is_chain_map(f, source, target):
        raise ValidationError("map does not commute with the differentials")
    lo, hi = window
    for n in range(lo, hi + 1):
        h_source = source.space.dim(n) - source.differential.rank(n) - source.differential.rank(n + 1)
        h_target = target.space.dim(n) - target.differential.rank(n) - target.differential.rank(n + 1)
        if h_source != h_target:
            return False
        # image of cycles under f plus boundaries of the target must span target cycles
        cycles = kernel_basis(source.differential.block(n))
        image = f.block(n) @ cycles.basis
        boundaries = target.differential.block(n + 1)
        span_rank = rank(image.hstack(boundaries)) if image.rows else 0
        if span_rank - target.differential.rank(n + 1) != h_target:
            return False
    return True


class GradedSubspace:
    """Degreewise subspaces of a GradedSpace, in the coordinates of its basis order."""

    __slots__ = ("space", "parts")

    def __init__(self, space: GradedSpace, parts: Mapping[int, Subspace] | None = None):
        self.space = space
        self.parts: Dict[int, Subspace] = {}
        for d, sub in (parts or {}).items():
            if sub.ambient_dim != space.dim(d):
                raise ShapeMismatchError(f"subspace at degree {d} lives in dimension {sub.ambient_dim}")
            if sub.dim:
                self.parts[d] = sub

    @classmethod
    def zero(cls, space: GradedSpace) -> "GradedSubspace":
        return cls(space)

    @classmethod
    def full(cls, space: GradedSpace) -> "GradedSubspace":
        return cls(space, {d: Subspace.full(space.dim(d)) for d in space.degrees()})

    @classmethod
    def span(cls, space: GradedSpace, vectors: Iterable[Mapping[Key, Rational]]) -> "GradedSubspace":
        """Span of keyed vectors; each vector must be homogeneous."""
        by_degree: Dict[int, List[SparseVector]] = {}
        for vec in vectors:
            coords: SparseVector = {}
            degree = None
            for key, c in vec.items():
                if not c:
                    continue
                d = space.degree_of(key)
                if degree is not None and d != degree:
                    raise ShapeMismatchError("vector is not homogeneous")
                degree = d
                coords[space.index_of(key)] = coords.get(space.index_of(key), ZERO) + c
            if degree is not None:
                by_degree.setdefault(degree, []).append(coords)
        return cls(space, {d: Subspace.span(space.dim(d), vs) for d, vs in by_degree.items()})

    def part(self, d: int) -> Subspace:
        return self.parts.get(d) or Subspace.zero(self.space.dim(d))

    @property
    def dims(self) -> Dict[int, int]:
        return {d: sub.dim for d, sub in self.parts.items()}

    def total_dim(self) -> int:
        return sum(self.dims.values())

    def contains(self, other: "GradedSubspace") -> bool:
        return all(self.part(d).contains(sub) for d, sub in other.parts.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GradedSubspace):
            return NotImplemented
        return self.contains(other) and other.contains(self)

    def __repr__(self) -> str:
        return f"GradedSubspace({self.dims})"

    def sum(self, other: "GradedSubspace") -> "GradedSubspace":
        degrees = set(self.parts) | set(other.parts)
        return GradedSubspace(self.space, {d: self.part(d).sum(other.part(d)) for d in degrees})

    def intersection(self, other: "GradedSubspace") -> "GradedSubspace":
        degrees = set(self.parts) & set(other.parts)
        return GradedSubspace(self.space, {d: self.part(d).intersection(other.part(d)) for d in degrees})

    def image_under(self, f: GradedMap) -> "GradedSubspace":
        images = {d + f.degree: sub.image_under(f.block(d)) for d, sub in self.parts.items()}
        return GradedSubspace(f.target, images)

    def keyed_vectors(self) -> List[Vec]:
        out: List[Vec] = []
        for d, sub in self.parts.items():
            keys = self.space.basis(d)
            for column in sub.vectors():
                out.append({keys[i]: c for i, c in column.items()})
        return out


def preimage(f: GradedMap, sub: GradedSubspace) -> GradedSubspace:
    """f⁻¹(sub), degreewise as the kernel of (projection onto a complement of sub)∘f."""
    parts: Dict[int, Subspace] = {}
    for d in f.source.degrees():
        target = sub.part(d + f.degree)
        projection, _ = quotient(target.ambient_dim, target)
        parts[d] = kernel_basis(projection @ f.block(d))
    return GradedSubspace(f.source, parts)
