"""
Ideals of algebras over a coperad, the canonical topology, completion and dévissage.

Everything happens on one nilpotent level Λ over F_WQ. The canonical topology is
I⁰Λ = Λ and IⁿΛ = span{a(z; λ⃗) : weight(z) > n}; FⁿΛ = Λ/IⁿΛ and grⁿΛ = IⁿΛ/Iⁿ⁺¹Λ.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from services.algcog import QAlgebra
from services.errors import ShapeMismatchError, ValidationError
from services.graded import ChainComplex, GradedMap, GradedSpace, GradedSubspace, Key, Vec, compose, is_quasi_iso
from services.keyed import LinearOp, vadd
from services.opcop import CurvedCoperad, coradical_filtration
from services.qlinalg import ONE, ZERO, Rational, RationalMatrix, Subspace, charpoly, format_rational, kernel_basis, \
    quotient, solve, to_rational
from services.report import Report
from services.symseq import Truncation, tensor_vectors
from telemetrics.logger import logger


@dataclass
class Ideal:
    algebra: QAlgebra
    sub: GradedSubspace
    name: str = "I"

    @property
    def dims(self) -> Dict[int, int]:
        return self.sub.dims

    def total_dim(self) -> int:
        return self.sub.total_dim()

    def contains(self, other: "Ideal") -> bool:
        return self.sub.contains(other.sub)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ideal):
            return NotImplemented
        return self.sub == other.sub

    def __repr__(self) -> str:
        return f"Ideal({self.name}, {self.dims})"


def _span(alg: QAlgebra, vectors) -> GradedSubspace:
    return GradedSubspace.span(alg.carrier, [v for v in vectors if v])


def _act_with(alg: QAlgebra, z: Key, position: int, v: Mapping[Key, Rational], others: Tuple[Key, ...]) -> Vec:
    out: Vec = {}
    for key, c in v.items():
        vadd(out, alg.act(z, others[:position] + (key,) + others[position:]), c)
    return out


def _generated_vectors(alg: QAlgebra, x: GradedSubspace) -> List[Vec]:
    keys = alg.carrier.keys()
    vectors = []
    for v in x.keyed_vectors():
        for z in alg.acting_keys():
            k = alg.coperad.arity_of(z)
            for position in range(k):
                for others in product(keys, repeat=k - 1):
                    vectors.append(_act_with(alg, z, position, v, others))
    return vectors


def ideal_generated(alg: QAlgebra, x: GradedSubspace) -> Ideal:
    """a(Σ(Λ, X)^Q): the ideal generated by X in one step."""
    if x.space != alg.carrier:
        raise ShapeMismatchError("generators must live in the carrier of the algebra")
    return Ideal(alg, _span(alg, _generated_vectors(alg, x)), "⟨X⟩")


def ideal_closure(alg: QAlgebra, x: GradedSubspace) -> Ideal:
    """Smallest subobject containing X and stable under the action, by iterating to a fixed point."""
    current = x
    while True:
        nxt = _span(alg, current.keyed_vectors() + _generated_vectors(alg, current))
        if nxt == current:
            return Ideal(alg, current, "closure")
        current = nxt


def is_ideal(alg: QAlgebra, sub: GradedSubspace) -> bool:
    return sub.contains(ideal_generated(alg, sub).sub)


def is_stable(alg: QAlgebra, sub: GradedSubspace) -> bool:
    """d_Λ(I) ⊆ I."""
    return sub.contains(_span(alg, [alg.d(v) for v in sub.keyed_vectors()]))


def ideal_sum(i: Ideal, j: Ideal) -> Ideal:
    return Ideal(i.algebra, i.sub.sum(j.sub), f"{i.name}+{j.name}")


def ideal_intersection(i: Ideal, j: Ideal) -> Ideal:
    return Ideal(i.algebra, i.sub.intersection(j.sub), f"{i.name}∩{j.name}")


def ideal_image(f: GradedMap, ideal: Ideal, target: QAlgebra) -> Ideal:
    """f(I) for a surjective morphism f : Λ → Γ, an ideal of Γ."""
    if f.target != target.carrier:
        raise ShapeMismatchError("map does not land in the carrier of the target")
    if not is_fibration([f]):
        raise ValidationError("the image of an ideal is only an ideal along a surjection")
    return Ideal(target, ideal.sub.image_under(f), f"f({ideal.name})")


def canonical_topology(alg: QAlgebra) -> List[Ideal]:
    """I⁰Λ ⊇ I¹Λ ⊇ … ⊇ I^WΛ = 0, W the level of Λ."""
    q = alg.coperad
    ideals = [Ideal(alg, GradedSubspace.full(alg.carrier), "I^0")]
    heavy = [z for z in alg.acting_keys() if q.weight_of(z) > 0]
    images: Dict[Key, List[Vec]] = {}
    for z in heavy:
        images[z] = [alg.act(z, inputs) for inputs in alg.inputs(q.arity_of(z))]
    for n in range(1, alg.level + 1):
        vectors = [v for z in heavy if q.weight_of(z) > n for v in images[z]]
        ideals.append(Ideal(alg, _span(alg, vectors), f"I^{n}"))
    logger.debug(f"canonical topology of {alg.name}: {[i.total_dim() for i in ideals]}", tag="completion")
    return ideals


def topology_report(alg: QAlgebra, ideals: Sequence[Ideal] | None = None) -> Report:
    ideals = ideals or canonical_topology(alg)
    report = Report(f"topology {alg.name}")
    for n in range(1, len(ideals)):
        report.add(f"decreasing{n}", None if ideals[n - 1].contains(ideals[n]) else f"I^{n} ⊄ I^{n - 1}")
    for n, ideal in enumerate(ideals):
        report.add(f"ideal{n}", None if is_ideal(alg, ideal.sub) else f"I^{n} is not an ideal")
        report.add(f"stable{n}", None if is_stable(alg, ideal.sub) else f"d(I^{n}) ⊄ I^{n}")
    return report


def quotient_cotensor_dims(q: CurvedCoperad, x: GradedSpace, n: int, t: Truncation | None = None) -> Dict[int, int]:
    """Dimensions of X^{Q/FₙQ}, from the coradical filtration quotients."""
    t = t or q.truncation
    filtration = coradical_filtration(q, t)
    word_dims: Dict[int, Dict[int, int]] = {0: {0: 1}}
    for k in range(1, t.max_arity + 1):
        prev = word_dims[k - 1]
        word_dims[k] = {}
        for d, a in prev.items():
            for e in x.degrees():
                word_dims[k][d + e] = word_dims[k].get(d + e, 0) + a * x.dim(e)
    dims: Dict[int, int] = {}
    for arity in q.seq.arities():
        if arity > t.max_arity:
            continue
        target = filtration.quotient_map(n, arity).target
        for d in target.degrees():
            for e, count in word_dims[arity].items():
                dims[e - d] = dims.get(e - d, 0) + count * target.dim(d)
    return {d: c for d, c in dims.items() if c}


# quotients and subquotients


def quotient_algebra(alg: QAlgebra, sub: GradedSubspace, name: str) -> Tuple[QAlgebra, GradedMap]:
    """Λ/I with the induced action and derivation, and the projection Λ ↠ Λ/I. I must be a stable ideal."""
    carrier = alg.carrier
    blocks: Dict[int, RationalMatrix] = {}
    sections: Dict[int, RationalMatrix] = {}
    basis: Dict[int, List[Key]] = {}
    for d in carrier.degrees():
        projection, section = quotient(carrier.dim(d), sub.part(d))
        blocks[d] = projection
        sections[d] = section
        basis[d] = [(name, d, j) for j in range(projection.rows)]
    target = GradedSpace(basis)
    pi = GradedMap(carrier, target, 0, blocks)

    def lift(key: Key) -> Vec:
        _, d, j = key
        keys = carrier.basis(d)
        return {keys[i]: c for i, c in sections[d].column(j).items()}

    def act(z: Key, inputs: Tuple[Key, ...]) -> Vec:
        out: Vec = {}
        for word, c in tensor_vectors([lift(k) for k in inputs]).items():
            vadd(out, alg.act(z, word), c)
        return pi.apply(out)

    def differential(key: Key) -> Vec:
        return pi.apply(alg.d(lift(key)))

    result = QAlgebra(alg.coperad, target, act, alg.level, LinearOp(differential, -1, f"d({name})"), name)
    result.lift = lift
    return result, pi


class Subquotient:
    """U/L for L ⊆ U ⊆ Λ, with coordinates on a basis of the image of U in Λ/L."""

    def __init__(self, carrier: GradedSpace, upper: GradedSubspace, lower: GradedSubspace, prefix: str):
        self.carrier = carrier
        self._projection: Dict[int, RationalMatrix] = {}
        self._section: Dict[int, RationalMatrix] = {}
        self._basis: Dict[int, RationalMatrix] = {}
        keys: Dict[int, List[Key]] = {}
        for d in carrier.degrees():
            projection, section = quotient(carrier.dim(d), lower.part(d))
            image = upper.part(d).image_under(projection)
            self._projection[d] = projection
            self._section[d] = section
            self._basis[d] = image.basis
            keys[d] = [(prefix, d, j) for j in range(image.dim)]
        self.space = GradedSpace(keys)

    def lift(self, key: Key) -> Vec:
        _, d, j = key
        coords = self._section[d].apply(self._basis[d].column(j))
        keys = self.carrier.basis(d)
        return {keys[i]: c for i, c in coords.items()}

    def reduce(self, vec: Mapping[Key, Rational]) -> Vec:
        """Coordinates of the class of a homogeneous vector of U."""
        by_degree: Dict[int, Dict[int, Rational]] = {}
        for key, c in vec.items():
            if c:
                d = self.carrier.degree_of(key)
                coords = by_degree.setdefault(d, {})
                i = self.carrier.index_of(key)
                coords[i] = coords.get(i, ZERO) + c
        out: Vec = {}
        for d, coords in by_degree.items():
            image = self._projection[d].apply(coords)
            if not any(image.values()):
                continue
            x = solve(self._basis[d], image)
            if x is None:
                raise ValidationError(f"vector of degree {d} does not lie in the upper subspace")
            for j, c in x.items():
                if c:
                    out[self.space.basis(d)[j]] = c
        return out


def subquotient_complex(alg: QAlgebra, sub: Subquotient) -> Tuple[ChainComplex, bool]:
    """The induced differential on U/L and whether it squares to zero."""
    space = sub.space
    d = GradedMap.from_function(space, space, -1, lambda key: sub.reduce(alg.d(sub.lift(key))))
    return ChainComplex(space, d, check=False), compose(d, d).is_zero()


@dataclass
class RadicalCofiltration:
    algebra: QAlgebra
    topology: List[Ideal]
    levels: List[QAlgebra]
    projections: List[GradedMap]
    graded: List[ChainComplex]
    graded_square_zero: List[bool]

    def dims(self) -> List[int]:
        return [level.carrier.total_dim for level in self.levels]

    def graded_dims(self) -> List[Dict[int, int]]:
        return [c.space.dims for c in self.graded]


def radical_cofiltration(alg: QAlgebra) -> RadicalCofiltration:
    """FⁿΛ = Λ/IⁿΛ for n ≤ W and grⁿΛ = IⁿΛ/Iⁿ⁺¹Λ for n < W."""
    topology = canonical_topology(alg)
    levels, projections = [], []
    for n, ideal in enumerate(topology):
        level, pi = quotient_algebra(alg, ideal.sub, f"F{n}")
        levels.append(level)
        projections.append(pi)
    graded, square_zero = [], []
    for n in range(len(topology) - 1):
        sub = Subquotient(alg.carrier, topology[n].sub, topology[n + 1].sub, f"gr{n}")
        complex_, ok = subquotient_complex(alg, sub)
        if not ok:
            logger.warning(f"gr^{n} of {alg.name} does not square to zero", tag="completion")
        graded.append(complex_)
        square_zero.append(ok)
    return RadicalCofiltration(alg, topology, levels, projections, graded, square_zero)


# completion


def infinite_ideal(alg: QAlgebra, topology: Sequence[Ideal] | None = None) -> GradedSubspace:
    """I^∞Λ = ∩_{1 ≤ n < W} IⁿΛ; zero when the range is empty."""
    topology = topology or canonical_topology(alg)
    stages = [ideal.sub for ideal in topology[1:alg.level]]
    if not stages:
        return GradedSubspace.zero(alg.carrier)
    result = stages[0]
    for sub in stages[1:]:
        result = result.intersection(sub)
    return result


@dataclass
class Completion:
    source: QAlgebra
    completed: QAlgebra
    phi: GradedMap
    kernel: GradedSubspace

    @property
    def surjective(self) -> bool:
        return all(self.phi.rank(d) == self.completed.carrier.dim(d) for d in self.completed.carrier.degrees())

    @property
    def injective(self) -> bool:
        return self.kernel.total_dim() == 0

    @property
    def isomorphism(self) -> bool:
        return self.surjective and self.injective

    def tower(self) -> RadicalCofiltration:
        return radical_cofiltration(self.completed)


def complete(alg: QAlgebra) -> Completion:
    """Λ̂ = Λ/I^∞Λ with the unit map φ_Λ."""
    kernel = infinite_ideal(alg)
    completed, phi = quotient_algebra(alg, kernel, f"{alg.name}^")
    logger.info(f"completion of {alg.name}: I^∞ has dims {kernel.dims}", tag="completion")
    return Completion(alg, completed, phi, kernel)


def is_continuous(f: GradedMap, source: QAlgebra, target: QAlgebra) -> bool:
    """f(IⁿΛ) ⊆ IⁿΓ for every n."""
    ours, theirs = canonical_topology(source), canonical_topology(target)
    for n in range(min(len(ours), len(theirs))):
        if not theirs[n].sub.contains(ours[n].sub.image_under(f)):
            return False
    return True


def is_fibration(maps: Sequence[GradedMap]) -> bool:
    """Levelwise surjectivity."""
    return all(f.rank(d) == f.target.dim(d) for f in maps for d in f.target.degrees())


@dataclass
class DevissageResult:
    equivalence: bool
    stages: Dict[int, bool] = field(default_factory=dict)


def devissage_check(f: GradedMap, source: QAlgebra, target: QAlgebra,
                    window: Tuple[int, int] | None = None) -> DevissageResult:
    """grⁿ(f) a quasi-isomorphism for every n < W − 1, the top stage being the head of the presentation."""
    if f.source != source.carrier or f.target != target.carrier:
        raise ShapeMismatchError("map does not go between the given carriers")
    window = window or source.coperad.truncation.degree_window
    ours, theirs = canonical_topology(source), canonical_topology(target)
    level = min(source.level, target.level)
    stages: Dict[int, bool] = {}
    for n in range(max(level - 1, 0)):
        s = Subquotient(source.carrier, ours[n].sub, ours[n + 1].sub, f"gr{n}")
        t = Subquotient(target.carrier, theirs[n].sub, theirs[n + 1].sub, f"gr{n}'")
        s_complex, _ = subquotient_complex(source, s)
        t_complex, _ = subquotient_complex(target, t)
        gr_f = GradedMap.from_function(s.space, t.space, 0, lambda key: t.reduce(f.apply(s.lift(key))))
        try:
            stages[n] = is_quasi_iso(gr_f, s_complex, t_complex, window)
        except ValidationError:
            stages[n] = False
        logger.debug(f"dévissage stage {n}: {stages[n]}", tag="completion")
    return DevissageResult(all(stages.values()), stages)


# the non-complete algebra over ℚ[X]


class CounterexampleModel:
    """Λ_N = T_N ⊕ ℚ with T_N the lower-triangular N×N matrices (diagonal included).

    The generator X acts by ε(a, l) = (a[−1], Σ̄a), with a[−1] the shift of every entry one column right
    inside the triangle and Σ̄ the sum of all entries.
    """

    LINE: Key = ("L",)

    def __init__(self, size: int):
        if size < 2:
            raise ValidationError(f"size must be at least 2, got {size}")
        self.size = size
        self.matrix_keys: List[Key] = [("T", i, j) for i in range(size) for j in range(i + 1)]
        self.carrier = GradedSpace({0: self.matrix_keys + [self.LINE]})

    @property
    def dim(self) -> int:
        return len(self.matrix_keys) + 1

    def shift(self, a: Mapping[Key, Rational], n: int) -> Vec:
        out: Vec = {}
        for key, c in a.items():
            if key == self.LINE or not c:
                continue
            _, i, j = key
            if j + n <= i:
                out[("T", i, j + n)] = out.get(("T", i, j + n), ZERO) + c
        return out

    def sigma_bar(self, a: Mapping[Key, Rational]) -> Rational:
        return sum((c for key, c in a.items() if key != self.LINE), ZERO)

    def epsilon(self, x: Mapping[Key, Rational]) -> Vec:
        out = self.shift(x, 1)
        total = self.sigma_bar(x)
        if total:
            out[self.LINE] = total
        return out

    def epsilon_power(self, x: Mapping[Key, Rational], n: int) -> Vec:
        for _ in range(n):
            x = self.epsilon(x)
        return dict(x)

    def structure_map(self, sequence: Sequence[Mapping[Key, Rational]]) -> Vec:
        """S(x₀, x₁, …) = (Σ aₙ[−n], Σ̄(Σ aₙ₊₁[−n]) + l₀) on a finitely supported sequence."""
        out: Vec = {}
        for n, x in enumerate(sequence):
            vadd(out, self.shift(x, n))
        shifted: Vec = {}
        for n, x in enumerate(sequence[1:]):
            vadd(shifted, self.shift(x, n))
        line = self.sigma_bar(shifted) + (sequence[0].get(self.LINE, ZERO) if sequence else ZERO)
        if line:
            out[self.LINE] = out.get(self.LINE, ZERO) + line
        return {k: c for k, c in out.items() if c}

    def epsilon_matrix(self) -> RationalMatrix:
        return GradedMap.from_function(self.carrier, self.carrier, 0, lambda key: self.epsilon({key: ONE})).block(0)

    def qalgebra(self, coperad: CurvedCoperad, level: int | None = None) -> QAlgebra:
        """Λ_N over F_levelQ for Q = ℚ[X], the chain of weight m acting by εᵐ."""
        if coperad.seq.arities() != [1]:
            raise ShapeMismatchError(f"{coperad.name} is not concentrated in arity one")
        level = self.size - 1 if level is None else level

        def act(z: Key, inputs: Tuple[Key, ...]) -> Vec:
            return self.epsilon_power({inputs[0]: ONE}, coperad.weight_of(z))

        return QAlgebra(coperad, self.carrier, act, level, name=f"Λ_{self.size}")


def _random_element(model: CounterexampleModel, rng: np.random.Generator, density: float = 0.5) -> Vec:
    out: Vec = {}
    for key in model.carrier.keys():
        if rng.random() < density:
            value = int(rng.integers(-3, 4))
            if value:
                out[key] = to_rational(value)
    return out


def _power(m: RationalMatrix, n: int) -> RationalMatrix:
    result = RationalMatrix.identity(m.rows)
    for _ in range(n):
        result = m @ result
    return result


def _nilpotency_index(m: RationalMatrix) -> int:
    power = RationalMatrix.identity(m.rows)
    for k in range(m.rows + 2):
        if power.is_zero():
            return k
        power = m @ power
    return -1


@dataclass
class CounterexampleResult:
    size: int
    report: Report
    data: Dict[str, Any]

    @property
    def passed(self) -> bool:
        return self.report.passed

    def to_dict(self) -> Dict[str, Any]:
        return {"size": self.size, **self.report.to_dict(), "data": self.data}


def counterexample_run(size: int, seed: int = 0, trials: int = 20, coperad: CurvedCoperad | None = None
                       ) -> CounterexampleResult:
    """Build Λ_N and check its axioms, the spectrum of ε and the line inside every image of εⁿ."""
    model = CounterexampleModel(size)
    rng = np.random.default_rng(seed)
    report = Report(f"counterexample N={size}")
    data: Dict[str, Any] = {"dim": model.dim}
    logger.info(f"counterexample run: N={size}, seed={seed}, trials={trials}", tag="counterexample")

    failure = None
    for _ in range(trials):
        x = _random_element(model, rng)
        if model.structure_map([x]) != {k: c for k, c in x.items() if c}:
            failure = f"S(x, 0, …) ≠ x for x = {x!r}"
            break
    report.add("unit", failure)

    failure = None
    for _ in range(trials):
        rows, cols = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        matrix = [[_random_element(model, rng, 0.3) for _ in range(cols)] for _ in range(rows)]
        by_rows = model.structure_map([model.structure_map(row) for row in matrix])
        diagonals: List[Vec] = [{} for _ in range(rows + cols - 1)]
        for n in range(rows):
            for m in range(cols):
                vadd(diagonals[n + m], matrix[n][m])
        by_diagonals = model.structure_map(diagonals)
        if by_rows != by_diagonals:
            failure = f"summing a {rows}×{cols} matrix by rows and by antidiagonals disagree"
            break
    report.add("associativity", failure)

    eps = model.epsilon_matrix()
    poly = charpoly(eps)
    nilpotent_poly = [ONE] + [ZERO] * model.dim
    data["charpoly"] = [format_rational(c) for c in poly]
    report.add("spectrum", None if list(poly) == nilpotent_poly else "ε has a nonzero eigenvalue")

    line = {model.carrier.index_of(model.LINE): ONE}
    images = [Subspace.full(model.dim)]
    for n in range(1, size):
        images.append(Subspace.span(model.dim, _power(eps, n).columns()))
    intersection = images[1]
    for image in images[2:]:
        intersection = intersection.intersection(image)
    data["image_ranks"] = [image.dim for image in images[1:]]
    data["intersection_dim"] = intersection.dim
    report.add("line_in_images", None if intersection.contains_vector(line) else "0⊕ℚ ⊄ ∩ im εⁿ")

    # e(N−1,N−1) survives every shift at finite N, so ε only kills the intersection modulo the line
    line_space = Subspace.span(model.dim, [line])
    data["intersection_in_kernel"] = kernel_basis(eps).sum(line_space).contains(intersection)
    report.add("epsilon_on_intersection",
               None if line_space.contains(intersection.image_under(eps)) else "ε(∩ im εⁿ) ⊄ 0⊕ℚ")

    witnesses, failure = {}, None
    diagonal_residues = {}
    for n in range(1, size):
        image = model.epsilon_power({("T", n, 1): ONE}, n)
        witnesses[n] = f"e({n},1)"
        if image != {model.LINE: ONE}:
            failure = f"ε^{n}(e({n},1)) = {image!r}"
            break
        other = model.epsilon_power({("T", n, 0): ONE}, n)
        diagonal_residues[n] = sorted(repr(k) for k in other if k != model.LINE)
    data["witnesses"] = witnesses
    data["diagonal_witness_residue"] = diagonal_residues
    report.add("witnesses", failure)

    index = _nilpotency_index(eps)
    data["nilpotency_index"] = index
    failure = None if index >= 0 else f"ε is not nilpotent at N={size}"
    for smaller in range(2, size + 1):
        sub_index = _nilpotency_index(CounterexampleModel(smaller).epsilon_matrix())
        if sub_index < 0:
            failure = f"ε is not nilpotent at N={smaller}"
            break
    report.add("finite_nilpotent", failure)

    if coperad is not None:
        alg = model.qalgebra(coperad)
        topology = canonical_topology(alg)
        failure = None
        for n in range(1, alg.level):
            expected = Subspace.span(model.dim, _power(eps, n + 1).columns())
            if topology[n].sub.part(0) != expected:
                failure = f"I^{n} ≠ im ε^{n + 1}"
                break
        report.add("topology", failure)
        completion = complete(alg)
        data["infinite_ideal_dim"] = completion.kernel.total_dim()
        if alg.level >= 2:
            report.add("not_complete", None if not completion.injective else "φ is injective")
    logger.info(f"counterexample N={size}: passed={report.passed}", tag="counterexample")
    return CounterexampleResult(size, report, data)
