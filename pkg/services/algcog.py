"""
Algebras and cogebras over operads and coperads, and their free objects.

Elements of a cotensor X^M are keyed ("E", m, word) as in ``symseq.KeyedCotensor``;
composites of M⋄N are keyed (m, (n₁, …, n_k)). Algebras over a coperad are only
ever handled through their nilpotent levels X^{FₙQ}, collected in an ``AlgebraTower``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

from services.errors import ShapeMismatchError, TruncationError
from services.graded import ChainComplex, GradedMap, GradedSpace, GradedSubspace, Key, Vec, preimage
from services.keyed import LinearOp, describe, vadd
from services.opcop import CurvedCoperad, Operad
from services.qlinalg import ONE, Rational, rank
from services.report import Report
from services.symseq import KeyedCotensor, Truncation, tensor_vectors
from telemetrics.logger import logger

Action = Callable[[Key, Tuple[Key, ...]], Mapping[Key, Rational]]


def _parity(n: int) -> int:
    return -1 if n % 2 else 1


def _sequences(keys: Sequence[Key], n: int, size_of: Callable[[Key], int], cap: int) -> Iterator[Tuple[Key, ...]]:
    """Words of length n in ``keys`` whose total size stays ≤ cap."""
    if n == 0:
        yield ()
        return
    for key in keys:
        size = size_of(key)
        if size <= cap:
            for rest in _sequences(keys, n - 1, size_of, cap - size):
                yield (key,) + rest


def _differential_op(x: ChainComplex) -> LinearOp:
    return LinearOp(lambda key: x.differential(key), -1, "d_X")


def _mismatch(lhs: Mapping[Key, Rational], rhs: Mapping[Key, Rational],
              within: Callable[[Key], bool] | None = None) -> Vec:
    diff = vadd(dict(lhs), rhs, -ONE)
    if within is not None:
        diff = {k: v for k, v in diff.items() if within(k)}
    return diff


# algebras over an operad


class AlgebraOverOperad:
    """Λ with a : P⋄Λ → Λ given on basis words, and a derivation d_Λ."""

    def __init__(
        self,
        operad: Operad,
        carrier: GradedSpace,
        act: Action,
        differential: LinearOp | None = None,
        name: str = "Λ",
        size_of: Callable[[Key], int] | None = None,
        size_cap: int | None = None,
    ):
        self.operad = operad
        self.carrier = carrier
        self._act = act
        self.d = differential or LinearOp.zero(-1)
        self.name = name
        self.size_of = size_of or (lambda key: 1)
        self.size_cap = size_cap if size_cap is not None else operad.truncation.max_arity

    def __repr__(self) -> str:
        return f"AlgebraOverOperad({self.name}, {self.carrier.dims})"

    def act(self, y: Key, inputs: Tuple[Key, ...]) -> Vec:
        if len(inputs) != self.operad.arity_of(y):
            raise ShapeMismatchError(f"{len(inputs)} inputs given to an arity {self.operad.arity_of(y)} operation")
        return {k: c for k, c in self._act(y, inputs).items() if c}

    def act_vec(self, yv: Mapping[Key, Rational], inputs: Tuple[Key, ...]) -> Vec:
        out: Vec = {}
        for y, c in yv.items():
            vadd(out, self.act(y, inputs), c)
        return out

    def inputs(self, n: int) -> Iterator[Tuple[Key, ...]]:
        return _sequences(self.carrier.keys(), n, self.size_of, self.size_cap)

    def complex(self) -> ChainComplex:
        return ChainComplex(self.carrier, self.d.materialize(self.carrier, self.carrier), check=False)


def free_algebra_operad(p: Operad, x: ChainComplex, t: Truncation | None = None) -> AlgebraOverOperad:
    """P⋄X with the action m⋄Id; basis (y, word) with arity y = length of word."""
    t = t or p.truncation
    keys: List[Key] = []
    x_keys = x.space.keys()
    for y in p.keys():
        n = p.arity_of(y)
        if n > t.max_arity:
            continue
        for word in _sequences(x_keys, n, lambda k: 1, t.max_arity):
            keys.append((y, word))
    t.check_cells(len(keys), f"free algebra over {p.name}")

    def degree_of(key: Key) -> int:
        y, word = key
        return p.degree_of(y) + sum(x.space.degree_of(k) for k in word)

    carrier = GradedSpace.from_keys(keys, degree_of)

    def act(y: Key, inputs: Tuple[Key, ...]) -> Vec:
        tops = tuple(key[0] for key in inputs)
        flat: Tuple[Key, ...] = ()
        parity = 0
        seen_words = 0
        for top, word in inputs:
            parity += seen_words * p.degree_of(top)
            seen_words += sum(x.space.degree_of(k) for k in word)
            flat += word
        sign = _parity(parity)
        return {(r, flat): sign * c for r, c in p.full(y, tops).items() if (r, flat) in carrier}

    dx = _differential_op(x)

    def differential(key: Key) -> Vec:
        y, word = key
        out: Vec = {}
        for dy, c in p.d.on_basis(y).items():
            if (dy, word) in carrier:
                vadd(out, {(dy, word): ONE}, c)
        before = p.degree_of(y)
        for j, k in enumerate(word):
            for dk, c in dx.on_basis(k).items():
                new = (y, word[:j] + (dk,) + word[j + 1:])
                if new in carrier:
                    vadd(out, {new: ONE}, c * _parity(before))
            before += x.space.degree_of(k)
        return out

    logger.info(f"free algebra over {p.name}: dims {carrier.dims}", tag="algebra")
    return AlgebraOverOperad(p, carrier, act, LinearOp(differential, -1, "d"), f"{p.name}⋄X",
                             size_of=lambda key: len(key[1]), size_cap=t.max_arity)


def _algebra_unit_failure(alg: AlgebraOverOperad) -> str | None:
    for key in alg.carrier.keys():
        value = alg.act(alg.operad.unit, (key,))
        if value != {key: ONE}:
            return f"η acts on {key!r} as {describe(value)}"
    return None


def _algebra_associativity_failure(alg: AlgebraOverOperad) -> str | None:
    p = alg.operad
    A, W = p.truncation.max_arity, p.truncation.weight_cap
    degree = alg.carrier.degree_of
    for y in p.keys():
        for y2 in p.keys():
            k = p.arity_of(y2)
            n = p.arity_of(y) + k - 1
            if n > A or p.weight_of(y) + p.weight_of(y2) > W:
                continue
            for i in range(1, p.arity_of(y) + 1):
                for inputs in alg.inputs(n):
                    lhs = alg.act_vec(p.partial(y, i, y2), inputs)
                    inner = alg.act(y2, inputs[i - 1:i - 1 + k])
                    sign = _parity(p.degree_of(y2) * sum(degree(key) for key in inputs[:i - 1]))
                    rhs: Vec = {}
                    for mu, c in inner.items():
                        vadd(rhs, alg.act(y, inputs[:i - 1] + (mu,) + inputs[i - 1 + k:]), c * sign)
                    diff = _mismatch(lhs, rhs)
                    if diff:
                        return f"({y!r} ∘{i} {y2!r}) on {inputs!r} differs by {describe(diff)}"
    return None


def _algebra_derivation_failure(alg: AlgebraOverOperad) -> str | None:
    p = alg.operad
    degree = alg.carrier.degree_of
    for y in p.keys():
        for inputs in alg.inputs(p.arity_of(y)):
            lhs = alg.d(alg.act(y, inputs))
            rhs = alg.act_vec(p.d.on_basis(y), inputs)
            before = p.degree_of(y)
            for j, key in enumerate(inputs):
                for dk, c in alg.d.on_basis(key).items():
                    vadd(rhs, alg.act(y, inputs[:j] + (dk,) + inputs[j + 1:]), c * _parity(before))
                before += degree(key)
            diff = _mismatch(lhs, rhs, alg.carrier.__contains__)
            if diff:
                return f"d({y!r}; {inputs!r}) differs by {describe(diff)}"
    return None


def _square_zero_failure(d: LinearOp, keys: Iterable[Key], within: Callable[[Key], bool]) -> str | None:
    for key in keys:
        value = {k: c for k, c in d(d.on_basis(key)).items() if within(k)}
        if value:
            return f"d²({key!r}) = {describe(value)}"
    return None


def validate_algebra(alg: AlgebraOverOperad) -> Report:
    logger.info(f"validating {alg!r}", tag="validate")
    report = Report(f"algebra {alg.name}")
    report.add("unit", _algebra_unit_failure(alg))
    report.add("associativity", _algebra_associativity_failure(alg))
    report.add("derivation", _algebra_derivation_failure(alg))
    report.add("square_zero", _square_zero_failure(alg.d, alg.carrier.keys(), alg.carrier.__contains__))
    return report


# cogebras over a coperad


class CogebraOverCoperad:
    """V with a coaction V → Q⋄V, valued in composites (b, (v₁, …, v_k))."""

    def __init__(
        self,
        coperad: CurvedCoperad,
        carrier: GradedSpace,
        coaction: Callable[[Key], Mapping[Key, Rational]],
        differential: LinearOp | None = None,
        name: str = "V",
    ):
        self.coperad = coperad
        self.carrier = carrier
        self._coaction = coaction
        self._cache: Dict[Key, Vec] = {}
        self.d = differential or LinearOp.zero(-1)
        self.name = name

    def __repr__(self) -> str:
        return f"CogebraOverCoperad({self.name}, {self.carrier.dims})"

    def coaction(self, v: Key) -> Vec:
        cached = self._cache.get(v)
        if cached is None:
            cached = {k: c for k, c in self._coaction(v).items() if c}
            self._cache[v] = cached
        return cached


def free_cogebra_coperad(q: CurvedCoperad, x: ChainComplex, t: Truncation | None = None) -> CogebraOverCoperad:
    """Q⋄X with the coaction w⋄Id."""
    t = t or q.truncation
    x_keys = x.space.keys()
    keys: List[Key] = []
    for z in q.keys():
        n = q.arity_of(z)
        if n > t.max_arity or q.weight_of(z) > t.weight_cap:
            continue
        keys.extend((z, word) for word in _sequences(x_keys, n, lambda k: 1, t.max_arity))
    t.check_cells(len(keys), f"free cogebra over {q.name}")
    x_degree = x.space.degree_of

    def degree_of(key: Key) -> int:
        z, word = key
        return q.degree_of(z) + sum(x_degree(k) for k in word)

    carrier = GradedSpace.from_keys(keys, degree_of)

    def coaction(key: Key) -> Vec:
        z, word = key
        out: Vec = {}
        for (b, tops), c in q.w(z).items():
            parts = []
            position = 0
            parity = 0
            seen_words = 0
            for top in tops:
                width = q.arity_of(top)
                part = word[position:position + width]
                parity += seen_words * q.degree_of(top)
                seen_words += sum(x_degree(k) for k in part)
                parts.append((top, part))
                position += width
            vadd(out, {(b, tuple(parts)): ONE}, c * _parity(parity))
        return out

    dx = _differential_op(x)

    def differential(key: Key) -> Vec:
        z, word = key
        out: Vec = {}
        for dz, c in q.d.on_basis(z).items():
            vadd(out, {(dz, word): ONE}, c)
        before = q.degree_of(z)
        for j, k in enumerate(word):
            for dk, c in dx.on_basis(k).items():
                vadd(out, {(z, word[:j] + (dk,) + word[j + 1:]): ONE}, c * _parity(before))
            before += x_degree(k)
        return {k: c for k, c in out.items() if k in carrier}

    logger.info(f"free cogebra over {q.name}: dims {carrier.dims}", tag="cogebra")
    return CogebraOverCoperad(q, carrier, coaction, LinearOp(differential, -1, "d"), f"{q.name}⋄X")


def _cogebra_counit_failure(v: CogebraOverCoperad) -> str | None:
    q = v.coperad
    for key in v.carrier.keys():
        value: Vec = {}
        for (b, parts), c in v.coaction(key).items():
            if q.arity_of(b) == 1:
                vadd(value, {parts[0]: ONE}, c * q.tau(b))
        if value != {key: ONE}:
            return f"(τ⋄Id)Δ({key!r}) = {describe(value)}"
    return None


def _cogebra_coassociativity_failure(v: CogebraOverCoperad) -> str | None:
    q = v.coperad
    degree = v.carrier.degree_of
    for key in v.carrier.keys():
        bottom: Vec = {}
        tops: Vec = {}
        for (b, parts), c in v.coaction(key).items():
            for (x, ys), c2 in q.w(b).items():
                vadd(bottom, {(x, ys, parts): ONE}, c * c2)
            for combo in product(*(list(v.coaction(part).items()) for part in parts)):
                coeff = c
                parity = 0
                seen = 0
                ys, us = [], []
                for (y, group), c_i in combo:
                    coeff *= c_i
                    parity += seen * q.degree_of(y)
                    seen += sum(degree(u) for u in group)
                    ys.append(y)
                    us.extend(group)
                vadd(tops, {(b, tuple(ys), tuple(us)): ONE}, coeff * _parity(parity))
        diff = _mismatch(bottom, tops)
        if diff:
            return f"coassociativity fails on {key!r}: {describe(diff)}"
    return None


def _cogebra_coderivation_failure(v: CogebraOverCoperad) -> str | None:
    q = v.coperad
    degree = v.carrier.degree_of
    for key in v.carrier.keys():
        lhs: Vec = {}
        for dv, c in v.d.on_basis(key).items():
            vadd(lhs, v.coaction(dv), c)
        rhs: Vec = {}
        for (b, parts), c in v.coaction(key).items():
            for db, c2 in q.d.on_basis(b).items():
                vadd(rhs, {(db, parts): ONE}, c * c2)
            before = q.degree_of(b)
            for j, part in enumerate(parts):
                for dp, c2 in v.d.on_basis(part).items():
                    vadd(rhs, {(b, parts[:j] + (dp,) + parts[j + 1:]): ONE}, c * c2 * _parity(before))
                before += degree(part)
        diff = _mismatch(lhs, rhs)
        if diff:
            return f"Δ∘d ≠ (d⋄Id + Id⋄′d)∘Δ on {key!r}: {describe(diff)}"
    return None


def validate_cogebra_coperad(v: CogebraOverCoperad) -> Report:
    logger.info(f"validating {v!r}", tag="validate")
    report = Report(f"cogebra {v.name}")
    report.add("counit", _cogebra_counit_failure(v))
    report.add("coassociativity", _cogebra_coassociativity_failure(v))
    report.add("coderivation", _cogebra_coderivation_failure(v))
    if not any(v.coperad.theta(z) for z in v.coperad.keys()):
        report.add("square_zero", _square_zero_failure(v.d, v.carrier.keys(), v.carrier.__contains__))
    return report


# algebras over a coperad


class QAlgebra:
    """One nilpotent level: an algebra over F_nQ, a : Λ^{FₙQ} → Λ given on basis elements E_{z, (λ₁…λ_k)}.

    Elements z of weight above ``level`` act by zero.
    """

    def __init__(
        self,
        coperad: CurvedCoperad,
        carrier: GradedSpace,
        act: Action,
        level: int,
        differential: LinearOp | None = None,
        name: str = "Λ",
        key_weight: Callable[[Key], int] | None = None,
    ):
        self.coperad = coperad
        self.carrier = carrier
        self._act = act
        self._act_cache: Dict[Tuple[Key, Tuple[Key, ...]], Vec] = {}
        self.level = level
        self.d = differential or LinearOp.zero(-1)
        self.name = name
        self.key_weight = key_weight or (lambda key: 0)
        self.cotensor = KeyedCotensor(carrier.degree_of, coperad, self.key_weight)

    def __repr__(self) -> str:
        return f"QAlgebra({self.name}, level {self.level}, {self.carrier.dims})"

    def acting_keys(self, arity: int | None = None) -> List[Key]:
        q = self.coperad
        return [z for z in q.keys(arity) if q.weight_of(z) <= self.level]

    def act(self, z: Key, inputs: Tuple[Key, ...]) -> Vec:
        if len(inputs) != self.coperad.arity_of(z):
            raise ShapeMismatchError(f"{len(inputs)} inputs given to an arity {self.coperad.arity_of(z)} element")
        if self.coperad.weight_of(z) > self.level:
            return {}
        cache_key = (z, inputs)
        cached = self._act_cache.get(cache_key)
        if cached is None:
            cached = {k: c for k, c in self._act(z, inputs).items() if c and k in self.carrier}
            self._act_cache[cache_key] = cached
        return cached

    def act_element(self, element: Mapping[Key, Rational]) -> Vec:
        """a applied to a vector of Λ^Q keyed ("E", z, (λ₁…λ_k))."""
        out: Vec = {}
        for (_, z, inputs), c in element.items():
            vadd(out, self.act(z, inputs), c)
        return out

    def inputs(self, n: int) -> Iterator[Tuple[Key, ...]]:
        return _sequences(self.carrier.keys(), n, lambda key: 1, n)

    def with_derivation(self, d: LinearOp) -> "QAlgebra":
        clone = QAlgebra.__new__(QAlgebra)
        clone.__dict__.update(self.__dict__)
        clone.d = d
        return clone

    def with_head(self, extra: int) -> "QAlgebra":
        """The same algebra presented over F_{n+extra}Q, the new weights acting by zero."""
        level = self.level
        act = self._act

        def headless(z: Key, inputs: Tuple[Key, ...]) -> Vec:
            return act(z, inputs) if self.coperad.weight_of(z) <= level else {}

        clone = QAlgebra(self.coperad, self.carrier, headless, level + extra, self.d, self.name, self.key_weight)
        return clone

    def complex(self) -> ChainComplex:
        return ChainComplex(self.carrier, self.d.materialize(self.carrier, self.carrier), check=False)


@dataclass
class AlgebraTower:
    """Levels Λ₀ ← Λ₁ ← … ← Λ_W with the transition epimorphisms between them."""

    levels: List[QAlgebra]
    transitions: List[LinearOp] = field(default_factory=list)
    generators: ChainComplex | None = None
    name: str = "Λ"

    def level(self, n: int) -> QAlgebra:
        return self.levels[n]

    @property
    def top(self) -> QAlgebra:
        return self.levels[-1]

    def dims(self) -> List[Dict[int, int]]:
        return [alg.carrier.dims for alg in self.levels]

    def total_dims(self) -> List[int]:
        return [alg.carrier.total_dim for alg in self.levels]

    def with_derivations(self, ds: Sequence[LinearOp]) -> "AlgebraTower":
        return AlgebraTower([alg.with_derivation(d) for alg, d in zip(self.levels, ds)], self.transitions,
                            self.generators, self.name)


def _free_level(q: CurvedCoperad, x: GradedSpace, n: int, t: Truncation) -> QAlgebra:
    cot = KeyedCotensor(x.degree_of, q)
    keys = cot.keys(x.keys(), t.with_weight(n))
    t.check_cells(len(keys), f"level {n} of X^{q.name}")
    carrier = GradedSpace.from_keys(keys, cot.degree)
    inner = cot
    outer_degree = cot.degree

    def act(z: Key, inputs: Tuple[Key, ...]) -> Vec:
        parity = 0
        seen = 0
        tops, flat = [], ()
        for phi in inputs:
            _, m, u = phi
            parity += outer_degree(phi) * seen
            seen += q.degree_of(m)
            tops.append(m)
            flat += u
        sign = _parity(parity)
        return {("E", y, flat): sign * c for y, c in q.w_transpose((z, tuple(tops))).items()
                if q.weight_of(y) <= n}

    return QAlgebra(q, carrier, act, n, name=f"X^F{n}{q.name}", key_weight=lambda key: inner.seq.weight_of(key[1]))


def free_algebra_coperad(q: CurvedCoperad, x: ChainComplex, t: Truncation | None = None) -> AlgebraTower:
    """The tower of X^{FₙQ}, n ≤ W, with action X^w∘l and the derivation induced by d_X."""
    t = t or q.truncation
    logger.info(f"free algebra over {q.name} on {x.space.dims}, W={t.weight_cap}", tag="algebra")
    levels = [_free_level(q, x.space, n, t) for n in range(t.weight_cap + 1)]
    transitions = []
    for n in range(t.weight_cap):
        target = levels[n].carrier
        transitions.append(LinearOp(lambda key, target=target: {key: ONE} if key in target else {}, 0, f"r{n}"))
    tower = AlgebraTower(levels, transitions, x, f"X^{q.name}")
    dx = _differential_op(x)
    unit = q.unit

    def generator(key: Key) -> Vec:
        return {("E", unit, (k,)): c for k, c in dx.on_basis(key).items()}

    tower = extend_derivation_Qalg(tower, generator)
    logger.info(f"free algebra over {q.name}: level dims {tower.total_dims()}", tag="algebra")
    return tower


def _qalgebra_unit_failure(alg: QAlgebra) -> str | None:
    for key in alg.carrier.keys():
        value = alg.act(alg.coperad.unit, (key,))
        if value != {key: ONE}:
            return f"ι acts on {key!r} as {describe(value)}"
    return None


def _qalgebra_associativity_failure(alg: QAlgebra) -> str | None:
    q = alg.coperad
    A = q.truncation.max_arity
    degree = alg.carrier.degree_of
    for z in alg.acting_keys():
        budget = alg.level - q.weight_of(z)
        for tops in _top_words(q, q.arity_of(z), A, budget):
            n = sum(q.arity_of(top) for top in tops)
            merged = q.w_transpose((z, tops))
            for inputs in alg.inputs(n):
                groups = []
                position = 0
                for top in tops:
                    width = q.arity_of(top)
                    groups.append(inputs[position:position + width])
                    position += width
                inner = [alg.act(top, group) for top, group in zip(tops, groups)]
                lhs: Vec = {}
                for word, c in tensor_vectors(inner).items():
                    vadd(lhs, alg.act(z, word), c)
                parity = 0
                seen = 0
                for top, group in zip(tops, groups):
                    parity += (sum(degree(k) for k in group) - q.degree_of(top)) * seen
                    seen += q.degree_of(top)
                rhs: Vec = {}
                for y, c in merged.items():
                    vadd(rhs, alg.act(y, inputs), c * _parity(parity))
                diff = _mismatch(lhs, rhs)
                if diff:
                    return f"a(a^Q) ≠ a∘X^w∘l on ({z!r}; {tops!r}) with {inputs!r}: {describe(diff)}"
    return None


def _top_words(q: CurvedCoperad, k: int, arity_budget: int, weight_budget: int) -> Iterator[Tuple[Key, ...]]:
    if k == 0:
        yield ()
        return
    for y in q.keys():
        a, w = q.arity_of(y), q.weight_of(y)
        if a <= arity_budget and w <= weight_budget:
            for rest in _top_words(q, k - 1, arity_budget - a, weight_budget - w):
                yield (y,) + rest


def leibniz_residual(alg: QAlgebra) -> LinearOp:
    """a∘(Σ(Id,d)^Q − Λ^{d_Q}) − d∘a on the basis elements E_{z,(λ₁…λ_k)} of Λ^Q."""
    q = alg.coperad
    shuffle = alg.cotensor.shuffle(LinearOp.identity(), alg.d)
    dq_dual = alg.cotensor.contra(q.d, q.keys())

    def on_basis(element: Key) -> Vec:
        _, z, inputs = element
        out = alg.act_element(shuffle.on_basis(element))
        vadd(out, alg.act_element(dq_dual.on_basis(element)), -ONE)
        vadd(out, alg.d(alg.act(z, inputs)), -ONE)
        return out

    return LinearOp(on_basis, -1, "leibniz")


def _qalgebra_elements(alg: QAlgebra) -> Iterator[Key]:
    for z in alg.acting_keys():
        for inputs in alg.inputs(alg.coperad.arity_of(z)):
            yield ("E", z, inputs)


def _qalgebra_derivation_failure(alg: QAlgebra) -> str | None:
    residual = leibniz_residual(alg)
    for element in _qalgebra_elements(alg):
        value = residual.on_basis(element)
        if value:
            return f"Leibniz residual on {element!r}: {describe(value)}"
    return None


def curvature_residual(alg: QAlgebra) -> LinearOp:
    """d² + a∘Λ^θ on Λ."""
    q = alg.coperad
    curved = [(z, q.theta(z)) for z in alg.acting_keys(1) if q.theta(z)]

    def on_basis(key: Key) -> Vec:
        out = alg.d(alg.d.on_basis(key))
        for z, theta in curved:
            vadd(out, alg.act(z, (key,)), theta)
        return out

    return LinearOp(on_basis, -2, "curvature")


def _qalgebra_curvature_failure(alg: QAlgebra) -> str | None:
    residual = curvature_residual(alg)
    for key in alg.carrier.keys():
        value = residual.on_basis(key)
        if value:
            return f"d² + a∘Λ^θ on {key!r}: {describe(value)}"
    return None


def validate_qalgebra(alg: QAlgebra) -> Report:
    logger.info(f"validating {alg!r}", tag="validate")
    report = Report(f"algebra {alg.name}")
    report.add("unit", _qalgebra_unit_failure(alg))
    report.add("associativity", _qalgebra_associativity_failure(alg))
    report.add("derivation", _qalgebra_derivation_failure(alg))
    report.add("curvature", _qalgebra_curvature_failure(alg))
    return report


def validate_tower(tower: AlgebraTower) -> Report:
    report = Report(f"tower {tower.name}")
    for n, alg in enumerate(tower.levels):
        report.extend(validate_qalgebra(alg), f"level{n}")
    for n, r in enumerate(tower.transitions):
        source, target = tower.levels[n + 1], tower.levels[n]
        failure = None
        for key in source.carrier.keys():
            lhs = r(source.d.on_basis(key))
            rhs = target.d(r.on_basis(key))
            diff = _mismatch(lhs, rhs)
            if diff:
                failure = f"transition {n + 1}→{n} does not commute with d on {key!r}"
                break
        report.add(f"transition{n}", failure)
    return report


def extend_derivation_Qalg(tower: AlgebraTower, f: Callable[[Key], Mapping[Key, Rational]],
                           degree: int = -1) -> AlgebraTower:
    """d_f = −X^{d_Q} + a∘Σ(i, f)^Q on every level of a free tower; d_f∘i = f."""
    if tower.generators is None:
        raise ShapeMismatchError(f"{tower.name} is not a free tower")
    x = tower.generators.space
    q = tower.top.coperad
    x_cot = KeyedCotensor(x.degree_of, q)
    for key in x.keys():
        for element, c in f(key).items():
            if c and x_cot.degree(element) != x.degree_of(key) + degree:
                raise ShapeMismatchError(
                    f"generator value {element!r} on {key!r} has degree {x_cot.degree(element)}, "
                    f"expected {x.degree_of(key) + degree}"
                )
    unit = q.unit
    include = LinearOp(lambda key: {("E", unit, (key,)): ONE}, 0, "i")
    ds = []
    for alg in tower.levels:
        carrier = alg.carrier
        f_level = LinearOp(lambda key, carrier=carrier: {e: c for e, c in f(key).items() if e in carrier},
                           degree, "f")
        shuffle = x_cot.shuffle(include, f_level)
        dq_dual = x_cot.contra(q.d, q.keys())

        def on_basis(element: Key, alg=alg, shuffle=shuffle, dq_dual=dq_dual) -> Vec:
            out = {k: -c for k, c in dq_dual.on_basis(element).items() if k in alg.carrier}
            vadd(out, alg.act_element(shuffle.on_basis(element)))
            return out

        ds.append(LinearOp(on_basis, degree, f"d_f[{alg.level}]"))
    result = tower.with_derivations(ds)
    result.generator_values = f
    return result


def restrict_derivation_Qalg(tower: AlgebraTower, level: int | None = None) -> Dict[Key, Vec]:
    """d∘i on the generators, at the top level by default."""
    alg = tower.levels[-1 if level is None else level]
    unit = alg.coperad.unit
    return {key: dict(alg.d.on_basis(("E", unit, (key,)))) for key in tower.generators.space.keys()}


def check_square_zero_Qalg(tower: AlgebraTower, f: Callable[[Key], Mapping[Key, Rational]]) -> Report:
    """Per level: d_f∘f + X^θ, d_f² + a∘Λ^θ, and whether they vanish together."""
    x = tower.generators.space
    report = Report(f"square zero {tower.name}")
    for alg in tower.levels:
        q = alg.coperad
        curved = [(z, q.theta(z)) for z in alg.acting_keys(1) if q.theta(z)]
        generator_failure = None
        for key in x.keys():
            value = alg.d({e: c for e, c in f(key).items() if e in alg.carrier})
            for z, theta in curved:
                vadd(value, {("E", z, (key,)): ONE}, theta)
            value = {k: c for k, c in value.items() if k in alg.carrier}
            if value:
                generator_failure = f"d_f∘f + X^θ on {key!r}: {describe(value)}"
                break
        square_failure = _qalgebra_curvature_failure(alg)
        n = alg.level
        report.add(f"level{n}.generator", generator_failure)
        report.add(f"level{n}.square", square_failure)
        together = (generator_failure is None) == (square_failure is None)
        report.add(f"level{n}.equivalence", None if together else "the two criteria disagree")
    return report


# cogebras over an operad


class CogebraOverOperad:
    """V with a coaction a : V → V^P (keys ("E", p, word)) and a coderivation d_V."""

    def __init__(
        self,
        operad: Operad,
        carrier: GradedSpace,
        coaction: Callable[[Key], Mapping[Key, Rational]],
        differential: LinearOp | None = None,
        name: str = "V",
        key_weight: Callable[[Key], int] | None = None,
    ):
        self.operad = operad
        self.carrier = carrier
        self._coaction = coaction
        self._cache: Dict[Key, Vec] = {}
        self.d = differential or LinearOp.zero(-1)
        self.name = name
        self.key_weight = key_weight or (lambda key: 0)
        self.cotensor = KeyedCotensor(carrier.degree_of, operad, self.key_weight)

    def __repr__(self) -> str:
        return f"CogebraOverOperad({self.name}, {self.carrier.dims})"

    def coaction(self, v: Key) -> Vec:
        cached = self._cache.get(v)
        if cached is None:
            cached = {k: c for k, c in self._coaction(v).items() if c}
            self._cache[v] = cached
        return cached

    def with_coderivation(self, d: LinearOp) -> "CogebraOverOperad":
        clone = CogebraOverOperad.__new__(CogebraOverOperad)
        clone.__dict__.update(self.__dict__)
        clone.d = d
        return clone

    def complex(self) -> ChainComplex:
        return ChainComplex(self.carrier, self.d.materialize(self.carrier, self.carrier), check=False)


def _outer(v: CogebraOverOperad) -> KeyedCotensor:
    """(V^P)^P, its letters being the keys of V^P."""
    inner = v.cotensor
    return KeyedCotensor(inner.degree, v.operad, inner.weight, inner.arity)


def _cogebra_operad_counit_failure(v: CogebraOverOperad) -> str | None:
    unit = v.operad.unit
    for key in v.carrier.keys():
        value = {word[0]: c for (_, p, word), c in v.coaction(key).items() if p == unit}
        if value != {key: ONE}:
            return f"counit component of a({key!r}) is {describe(value)}"
    return None


def _cogebra_operad_coassociativity_failure(v: CogebraOverOperad) -> str | None:
    p = v.operad
    inner = v.cotensor
    lax = _outer(v).lax(inner)
    for key in v.carrier.keys():
        lhs: Vec = {}
        rhs: Vec = {}
        for (_, y, word), c in v.coaction(key).items():
            for phis, c2 in tensor_vectors([v.coaction(letter) for letter in word]).items():
                vadd(lhs, lax.on_basis(("E", y, phis)), c * c2)
            for composite, c2 in p.m_transpose(y).items():
                vadd(rhs, {("E", composite, word): ONE}, c * c2)
        diff = _mismatch(lhs, rhs)
        if diff:
            return f"l∘a^P∘a ≠ V^m∘a on {key!r}: {describe(diff)}"
    return None


def coderivation_residual(v: CogebraOverOperad) -> LinearOp:
    """a∘d − (Σ(Id,d)^P − V^{d_P})∘a, valued in V^P."""
    p = v.operad
    shuffle = v.cotensor.shuffle(LinearOp.identity(), v.d)
    dp_dual = v.cotensor.contra(p.d, p.keys())

    def on_basis(key: Key) -> Vec:
        out: Vec = {}
        for dv, c in v.d.on_basis(key).items():
            vadd(out, v.coaction(dv), c)
        image = v.coaction(key)
        vadd(out, shuffle(image), -ONE)
        vadd(out, dp_dual(image), ONE)
        return out

    return LinearOp(on_basis, -1, "coleibniz")


def _cogebra_operad_coderivation_failure(v: CogebraOverOperad) -> str | None:
    residual = coderivation_residual(v)
    for key in v.carrier.keys():
        value = residual.on_basis(key)
        if value:
            return f"co-Leibniz residual on {key!r}: {describe(value)}"
    return None


def validate_cogebra_operad(v: CogebraOverOperad) -> Report:
    logger.info(f"validating {v!r}", tag="validate")
    report = Report(f"cogebra {v.name}")
    report.add("counit", _cogebra_operad_counit_failure(v))
    report.add("coassociativity", _cogebra_operad_coassociativity_failure(v))
    report.add("coderivation", _cogebra_operad_coderivation_failure(v))
    report.add("square_zero", _square_zero_failure(v.d, v.carrier.keys(), v.carrier.__contains__))
    return report


def free_cogebra_operad(
    p: Operad,
    x: ChainComplex,
    t: Truncation | None = None,
    x_weight: Callable[[Key], int] | None = None,
) -> CogebraOverOperad:
    """L^P X = L₁^P X: the elements of X^P whose image under X^m lifts along l(P,P,X).

    The coaction is l⁻¹∘X^m; the coderivation is the one induced by d_X.
    """
    t = t or p.truncation
    cot = KeyedCotensor(x.space.degree_of, p, x_weight)
    keys = cot.keys(x.space.keys(), t)
    t.check_cells(len(keys), f"X^{p.name}")
    ambient = GradedSpace.from_keys(keys, cot.degree)
    outer = KeyedCotensor(cot.degree, p, cot.weight, cot.arity)
    nested = outer.keys(keys, t)
    lax = outer.lax(cot)

    composites: Dict[Key, None] = {}
    for key in keys:
        _, y, word = key
        for composite in p.m_transpose(y):
            composites[("E", composite, word)] = None
    lifted = [lax.on_basis(key) for key in nested]
    for vec in lifted:
        for key in vec:
            composites[key] = None
    composite_degree = {}
    for key in composites:
        _, (y, tops), word = key
        composite_degree[key] = sum(x.space.degree_of(k) for k in word) - p.degree_of(y) - sum(
            p.degree_of(top) for top in tops)
    target = GradedSpace.from_keys(list(composites), composite_degree.__getitem__)

    def x_m(key: Key) -> Vec:
        _, y, word = key
        return {("E", composite, word): c for composite, c in p.m_transpose(y).items()}

    x_m_map = GradedMap.from_function(ambient, target, 0, x_m)
    image = GradedSubspace.span(target, lifted)
    fibre = preimage(x_m_map, image)
    if fibre != GradedSubspace.full(ambient):
        raise TruncationError(f"L^{p.name} X is not spanned by basis elements at this truncation")
    lax_inverse = outer.lax_inverse(cot)

    def coaction(key: Key) -> Vec:
        out: Vec = {}
        for composite_key, c in x_m(key).items():
            vadd(out, lax_inverse.on_basis(composite_key), c)
        return out

    lp = CogebraOverOperad(p, ambient, coaction, name=f"L^{p.name}X", key_weight=cot.weight)
    lp.generators = x
    lp.generator_cotensor = cot
    lp.fibre_dims = fibre.dims
    lp.nested_keys = nested
    unit = p.unit

    def generator(key: Key) -> Vec:
        _, y, word = key
        return dict(x.differential(word[0])) if y == unit else {}

    lp = extend_coderivation_Pcog(lp, generator)
    logger.info(f"L^{p.name}X: dims {ambient.dims}", tag="cogebra")
    return lp


def projection(lp: CogebraOverOperad) -> LinearOp:
    """π : L^P X → X, the component along η."""
    unit = lp.operad.unit
    return LinearOp(lambda key: {key[2][0]: ONE} if key[1] == unit else {}, 0, "π")


def _generator_cotensor(lp: CogebraOverOperad) -> KeyedCotensor:
    """X^P for the generators X of a free cogebra; L^P X sits inside it."""
    cot = getattr(lp, "generator_cotensor", None)
    if cot is None:
        x = getattr(lp, "generators", None)
        if x is None:
            raise ShapeMismatchError(f"{lp.name} is not a free cogebra")
        cot = KeyedCotensor(x.space.degree_of, lp.operad)
    return cot


def lax_is_injective(lp: CogebraOverOperad) -> bool:
    """Rank check of l(P,P,X) on (L^P X)^P."""
    cot = _generator_cotensor(lp)
    outer = KeyedCotensor(cot.degree, lp.operad, cot.weight, cot.arity)
    nested = getattr(lp, "nested_keys", None)
    if nested is None:
        carrier = lp.carrier
        nested = [key for key in outer.keys(carrier.keys(), lp.operad.truncation)
                  if all(letter in carrier for letter in key[2])]
    source = GradedSpace.from_keys(nested, outer.degree)
    lax = outer.lax(cot)
    images = {key: lax.on_basis(key) for key in nested}
    target_keys = {k for vec in images.values() for k in vec}
    degree_of = {}
    for key in nested:
        for k in images[key]:
            degree_of[k] = outer.degree(key)
    target = GradedSpace.from_keys(list(target_keys), degree_of.__getitem__)
    m = GradedMap.from_function(source, target, 0, images.__getitem__)
    return all(rank(m.block(d)) == source.dim(d) for d in source.degrees())


def extend_coderivation_Pcog(lp: CogebraOverOperad, f: Callable[[Key], Mapping[Key, Rational]],
                             degree: int = -1) -> CogebraOverOperad:
    """d_f = −X^{d_P} + Σ(π, f)^P∘a on a free P-cogebra; π∘d_f = f."""
    x = getattr(lp, "generators", None)
    if x is None:
        raise ShapeMismatchError(f"{lp.name} is not a free cogebra")
    p = lp.operad
    for key in lp.carrier.keys():
        for k, c in f(key).items():
            if c and x.space.degree_of(k) != lp.carrier.degree_of(key) + degree:
                raise ShapeMismatchError(
                    f"value {k!r} on {key!r} has degree {x.space.degree_of(k)}, "
                    f"expected {lp.carrier.degree_of(key) + degree}"
                )
    f_op = LinearOp(f, degree, "f")
    shuffle = lp.cotensor.shuffle(projection(lp), f_op)
    dp_dual = _generator_cotensor(lp).contra(p.d, p.keys())
    carrier = lp.carrier

    def on_basis(key: Key) -> Vec:
        out = {k: -c for k, c in dp_dual.on_basis(key).items() if k in carrier}
        for nested, c in lp.coaction(key).items():
            vadd(out, {k: v for k, v in shuffle.on_basis(nested).items() if k in carrier}, c)
        return out

    result = lp.with_coderivation(LinearOp(on_basis, degree, f"d_f({lp.name})"))
    result.generator_values = f
    return result


def restrict_coderivation_Pcog(lp: CogebraOverOperad) -> Dict[Key, Vec]:
    """π∘d on every basis element."""
    pi = projection(lp)
    return {key: pi(lp.d.on_basis(key)) for key in lp.carrier.keys()}


def check_square_zero_Pcog(lp: CogebraOverOperad, f: Callable[[Key], Mapping[Key, Rational]]) -> Report:
    """f∘d_f and d_f², and whether they vanish together."""
    report = Report(f"square zero {lp.name}")
    generator_failure = None
    for key in lp.carrier.keys():
        value: Vec = {}
        for k, c in lp.d.on_basis(key).items():
            vadd(value, f(k), c)
        if value:
            generator_failure = f"f∘d_f on {key!r}: {describe(value)}"
            break
    square_failure = _square_zero_failure(lp.d, lp.carrier.keys(), lp.carrier.__contains__)
    report.add("generator", generator_failure)
    report.add("square", square_failure)
    together = (generator_failure is None) == (square_failure is None)
    report.add("equivalence", None if together else "the two criteria disagree")
    return report


# morphisms


def _word_image(f: GradedMap, word: Sequence[Key]) -> Vec:
    return tensor_vectors([f(letter) for letter in word])


def _check_degree_zero(f: GradedMap):
    if f.degree:
        raise ShapeMismatchError(f"a morphism has degree 0, got {f.degree}")


def cogebra_morphism_report(f: GradedMap, v: CogebraOverOperad, w: CogebraOverOperad) -> Report:
    """a_W∘f = f^P∘a_V and f∘d_V = d_W∘f."""
    _check_degree_zero(f)
    report = Report(f"morphism {v.name} → {w.name}")
    coaction_failure = None
    differential_failure = None
    for key in v.carrier.keys():
        lhs: Vec = {}
        for k, c in f(key).items():
            vadd(lhs, w.coaction(k), c)
        rhs: Vec = {}
        for (_, y, word), c in v.coaction(key).items():
            for image, c2 in _word_image(f, word).items():
                vadd(rhs, {("E", y, image): ONE}, c * c2)
        diff = _mismatch(lhs, rhs)
        if diff and coaction_failure is None:
            coaction_failure = f"coaction square fails on {key!r}: {describe(diff)}"
        diff = _mismatch(f.apply(v.d.on_basis(key)), w.d(f(key)))
        if diff and differential_failure is None:
            differential_failure = f"f∘d ≠ d∘f on {key!r}: {describe(diff)}"
    report.add("coaction", coaction_failure)
    report.add("differential", differential_failure)
    return report


def algebra_morphism_report(f: GradedMap, lam: QAlgebra, gam: QAlgebra) -> Report:
    """f∘a_Λ = a_Γ∘f^Q and f∘d_Λ = d_Γ∘f."""
    _check_degree_zero(f)
    report = Report(f"morphism {lam.name} → {gam.name}")
    failure = None
    for z in lam.acting_keys():
        for inputs in lam.inputs(lam.coperad.arity_of(z)):
            rhs: Vec = {}
            for word, c in _word_image(f, inputs).items():
                vadd(rhs, gam.act(z, word), c)
            diff = _mismatch(f.apply(lam.act(z, inputs)), rhs)
            if diff:
                failure = f"action square fails on ({z!r}; {inputs!r}): {describe(diff)}"
                break
        if failure:
            break
    report.add("action", failure)
    failure = None
    for key in lam.carrier.keys():
        diff = _mismatch(f.apply(lam.d.on_basis(key)), gam.d(f(key)))
        if diff:
            failure = f"f∘d ≠ d∘f on {key!r}: {describe(diff)}"
            break
    report.add("derivation", failure)
    return report
