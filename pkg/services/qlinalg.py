"""
Exact sparse linear algebra over the rationals.

Matrices are stored as row-major dictionaries of nonzero entries. Products,
sums and Kronecker products are done on the dictionaries; eliminations go
through sympy's ``DomainMatrix`` over ``QQ`` using its fraction-free
Gauss-Jordan method.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from services.errors import ShapeMismatchError, ValidationError

Rational = type(QQ(1))
SparseVector = Dict[int, Rational]

ZERO = QQ(0)
ONE = QQ(1)


def to_rational(value) -> Rational:
    """Coerce ints, Fractions, strings "p/q" and QQ elements to a QQ element."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return QQ(value)
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, str):
        return parse_rational(value)
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return QQ(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {value!r} to a rational")


def parse_rational(text: str) -> Rational:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        if int(den) <= 0:
            raise ValueError(f"denominator must be positive in {text!r}")
        return QQ(int(num), int(den))
    return QQ(int(text))


def format_rational(value: Rational) -> str:
    """Canonical string: "p/q", "p" when q = 1, "-p/q" for negatives."""
    num, den = int(value.numerator), int(value.denominator)
    if den == 1:
        return str(num)
    return f"{num}/{den}"


class RationalMatrix:
    """Immutable sparse matrix over QQ with no stored zeros."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: int, cols: int, data: Mapping[int, Mapping[int, Rational]] | None = None):
        if rows < 0 or cols < 0:
            raise ShapeMismatchError(f"negative shape ({rows}, {cols})")
        self.rows = rows
        self.cols = cols
        clean: Dict[int, Dict[int, Rational]] = {}
        for i, row in (data or {}).items():
            if not 0 <= i < rows:
                raise ShapeMismatchError(f"row index {i} out of range for {rows} rows")
            kept = {}
            for j, v in row.items():
                if not 0 <= j < cols:
                    raise ShapeMismatchError(f"column index {j} out of range for {cols} columns")
                if v:
                    kept[j] = to_rational(v)
            if kept:
                clean[i] = kept
        self._data = clean

    # construction

    @classmethod
    def zero(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(n, n, {i: {i: ONE} for i in range(n)})

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Iterable[Tuple[int, int, object]]) -> "RationalMatrix":
        data: Dict[int, Dict[int, Rational]] = {}
        for i, j, v in entries:
            r = to_rational(v)
            if not r:
                continue
            row = data.setdefault(i, {})
            row[j] = row.get(j, ZERO) + r
        return cls(rows, cols, data)

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[object]], cols: int | None = None) -> "RationalMatrix":
        rows = len(dense)
        width = cols if cols is not None else (len(dense[0]) if rows else 0)
        return cls.from_entries(
            rows, width, ((i, j, v) for i, row in enumerate(dense) for j, v in enumerate(row))
        )

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence[Mapping[int, Rational]]) -> "RationalMatrix":
        return cls.from_entries(
            rows, len(columns), ((i, j, v) for j, col in enumerate(columns) for i, v in col.items())
        )

    @classmethod
    def from_domain_matrix(cls, dm: DomainMatrix) -> "RationalMatrix":
        rows, cols = dm.shape
        sdm = dm.convert_to(QQ).to_sparse().rep
        return cls(rows, cols, {i: dict(row) for i, row in sdm.items()})

    # access

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def get(self, i: int, j: int) -> Rational:
        return self._data.get(i, {}).get(j, ZERO)

    def row(self, i: int) -> Dict[int, Rational]:
        return dict(self._data.get(i, {}))

    def column(self, j: int) -> SparseVector:
        return {i: row[j] for i, row in self._data.items() if j in row}

    def columns(self) -> List[SparseVector]:
        cols: List[SparseVector] = [{} for _ in range(self.cols)]
        for i, row in self._data.items():
            for j, v in row.items():
                cols[j][i] = v
        return cols

    def entries(self) -> Iterator[Tuple[int, int, Rational]]:
        """Nonzero entries in row-major order."""
        for i in sorted(self._data):
            row = self._data[i]
            for j in sorted(row):
                yield i, j, row[j]

    def nnz(self) -> int:
        return sum(len(row) for row in self._data.values())

    def is_zero(self) -> bool:
        return not self._data

    def to_domain_matrix(self) -> DomainMatrix:
        return DomainMatrix({i: dict(row) for i, row in self._data.items()}, (self.rows, self.cols), QQ)

    # arithmetic

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(self.entries())))

    def __repr__(self) -> str:
        return f"RationalMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise ShapeMismatchError(f"cannot add {self.shape} and {other.shape}")
        data = {i: dict(row) for i, row in self._data.items()}
        for i, row in other._data.items():
            target = data.setdefault(i, {})
            for j, v in row.items():
                target[j] = target.get(j, ZERO) + v
        return RationalMatrix(self.rows, self.cols, data)

    def __neg__(self) -> "RationalMatrix":
        return self.scale(-ONE)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + (-other)

    def scale(self, c) -> "RationalMatrix":
        c = to_rational(c)
        if not c:
            return RationalMatrix.zero(self.rows, self.cols)
        return RationalMatrix(
            self.rows, self.cols, {i: {j: c * v for j, v in row.items()} for i, row in self._data.items()}
        )

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ShapeMismatchError(f"cannot multiply {self.shape} by {other.shape}")
        data: Dict[int, Dict[int, Rational]] = {}
        for i, row in self._data.items():
            acc: Dict[int, Rational] = {}
            for k, a in row.items():
                other_row = other._data.get(k)
                if not other_row:
                    continue
                for j, b in other_row.items():
                    acc[j] = acc.get(j, ZERO) + a * b
            if acc:
                data[i] = acc
        return RationalMatrix(self.rows, other.cols, data)

    def apply(self, vector: Mapping[int, Rational]) -> SparseVector:
        """Matrix times a sparse column vector."""
        out: SparseVector = {}
        for i, row in self._data.items():
            acc = ZERO
            for j, a in row.items():
                b = vector.get(j)
                if b:
                    acc += a * b
            if acc:
                out[i] = acc
        return out

    def transpose(self) -> "RationalMatrix":
        data: Dict[int, Dict[int, Rational]] = {}
        for i, row in self._data.items():
            for j, v in row.items():
                data.setdefault(j, {})[i] = v
        return RationalMatrix(self.cols, self.rows, data)

    def select_columns(self, indices: Sequence[int]) -> "RationalMatrix":
        position = {j: k for k, j in enumerate(indices)}
        return RationalMatrix.from_entries(
            self.rows,
            len(indices),
            ((i, position[j], v) for i, j, v in self.entries() if j in position),
        )

    def select_rows(self, indices: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix(
            len(indices), self.cols, {k: self._data[i] for k, i in enumerate(indices) if i in self._data}
        )

    def hstack(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.rows != other.rows:
            raise ShapeMismatchError(f"hstack row mismatch {self.rows} != {other.rows}")
        data = {i: dict(row) for i, row in self._data.items()}
        for i, row in other._data.items():
            target = data.setdefault(i, {})
            for j, v in row.items():
                target[self.cols + j] = v
        return RationalMatrix(self.rows, self.cols + other.cols, data)

    def vstack(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.cols:
            raise ShapeMismatchError(f"vstack column mismatch {self.cols} != {other.cols}")
        data = {i: dict(row) for i, row in self._data.items()}
        for i, row in other._data.items():
            data[self.rows + i] = dict(row)
        return RationalMatrix(self.rows + other.rows, self.cols, data)


def _rref(m: RationalMatrix) -> Tuple[Dict[int, Dict[int, Rational]], Tuple[int, ...]]:
    """Reduced row echelon form (as row dictionaries) and pivot columns."""
    if m.is_zero():
        return {}, ()
    reduced, pivots = m.to_domain_matrix().rref(method="FF")
    sdm = reduced.to_sparse().rep
    return {i: dict(row) for i, row in sdm.items()}, tuple(pivots)


def rank(m: RationalMatrix) -> int:
    """Dimension of the column span."""
    return len(_rref(m)[1])


class Subspace:
    """Subspace of QQ^ambient_dim spanned by the (independent) columns of ``basis``."""

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, ambient_dim: int, basis: RationalMatrix | None = None):
        if basis is None:
            basis = RationalMatrix.zero(ambient_dim, 0)
        if basis.rows != ambient_dim:
            raise ShapeMismatchError(f"basis has {basis.rows} rows, ambient is {ambient_dim}")
        self.ambient_dim = ambient_dim
        self.basis = basis

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim)

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, RationalMatrix.identity(ambient_dim))

    @classmethod
    def span(cls, ambient_dim: int, vectors: Sequence[Mapping[int, Rational]]) -> "Subspace":
        """Span of arbitrary (possibly dependent) vectors."""
        return image_basis(RationalMatrix.from_columns(ambient_dim, list(vectors)))

    @property
    def dim(self) -> int:
        return self.basis.cols

    def vectors(self) -> List[SparseVector]:
        return self.basis.columns()

    def contains_vector(self, vector: Mapping[int, Rational]) -> bool:
        if not any(vector.values()):
            return True
        extended = self.basis.hstack(RationalMatrix.from_columns(self.ambient_dim, [vector]))
        return rank(extended) == self.dim

    def contains(self, other: "Subspace") -> bool:
        if other.dim == 0:
            return True
        return rank(self.basis.hstack(other.basis)) == self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.dim == other.dim and self.contains(other)

    def sum(self, other: "Subspace") -> "Subspace":
        return image_basis(self.basis.hstack(other.basis))

    def intersection(self, other: "Subspace") -> "Subspace":
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim)
        coefficients = kernel_basis(self.basis.hstack(-other.basis))
        top = coefficients.basis.select_rows(list(range(self.dim)))
        return image_basis(self.basis @ top)

    def image_under(self, m: RationalMatrix) -> "Subspace":
        return image_basis(m @ self.basis)

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def kernel_basis(m: RationalMatrix) -> Subspace:
    """Basis of ker(m), one vector per non-pivot column of the reduced form."""
    reduced, pivots = _rref(m)
    pivot_set = set(pivots)
    columns: List[SparseVector] = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        vector: SparseVector = {free: ONE}
        for r, p in enumerate(pivots):
            entry = reduced.get(r, {}).get(free)
            if entry:
                vector[p] = -entry
        columns.append(vector)
    return Subspace(m.cols, RationalMatrix.from_columns(m.cols, columns))


def pivot_columns(m: RationalMatrix) -> Tuple[int, ...]:
    """Pivot columns of the reduced row echelon form, leftmost first."""
    return _rref(m)[1]


def image_basis(m: RationalMatrix) -> Subspace:
    """Pivot columns of m, which span its image."""
    _, pivots = _rref(m)
    return Subspace(m.rows, m.select_columns(list(pivots)))


def inverse(m: RationalMatrix) -> RationalMatrix:
    if m.rows != m.cols:
        raise ShapeMismatchError(f"cannot invert a {m.shape} matrix")
    if m.rows == 0:
        return m
    return RationalMatrix.from_domain_matrix(m.to_domain_matrix().inv())


def solve(m: RationalMatrix, rhs: Mapping[int, Rational]) -> SparseVector | None:
    """One solution x of m x = rhs (free variables set to zero), or None."""
    augmented = m.hstack(RationalMatrix.from_columns(m.rows, [rhs]))
    reduced, pivots = _rref(augmented)
    if m.cols in pivots:
        return None
    solution: SparseVector = {}
    for r, p in enumerate(pivots):
        entry = reduced.get(r, {}).get(m.cols)
        if entry:
            solution[p] = entry
    return solution


def quotient(ambient_dim: int, sub: Subspace) -> Tuple[RationalMatrix, RationalMatrix]:
    """Projection onto a complement of ``sub`` and its section, with projection∘section = id."""
    if sub.ambient_dim != ambient_dim:
        raise ShapeMismatchError(f"subspace lives in dimension {sub.ambient_dim}, not {ambient_dim}")
    if rank(sub.basis) != sub.dim:
        raise ValidationError("subspace basis columns are linearly dependent")
    extended = sub.basis.hstack(RationalMatrix.identity(ambient_dim))
    _, pivots = _rref(extended)
    complement = [p - sub.dim for p in pivots if p >= sub.dim]
    section = RationalMatrix.identity(ambient_dim).select_columns(complement)
    change = sub.basis.hstack(section)
    projection = inverse(change).select_rows(list(range(sub.dim, ambient_dim)))
    return projection, section


def kronecker(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    """a⊗b with the left factor major."""
    data: Dict[int, Dict[int, Rational]] = {}
    for i, j, x in a.entries():
        for k, l, y in b.entries():
            data.setdefault(i * b.rows + k, {})[j * b.cols + l] = x * y
    return RationalMatrix(a.rows * b.rows, a.cols * b.cols, data)


def charpoly(m: RationalMatrix) -> List[Rational]:
    """Characteristic polynomial coefficients, leading coefficient first."""
    if m.rows != m.cols:
        raise ShapeMismatchError("characteristic polynomial needs a square matrix")
    if m.rows == 0:
        return [ONE]
    return [to_rational(c) for c in m.to_domain_matrix().charpoly()]
