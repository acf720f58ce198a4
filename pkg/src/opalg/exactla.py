"""
Exact field arithmetic and sparse linear algebra.

Scalars are ``fractions.Fraction`` over the rationals and elements of sympy's ``GF(p)``
over a prime field. Vectors are plain dicts ``key -> scalar`` that never store zeros;
matrices are column-sparse and hand their eliminations to sympy's ``DomainMatrix`` in its
sparse format, converting entries through :meth:`Field.to_domain`.
"""

from __future__ import annotations

import numbers
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any

from sympy import GF, QQ, isprime
from sympy.polys.domains import Domain
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from .exceptions import DimensionMismatchError, FieldArithmeticError, ValidationError

Scalar = Any  # Fraction over Q, an element of GF(p) otherwise
Vector = dict[Any, Scalar]


@lru_cache(maxsize=None)
def _domain(characteristic: int) -> Domain:
    return QQ if characteristic == 0 else GF(characteristic, symmetric=False)


@dataclass(frozen=True)
class Field:
    """The coefficient field: characteristic 0 is Q, otherwise F_p."""

    characteristic: int = 0

    def __post_init__(self):
        if self.characteristic != 0 and not isprime(self.characteristic):
            raise ValidationError(
                f"Field characteristic must be 0 or a prime, got {self.characteristic}",
                field="field",
                value=str(self.characteristic),
                expected_format="q or f<p> with p prime",
            )

    @classmethod
    def from_spec(cls, spec: str) -> Field:
        """Parse ``q`` or ``f<p>`` (case-insensitive)."""
        text = spec.strip().lower()
        if text in ("q", "qq", "0"):
            return cls(0)
        if text.startswith("f") and text[1:].isdigit():
            return cls(int(text[1:]))
        raise ValidationError(
            f"Unknown field spec: {spec}", field="field", value=spec, expected_format="q or f<p>"
        )

    @property
    def name(self) -> str:
        return "Q" if self.characteristic == 0 else f"F{self.characteristic}"

    @property
    def spec(self) -> str:
        return self.name.lower()

    @property
    def domain(self) -> Domain:
        """The sympy domain eliminations run over."""
        return _domain(self.characteristic)

    def __call__(self, value: Any) -> Scalar:
        """Coerce ints, Fractions, elements of this field or ``n/d`` strings into it."""
        p = self.characteristic
        if isinstance(value, str):
            return self.parse(value)
        if p and isinstance(value, self.domain.tp):
            return value
        if not isinstance(value, numbers.Rational):
            raise FieldArithmeticError(f"Cannot coerce {value!r} into {self.name}", characteristic=p or None)
        q = Fraction(value.numerator, value.denominator)
        if p == 0:
            return q
        if q.denominator % p == 0:
            raise FieldArithmeticError(
                f"{q} has no image in F{p}: denominator divisible by {p}", characteristic=p
            )
        k = self.domain
        return k(q.numerator) / k(q.denominator)

    @property
    def zero(self) -> Scalar:
        return self(0)

    @property
    def one(self) -> Scalar:
        return self(1)

    def inverse(self, c: Scalar) -> Scalar:
        if not c:
            raise FieldArithmeticError(
                f"Division by zero in {self.name}", characteristic=self.characteristic or None
            )
        return self.one / c

    def to_domain(self, c: Scalar) -> Any:
        if self.characteristic:
            return c
        return QQ(c.numerator, c.denominator)

    def from_domain(self, x: Any) -> Scalar:
        if self.characteristic:
            return x
        return Fraction(int(QQ.numer(x)), int(QQ.denom(x)))

    def divides_group_order(self, order: int) -> bool:
        """True when the characteristic divides ``order`` (averaging impossible)."""
        return self.characteristic != 0 and order % self.characteristic == 0

    def format(self, c: Scalar) -> str:
        """Serialize as ``+n/d`` in lowest terms with an explicit sign."""
        if self.characteristic:
            return f"+{int(c) % self.characteristic}/1"
        q = Fraction(c)
        sign = "-" if q < 0 else "+"
        return f"{sign}{abs(q.numerator)}/{q.denominator}"

    def parse(self, text: str) -> Scalar:
        """Inverse of :meth:`format`; also accepts plain integers and fractions."""
        try:
            q = Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValidationError(
                f"Not a rational number: {text!r}", field="scalar", expected_format="+n/d"
            ) from e
        return self(q)


# -- sparse vectors -------------------------------------------------------------------------


def accumulate(vec: dict, key: Hashable, c: Scalar) -> None:
    """``vec[key] += c`` keeping the dict zero-free."""
    new = vec[key] + c if key in vec else c
    if new:
        vec[key] = new
    else:
        vec.pop(key, None)


def axpy(target: dict, a: Scalar | int, source: Mapping) -> dict:
    """``target += a * source`` in place; returns target."""
    if not a:
        return target
    for key, c in source.items():
        accumulate(target, key, a * c)
    return target


def scaled(vec: Mapping, a: Scalar | int) -> dict:
    if not a:
        return {}
    return {k: a * c for k, c in vec.items()}


def add_vectors(*vectors: Mapping) -> dict:
    out: dict = {}
    for vec in vectors:
        axpy(out, 1, vec)
    return out


# -- matrices -------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Matrix:
    """Column-sparse matrix; ``columns[j]`` maps row index to a nonzero scalar."""

    field: Field
    rows: int
    cols: int
    columns: tuple[dict[int, Scalar], ...]

    def __post_init__(self):
        if len(self.columns) != self.cols:
            raise DimensionMismatchError(
                f"Matrix declares {self.cols} columns but has {len(self.columns)}",
                expected=self.cols,
                actual=len(self.columns),
            )
        for j, column in enumerate(self.columns):
            for i, c in column.items():
                if not 0 <= i < self.rows:
                    raise DimensionMismatchError(
                        f"Row index {i} out of range in column {j} of a {self.rows}-row matrix"
                    )
                if not c:
                    raise ValidationError(f"Stored zero at ({i}, {j})", field="matrix")

    @classmethod
    def from_columns(cls, field: Field, rows: int, columns: Iterable[Mapping[int, Any]]) -> Matrix:
        cleaned = tuple({i: field(c) for i, c in col.items() if c} for col in columns)
        return cls(field, rows, len(cleaned), cleaned)

    @classmethod
    def from_dense(cls, field: Field, data: Sequence[Sequence[Any]], cols: int | None = None):
        rows = len(data)
        ncols = len(data[0]) if rows else (cols or 0)
        columns = []
        for j in range(ncols):
            columns.append({i: field(data[i][j]) for i in range(rows) if data[i][j]})
        return cls(field, rows, ncols, tuple(columns))

    @classmethod
    def from_entries(cls, field: Field, rows: int, cols: int, entries: Mapping[tuple[int, int], Any]):
        columns: list[dict] = [{} for _ in range(cols)]
        for (i, j), c in entries.items():
            value = field(c)
            if value:
                columns[j][i] = value
        return cls(field, rows, cols, tuple(columns))

    @classmethod
    def from_domain_matrix(cls, field: Field, dm: DomainMatrix) -> Matrix:
        rows, cols = dm.shape
        columns: list[dict] = [{} for _ in range(cols)]
        for i, row in dm.to_dod().items():
            for j, x in row.items():
                columns[j][i] = field.from_domain(x)
        return cls(field, rows, cols, tuple(columns))

    @classmethod
    def zero(cls, field: Field, rows: int, cols: int) -> Matrix:
        return cls(field, rows, cols, tuple({} for _ in range(cols)))

    @classmethod
    def identity(cls, field: Field, n: int) -> Matrix:
        return cls(field, n, n, tuple({j: field.one} for j in range(n)))

    def to_domain_matrix(self) -> DomainMatrix:
        f = self.field
        dod: dict[int, dict[int, Any]] = {}
        for j, col in enumerate(self.columns):
            for i, c in col.items():
                dod.setdefault(i, {})[j] = f.to_domain(c)
        return DomainMatrix(dod, (self.rows, self.cols), f.domain)

    @property
    def entries(self) -> dict[tuple[int, int], Scalar]:
        return {(i, j): c for j, col in enumerate(self.columns) for i, c in col.items()}

    def column(self, j: int) -> dict[int, Scalar]:
        return self.columns[j]

    def apply(self, vec: Mapping[int, Any]) -> dict[int, Scalar]:
        """Image of a sparse column vector."""
        out: dict[int, Scalar] = {}
        for j, c in vec.items():
            if not 0 <= j < self.cols:
                raise DimensionMismatchError(
                    f"Index {j} outside a {self.cols}-column matrix", expected=self.cols
                )
            axpy(out, c, self.columns[j])
        return out

    def matmul(self, other: Matrix) -> Matrix:
        if self.cols != other.rows:
            raise DimensionMismatchError(
                f"Cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}",
                expected=self.cols,
                actual=other.rows,
            )
        if not (self.rows and self.cols and other.cols):
            return Matrix.zero(self.field, self.rows, other.cols)
        return Matrix.from_domain_matrix(self.field, self.to_domain_matrix() * other.to_domain_matrix())

    __matmul__ = matmul

    def transpose(self) -> Matrix:
        if not (self.rows and self.cols):
            return Matrix.zero(self.field, self.cols, self.rows)
        return Matrix.from_domain_matrix(self.field, self.to_domain_matrix().transpose())

    def _check_same_shape(self, other: Matrix) -> None:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatchError(
                f"Shape mismatch: {self.rows}x{self.cols} vs {other.rows}x{other.cols}"
            )

    def __add__(self, other: Matrix) -> Matrix:
        self._check_same_shape(other)
        cols = tuple(add_vectors(a, b) for a, b in zip(self.columns, other.columns, strict=True))
        return Matrix(self.field, self.rows, self.cols, cols)

    def __sub__(self, other: Matrix) -> Matrix:
        return self + other.scale(-1)

    def scale(self, a: Any) -> Matrix:
        a = self.field(a)
        return Matrix(self.field, self.rows, self.cols, tuple(scaled(c, a) for c in self.columns))

    def is_zero(self) -> bool:
        return not any(self.columns)

    def to_dense(self) -> list[list[Scalar]]:
        dense = [[self.field.zero] * self.cols for _ in range(self.rows)]
        for j, col in enumerate(self.columns):
            for i, c in col.items():
                dense[i][j] = c
        return dense

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and all(
            a == b for a, b in zip(self.columns, other.columns, strict=True)
        )

    def __repr__(self):
        return f"Matrix({self.field.name}, {self.rows}x{self.cols}, nnz={len(self.entries)})"


# -- elimination ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RrefResult:
    rank: int
    kernel_basis: list[dict[int, Scalar]]
    image_basis: list[dict[int, Scalar]]
    pivots: tuple[int, ...]


def rref(m: Matrix) -> RrefResult:
    """Rank, kernel basis and column-space basis of ``m`` from its reduced row echelon form."""
    if not m.rows or not m.cols:
        kernel = [{j: m.field.one} for j in range(m.cols)]
        return RrefResult(0, kernel, [], ())
    reduced, pivots = m.to_domain_matrix().rref()
    null = reduced.nullspace_from_rref(pivots)
    kernel = [
        {j: m.field.from_domain(x) for j, x in row.items()} for _, row in sorted(null.to_dod().items())
    ]
    image = [dict(m.columns[c]) for c in pivots]
    return RrefResult(len(pivots), kernel, image, tuple(pivots))


def rank(m: Matrix) -> int:
    if not m.rows or not m.cols:
        return 0
    return m.to_domain_matrix().rank()


def _as_sparse(field: Field, b: Mapping[int, Any] | Sequence[Any], length: int) -> dict[int, Scalar]:
    if isinstance(b, Mapping):
        out = {i: field(c) for i, c in b.items() if c}
        if any(not 0 <= i < length for i in out):
            raise DimensionMismatchError(f"Right-hand side has an index outside 0..{length - 1}")
        return out
    if len(b) != length:
        raise DimensionMismatchError(
            f"Right-hand side has length {len(b)}, expected {length}",
            expected=length,
            actual=len(b),
        )
    return {i: field(c) for i, c in enumerate(b) if c}


def solve(m: Matrix, b: Mapping[int, Any] | Sequence[Any]) -> dict[int, Scalar] | None:
    """A solution of ``m x = b`` or None when ``b`` is not in the column space."""
    return ColumnSolver(m).solve(b)


def inverse(m: Matrix) -> Matrix:
    """Inverse of a square nonsingular matrix."""
    if m.rows != m.cols:
        raise DimensionMismatchError(f"Cannot invert a {m.rows}x{m.cols} matrix")
    if not m.rows:
        return m
    try:
        return Matrix.from_domain_matrix(m.field, m.to_domain_matrix().inv())
    except DMNonInvertibleMatrixError as e:
        raise FieldArithmeticError("Matrix is singular") from e


class ColumnSolver:
    """
    Repeated solves of ``m x = b`` against a fixed matrix.

    ``[m | 1]`` is brought to reduced echelon form once; its right block E satisfies
    ``E m = R``, so ``b`` lies in the column space exactly when ``E b`` vanishes below the
    rank, and then ``E b`` read off on the pivot columns is a solution.
    """

    def __init__(self, m: Matrix):
        self.matrix = m
        f = m.field
        self._pivots: tuple[int, ...] = ()
        self._transform: list[dict[int, Scalar]] = []
        if m.rows:
            eye = DomainMatrix.eye(m.rows, f.domain).to_sparse()
            reduced, pivots = m.to_domain_matrix().hstack(eye).rref()
            self._pivots = tuple(p for p in pivots if p < m.cols)
            dod = reduced.to_dod()
            self._transform = [
                {j - m.cols: f.from_domain(x) for j, x in dod.get(i, {}).items() if j >= m.cols}
                for i in range(m.rows)
            ]

    @property
    def rank(self) -> int:
        return len(self._pivots)

    def solve(self, b: Mapping[int, Any] | Sequence[Any]) -> dict[int, Scalar] | None:
        rhs = _as_sparse(self.matrix.field, b, self.matrix.rows)
        y: dict[int, Scalar] = {}
        for i, row in enumerate(self._transform):
            c = sum((v * rhs[k] for k, v in row.items() if k in rhs), self.matrix.field.zero)
            if c:
                y[i] = c
        if any(i >= self.rank for i in y):
            return None
        return {self._pivots[i]: c for i, c in y.items()}


class Subspace:
    """
    Incrementally built subspace of a sparse coordinate space.

    Rows are kept in reduced echelon form keyed by their least key, normalized to 1 there,
    and no row has support on another row's pivot. The residual of :meth:`normal_form` is
    therefore the unique representative modulo the span with no support on pivot keys, so it
    is independent of insertion order. When ``track`` is set, every row remembers its
    combination of the generator ids passed to :meth:`add`.
    """

    def __init__(self, field: Field, track: bool = False):
        self.field = field
        self.track = track
        self.rows: dict[Any, dict] = {}
        self.combos: dict[Any, dict] = {}

    @classmethod
    def spanned_by(cls, field: Field, vectors: Sequence[Mapping]) -> Subspace:
        """The span of ``vectors`` in one reduction, with pivots in key order."""
        space = cls(field)
        keys = sorted({k for v in vectors for k, c in v.items() if c})
        if not keys:
            return space
        index = {k: j for j, k in enumerate(keys)}
        dod = {i: {index[k]: field.to_domain(c) for k, c in v.items() if c} for i, v in enumerate(vectors)}
        reduced, pivots = DomainMatrix(dod, (len(vectors), len(keys)), field.domain).rref()
        for i, row in reduced.to_dod().items():
            space.rows[keys[pivots[i]]] = {keys[j]: field.from_domain(x) for j, x in row.items()}
        return space

    def _reduce(self, vec: Mapping, combo: dict | None) -> tuple[dict, dict | None]:
        residual = {k: c for k, c in vec.items() if c}
        for key in [k for k in residual if k in self.rows]:
            c = residual.get(key)
            if not c:
                continue
            axpy(residual, -c, self.rows[key])
            if combo is not None:
                axpy(combo, -c, self.combos[key])
        return residual, combo

    def normal_form(self, vec: Mapping) -> dict:
        return self._reduce(vec, None)[0]

    reduce = normal_form

    def contains(self, vec: Mapping) -> bool:
        return not self.normal_form(vec)

    def add(self, vec: Mapping, gen_id: Hashable | None = None) -> bool:
        """Add ``vec`` to the span; returns True when the dimension grew."""
        combo = {gen_id: self.field.one} if self.track else None
        residual, combo = self._reduce(vec, combo)
        if not residual:
            return False
        pivot = min(residual)
        inv = self.field.inverse(residual[pivot])
        row = scaled(residual, inv)
        combo = scaled(combo, inv) if combo is not None else None
        touched = [(key, other[pivot]) for key, other in self.rows.items() if pivot in other]
        for key, c in touched:
            self.rows[key] = axpy(dict(self.rows[key]), -c, row)
            if combo is not None:
                self.combos[key] = axpy(dict(self.combos[key]), -c, combo)
        self.rows[pivot] = row
        if combo is not None:
            self.combos[pivot] = combo
        return True

    def express(self, vec: Mapping) -> dict | None:
        """Coefficients over generator ids summing to ``vec``, or None if not in the span."""
        if not self.track:
            raise ValidationError("express() needs a tracking Subspace", field="subspace")
        residual, expr = self._reduce(vec, {})
        if residual:
            return None
        return scaled(expr, -1)

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> list:
        return sorted(self.rows)

    def basis(self) -> list[dict]:
        return [self.rows[k] for k in self.pivots]

    def complement(self, ambient: Iterable) -> list:
        """Ambient keys that are not pivots; their unit vectors span a complement."""
        return [k for k in ambient if k not in self.rows]

    def copy(self) -> Subspace:
        other = Subspace(self.field, self.track)
        other.rows = {k: dict(v) for k, v in self.rows.items()}
        other.combos = {k: dict(v) for k, v in self.combos.items()}
        return other
