"""
Finitely supported cochain complexes over an exact field.

Differentials raise degree by one. A complex stores, per degree, the number of basis
elements, optional opaque labels and optional weights, and a sparse matrix for ``d``.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

from .exactla import ColumnSolver, Field, Matrix, Scalar, Subspace, axpy, rref
from .exceptions import ChainComplexError, ChainMapError, DimensionMismatchError, ValidationError
from .logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class DegreeWindow:
    """Closed degree range; the trusted part excludes both edges."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValidationError(
                f"Degree window [{self.lo}, {self.hi}] is empty",
                field="window",
                value=f"[{self.lo}, {self.hi}]",
            )

    @property
    def trusted(self) -> tuple[int, int] | None:
        lo, hi = self.lo + 1, self.hi - 1
        return (lo, hi) if lo <= hi else None

    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def trusted_degrees(self) -> range:
        t = self.trusted
        return range(t[0], t[1] + 1) if t else range(0)

    def __contains__(self, n: int) -> bool:
        return self.lo <= n <= self.hi

    @classmethod
    def covering(cls, *complexes: Complex, margin: int = 1) -> DegreeWindow:
        """A window whose trusted part contains the whole support of every complex."""
        degrees = [n for x in complexes for n in x.support]
        if not degrees:
            return cls(-margin, margin)
        return cls(min(degrees) - margin, max(degrees) + margin)


class Complex:
    """
    Graded free module with a differential.

    Args:
        field: coefficient field
        dims: degree -> number of basis elements
        differentials: degree n -> Matrix from degree n to degree n + 1
        labels: degree -> basis labels (defaults to indices)
        weights: degree -> per-basis weights, used for weight-truncated homology
        check: verify shapes and d o d = 0
    """

    def __init__(
        self,
        field: Field,
        dims: Mapping[int, int],
        differentials: Mapping[int, Matrix] | None = None,
        labels: Mapping[int, Sequence[Any]] | None = None,
        weights: Mapping[int, Sequence[int]] | None = None,
        check: bool = True,
    ):
        self.field = field
        self._dims = {n: k for n, k in dims.items() if k > 0}
        self._d = {n: m for n, m in (differentials or {}).items() if not m.is_zero()}
        self._labels = {n: tuple(labels[n]) for n in (labels or {}) if n in self._dims}
        self._weights = {n: tuple(weights[n]) for n in (weights or {}) if n in self._dims}
        self._label_index: dict[int, dict[Any, int]] = {}
        if check:
            self.validate()

    # -- structure ------------------------------------------------------------------------

    def validate(self) -> None:
        for n, m in self._d.items():
            if (m.rows, m.cols) != (self.dim(n + 1), self.dim(n)):
                raise ChainComplexError(
                    f"d in degree {n} has shape {m.rows}x{m.cols}, "
                    f"expected {self.dim(n + 1)}x{self.dim(n)}",
                    degree=n,
                )
        for n, labels in self._labels.items():
            if len(labels) != self.dim(n):
                raise DimensionMismatchError(f"{len(labels)} labels for dimension {self.dim(n)}")
        for n, weights in self._weights.items():
            if len(weights) != self.dim(n):
                raise DimensionMismatchError(f"{len(weights)} weights for dimension {self.dim(n)}")
        for n in self._d:
            if n + 1 in self._d and not (self._d[n + 1] @ self._d[n]).is_zero():
                raise ChainComplexError(f"d o d is nonzero starting in degree {n}", degree=n)

    @property
    def support(self) -> list[int]:
        return sorted(self._dims)

    def dim(self, n: int) -> int:
        return self._dims.get(n, 0)

    @property
    def total_dim(self) -> int:
        return sum(self._dims.values())

    def indices(self, n: int) -> range:
        return range(self.dim(n))

    def d(self, n: int) -> Matrix:
        m = self._d.get(n)
        return m if m is not None else Matrix.zero(self.field, self.dim(n + 1), self.dim(n))

    def apply_d(self, n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        m = self._d.get(n)
        return m.apply(vec) if m is not None else {}

    def basis_labels(self, n: int) -> tuple:
        return self._labels.get(n, tuple(range(self.dim(n))))

    def label_index(self, n: int, label: Any) -> int:
        if n not in self._label_index:
            self._label_index[n] = {lab: i for i, lab in enumerate(self.basis_labels(n))}
        return self._label_index[n][label]

    def weights(self, n: int) -> tuple[int, ...] | None:
        return self._weights.get(n)

    @property
    def has_weights(self) -> bool:
        return bool(self._weights)

    def __repr__(self):
        dims = ", ".join(f"{n}:{k}" for n, k in sorted(self._dims.items()))
        return f"Complex({self.field.name}; {dims})"

    # -- constructors ---------------------------------------------------------------------

    @classmethod
    def zero(cls, field: Field) -> Complex:
        return cls(field, {})

    @classmethod
    def point(cls, field: Field, degree: int = 0, label: Any = None, weight: int | None = None):
        """The field concentrated in one degree."""
        labels = {degree: [label]} if label is not None else None
        weights = {degree: [weight]} if weight is not None else None
        return cls(field, {degree: 1}, labels=labels, weights=weights)

    @classmethod
    def two_term(cls, field: Field, degree: int = 0) -> Complex:
        """Contractible ``k -> k`` in degrees ``degree, degree + 1``."""
        return cls(field, {degree: 1, degree + 1: 1}, {degree: Matrix.identity(field, 1)})

    @classmethod
    def from_matrices(cls, field: Field, dims: Mapping[int, int], matrices: Mapping[int, Any]):
        """Build from dense nested lists (or Matrix objects) per degree."""
        mats = {}
        for n, data in matrices.items():
            if isinstance(data, Matrix):
                mats[n] = data
            elif data and data[0]:
                mats[n] = Matrix.from_dense(field, data)
            else:
                mats[n] = Matrix.zero(field, dims.get(n + 1, 0), dims.get(n, 0))
        return cls(field, dims, mats)

    def restrict_weights(self, max_weight: int) -> Complex:
        """The quotient by basis elements of weight above ``max_weight``."""
        if not self._weights:
            return self
        keep = {n: [i for i, w in enumerate(self._weights[n]) if w <= max_weight] for n in self._dims}
        return _sub_basis_quotient(self, keep)


def _sub_basis_quotient(x: Complex, keep: Mapping[int, list[int]]) -> Complex:
    """Quotient complex spanned by the kept basis elements (others set to zero)."""
    position = {n: {old: new for new, old in enumerate(idx)} for n, idx in keep.items()}
    mats = {}
    for n in x.support:
        src = keep.get(n, [])
        tgt_pos = position.get(n + 1, {})
        cols = []
        for i in src:
            col = x.d(n).column(i)
            cols.append({tgt_pos[r]: c for r, c in col.items() if r in tgt_pos})
        mats[n] = Matrix(x.field, len(tgt_pos), len(src), tuple(cols))
    labels = {n: [x.basis_labels(n)[i] for i in idx] for n, idx in keep.items()}
    weights = {n: [x.weights(n)[i] for i in idx] for n, idx in keep.items() if x.weights(n)}
    return Complex(x.field, {n: len(idx) for n, idx in keep.items()}, mats, labels, weights)


class ChainMap:
    """
    Graded map ``source -> target`` raising degree by ``degree_shift``.

    With shift 0 it is expected to commute with differentials; other shifts are raw
    elements of the hom complex.
    """

    def __init__(
        self,
        source: Complex,
        target: Complex,
        components: Mapping[int, Matrix] | None = None,
        degree_shift: int = 0,
    ):
        self.source = source
        self.target = target
        self.degree_shift = degree_shift
        self._components = {}
        for n, m in (components or {}).items():
            if (m.rows, m.cols) != (target.dim(n + degree_shift), source.dim(n)):
                raise DimensionMismatchError(
                    f"Component in degree {n} has shape {m.rows}x{m.cols}, expected "
                    f"{target.dim(n + degree_shift)}x{source.dim(n)}"
                )
            if not m.is_zero():
                self._components[n] = m

    @property
    def field(self) -> Field:
        return self.source.field

    def component(self, n: int) -> Matrix:
        m = self._components.get(n)
        if m is not None:
            return m
        return Matrix.zero(self.field, self.target.dim(n + self.degree_shift), self.source.dim(n))

    components = component

    def apply(self, n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        m = self._components.get(n)
        return m.apply(vec) if m is not None else {}

    @classmethod
    def from_columns(cls, source: Complex, target: Complex, images: Mapping[int, Sequence[Mapping]], degree_shift: int = 0):
        """Build from per-degree lists of image vectors of the source basis."""
        comps = {}
        for n, cols in images.items():
            comps[n] = Matrix.from_columns(source.field, target.dim(n + degree_shift), cols)
        return cls(source, target, comps, degree_shift)

    @classmethod
    def identity(cls, x: Complex) -> ChainMap:
        return cls(x, x, {n: Matrix.identity(x.field, x.dim(n)) for n in x.support})

    @classmethod
    def zero(cls, source: Complex, target: Complex, degree_shift: int = 0) -> ChainMap:
        return cls(source, target, {}, degree_shift)

    def compose(self, other: ChainMap) -> ChainMap:
        """``self o other``."""
        if other.target is not self.source and other.target.support != self.source.support:
            raise DimensionMismatchError("Cannot compose maps with mismatched middle complex")
        comps = {}
        for n in other.source.support:
            mid = n + other.degree_shift
            comps[n] = self.component(mid) @ other.component(n)
        return ChainMap(other.source, self.target, comps, self.degree_shift + other.degree_shift)

    def _combine(self, other: ChainMap, sign: int) -> ChainMap:
        if other.degree_shift != self.degree_shift:
            raise DimensionMismatchError("Cannot add maps of different degree")
        comps = {n: self.component(n) + other.component(n).scale(sign) for n in self.source.support}
        return ChainMap(self.source, self.target, comps, self.degree_shift)

    def __add__(self, other: ChainMap) -> ChainMap:
        return self._combine(other, 1)

    def __sub__(self, other: ChainMap) -> ChainMap:
        return self._combine(other, -1)

    def scaled(self, a: Any) -> ChainMap:
        return ChainMap(
            self.source,
            self.target,
            {n: m.scale(a) for n, m in self._components.items()},
            self.degree_shift,
        )

    def boundary(self) -> ChainMap:
        """``D(f) = d f - (-1)^s f d`` as a map of degree ``s + 1``."""
        s = self.degree_shift
        sign = -1 if s % 2 == 0 else 1
        comps = {}
        for n in self.source.support:
            m = self.target.d(n + s) @ self.component(n)
            if self.source.dim(n + 1):
                m = m + (self.component(n + 1) @ self.source.d(n)).scale(sign)
            comps[n] = m
        return ChainMap(self.source, self.target, comps, s + 1)

    def is_chain_map(self) -> bool:
        return all(m.is_zero() for m in self.boundary()._components.values())

    def check(self) -> None:
        bad = self.boundary()
        for n, m in sorted(bad._components.items()):
            if not m.is_zero():
                raise ChainMapError(f"Map does not commute with d in degree {n}", degree=n)

    def is_zero(self) -> bool:
        return not self._components

    def ranks(self) -> dict[int, int]:
        return {n: rref(self.component(n)).rank for n in self.source.support}

    def is_injective(self) -> bool:
        return all(self.ranks().get(n, 0) == self.source.dim(n) for n in self.source.support)

    def is_surjective(self, degrees: Iterable[int] | None = None) -> bool:
        degrees = self.target.support if degrees is None else degrees
        for n in degrees:
            src = n - self.degree_shift
            if rref(self.component(src)).rank != self.target.dim(n):
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, ChainMap):
            return NotImplemented
        degrees = set(self.source.support) | set(other.source.support)
        return self.degree_shift == other.degree_shift and all(
            self.component(n) == other.component(n) for n in degrees
        )

    __hash__ = None


# -- constructions --------------------------------------------------------------------------


def direct_sum(x: Complex, y: Complex) -> Complex:
    """``x`` basis first, then ``y``."""
    degrees = set(x.support) | set(y.support)
    mats, labels, weights = {}, {}, {}
    for n in degrees:
        nx, ny = x.dim(n), y.dim(n)
        cols = [dict(c) for c in x.d(n).columns]
        shift = x.dim(n + 1)
        cols += [{r + shift: c for r, c in col.items()} for col in y.d(n).columns]
        mats[n] = Matrix(x.field, x.dim(n + 1) + y.dim(n + 1), nx + ny, tuple(cols))
        labels[n] = [("0", lab) for lab in x.basis_labels(n)] + [("1", lab) for lab in y.basis_labels(n)]
        if x.weights(n) is not None or y.weights(n) is not None:
            weights[n] = list(x.weights(n) or [0] * nx) + list(y.weights(n) or [0] * ny)
    dims = {n: x.dim(n) + y.dim(n) for n in degrees}
    return Complex(x.field, dims, mats, labels, weights)


def cone(f: ChainMap) -> Complex:
    """
    Mapping cone: degree n is ``source(n+1) + target(n)``, source part first,
    with ``d(s, t) = (-d s, f s + d t)``.
    """
    if f.degree_shift != 0:
        raise ChainMapError("Cone needs a degree 0 map")
    f.check()
    x, y = f.source, f.target
    degrees = {n - 1 for n in x.support} | set(y.support)
    dims = {n: x.dim(n + 1) + y.dim(n) for n in degrees}
    mats, labels, weights = {}, {}, {}
    for n in degrees:
        sx, sy = x.dim(n + 1), y.dim(n)
        rows_x = x.dim(n + 2)
        cols = []
        for i in range(sx):
            col = {r: -c for r, c in x.d(n + 1).column(i).items()}
            for r, c in f.component(n + 1).column(i).items():
                col[rows_x + r] = c
            cols.append(col)
        for j in range(sy):
            cols.append({rows_x + r: c for r, c in y.d(n).column(j).items()})
        mats[n] = Matrix(x.field, dims.get(n + 1, 0), sx + sy, tuple(cols))
        labels[n] = [("s", lab) for lab in x.basis_labels(n + 1)] + [
            ("t", lab) for lab in y.basis_labels(n)
        ]
        if x.has_weights or y.has_weights:
            weights[n] = list(x.weights(n + 1) or [0] * sx) + list(y.weights(n) or [0] * sy)
    return Complex(x.field, dims, mats, labels, weights)


def shift(x: Complex, n: int) -> Complex:
    """Degree ``d`` of the result is degree ``d + n`` of ``x``; differential times ``(-1)^n``."""
    sign = -1 if n % 2 else 1
    dims = {k - n: x.dim(k) for k in x.support}
    mats = {k - n: x.d(k).scale(sign) for k in x.support}
    labels = {k - n: x.basis_labels(k) for k in x.support}
    weights = {k - n: x.weights(k) for k in x.support if x.weights(k) is not None}
    return Complex(x.field, dims, mats, labels, weights)


def _tensor_layout(x: Complex, y: Complex) -> dict[int, list[tuple[int, int, int]]]:
    layout: dict[int, list[tuple[int, int, int]]] = {}
    for p in x.support:
        for q in y.support:
            layout.setdefault(p + q, []).extend(
                (p, i, j) for i in range(x.dim(p)) for j in range(y.dim(q))
            )
    for n in layout:
        layout[n].sort()
    return layout


def tensor(x: Complex, y: Complex) -> Complex:
    """``d(a (x) b) = da (x) b + (-1)^|a| a (x) db``."""
    layout = _tensor_layout(x, y)
    index = {n: {key: k for k, key in enumerate(keys)} for n, keys in layout.items()}
    mats, labels, weights = {}, {}, {}
    for n, keys in layout.items():
        cols = []
        for p, i, j in keys:
            q = n - p
            col: dict[int, Scalar] = {}
            for r, c in x.d(p).column(i).items():
                axpy(col, c, {index[n + 1][(p + 1, r, j)]: 1})
            sign = -1 if p % 2 else 1
            for r, c in y.d(q).column(j).items():
                axpy(col, sign * c, {index[n + 1][(p, i, r)]: 1})
            cols.append({k: x.field(v) for k, v in col.items()})
        mats[n] = Matrix(x.field, len(layout.get(n + 1, [])), len(keys), tuple(cols))
        labels[n] = [(x.basis_labels(p)[i], y.basis_labels(n - p)[j]) for p, i, j in keys]
        if x.has_weights and y.has_weights:
            weights[n] = [x.weights(p)[i] + y.weights(n - p)[j] for p, i, j in keys]
    dims = {n: len(keys) for n, keys in layout.items()}
    return Complex(x.field, dims, mats, labels, weights)


def symmetry_map(x: Complex, y: Complex) -> ChainMap:
    """``a (x) b -> (-1)^{|a||b|} b (x) a`` from ``x (x) y`` to ``y (x) x``."""
    xy, yx = tensor(x, y), tensor(y, x)
    layout_xy, layout_yx = _tensor_layout(x, y), _tensor_layout(y, x)
    comps = {}
    for n, keys in layout_xy.items():
        index = {key: k for k, key in enumerate(layout_yx[n])}
        cols = []
        for p, i, j in keys:
            q = n - p
            sign = -1 if (p * q) % 2 else 1
            cols.append({index[(q, j, i)]: x.field(sign)})
        comps[n] = Matrix(x.field, yx.dim(n), len(keys), tuple(cols))
    return ChainMap(xy, yx, comps)


def _hom_layout(x: Complex, y: Complex) -> dict[int, list[tuple[int, int, int]]]:
    layout: dict[int, list[tuple[int, int, int]]] = {}
    for p in x.support:
        for q in y.support:
            layout.setdefault(q - p, []).extend(
                (p, i, j) for i in range(x.dim(p)) for j in range(y.dim(q))
            )
    for n in layout:
        layout[n].sort()
    return layout


def chom(x: Complex, y: Complex) -> Complex:
    """
    Complex of graded maps. The basis element ``(p, i, j)`` of degree n sends basis
    element i of ``x`` in degree p to basis element j of ``y`` in degree p + n.
    ``D(f) = d_y f - (-1)^n f d_x``.
    """
    layout = _hom_layout(x, y)
    index = {n: {key: k for k, key in enumerate(keys)} for n, keys in layout.items()}
    mats, labels = {}, {}
    for n, keys in layout.items():
        sign = 1 if n % 2 else -1
        cols = []
        for p, i, j in keys:
            col: dict[int, Scalar] = {}
            for r, c in y.d(p + n).column(j).items():
                axpy(col, c, {index[n + 1][(p, i, r)]: 1})
            # (f d_x)(e_k) for e_k in degree p - 1 picks up d_x(e_k) at coordinate i
            dx = x.d(p - 1)
            for k in range(x.dim(p - 1)):
                c = dx.column(k).get(i)
                if c:
                    axpy(col, sign * c, {index[n + 1][(p - 1, k, j)]: 1})
            cols.append({k: x.field(v) for k, v in col.items()})
        mats[n] = Matrix(x.field, len(layout.get(n + 1, [])), len(keys), tuple(cols))
        labels[n] = list(keys)
    dims = {n: len(keys) for n, keys in layout.items()}
    return Complex(x.field, dims, mats, labels)


def map_coordinates(f: ChainMap) -> dict[int, Scalar]:
    """Coordinates of ``f`` in ``chom(f.source, f.target)`` in degree ``f.degree_shift``."""
    layout = _hom_layout(f.source, f.target).get(f.degree_shift, [])
    index = {key: k for k, key in enumerate(layout)}
    out: dict[int, Scalar] = {}
    for p in f.source.support:
        for i, col in enumerate(f.component(p).columns):
            for j, c in col.items():
                out[index[(p, i, j)]] = c
    return out


def map_from_coordinates(x: Complex, y: Complex, n: int, coords: Mapping[int, Scalar]) -> ChainMap:
    layout = _hom_layout(x, y).get(n, [])
    entries: dict[int, dict[tuple[int, int], Scalar]] = {}
    for k, c in coords.items():
        p, i, j = layout[k]
        entries.setdefault(p, {})[(j, i)] = c
    comps = {
        p: Matrix.from_entries(x.field, y.dim(p + n), x.dim(p), e) for p, e in entries.items()
    }
    return ChainMap(x, y, comps, n)


# -- homology -------------------------------------------------------------------------------


@dataclass
class HomologyGroup:
    """Homology in one degree with chosen cycle representatives."""

    degree: int
    betti: int
    representatives: list[dict[int, Scalar]]
    _space: Subspace | None = field(default=None, repr=False)

    def coordinates(self, cycle: Mapping[int, Scalar]) -> dict[int, Scalar]:
        """Class of a cycle in the basis of representatives."""
        if self._space is None:
            return {}
        expr = self._space.express(cycle)
        if expr is None:
            raise ChainComplexError(
                f"Vector is not a cycle of the truncated complex in degree {self.degree}",
                degree=self.degree,
            )
        return {key[1]: c for key, c in expr.items() if key[0] == "h"}


def _high_weight_cycles(x: Complex, n: int, trusted_weight: int) -> list[dict[int, Scalar]]:
    weights = x.weights(n)
    if weights is None:
        return []
    high = [i for i, w in enumerate(weights) if w > trusted_weight]
    if not high:
        return []
    sub = Matrix(x.field, x.dim(n + 1), len(high), tuple(x.d(n).column(i) for i in high))
    return [{high[k]: c for k, c in v.items()} for v in rref(sub).kernel_basis]


def homology_in_degree(x: Complex, n: int, trusted_weight: int | None = None) -> HomologyGroup:
    cycles = rref(x.d(n)).kernel_basis
    space = Subspace(x.field, track=True)
    prev = x.d(n - 1)
    for k, col in enumerate(prev.columns):
        space.add(col, ("b", k))
    if trusted_weight is not None:
        for k, z in enumerate(_high_weight_cycles(x, n, trusted_weight)):
            space.add(z, ("w", k))
    reps = []
    for z in cycles:
        if space.add(z, ("h", len(reps))):
            reps.append(z)
    return HomologyGroup(n, len(reps), reps, space)


def homology(
    x: Complex, window: DegreeWindow, trusted_weight: int | None = None
) -> dict[int, HomologyGroup]:
    """
    Homology for every degree of the window.

    With ``trusted_weight`` the cycles living entirely above that weight are discarded,
    so that only classes visible below the truncation bound are counted.
    """
    return {n: homology_in_degree(x, n, trusted_weight) for n in window.degrees()}


def betti_numbers(x: Complex, window: DegreeWindow, trusted_weight: int | None = None) -> dict[int, int]:
    return {n: h.betti for n, h in homology(x, window, trusted_weight).items()}


def euler_characteristic(x: Complex, window: DegreeWindow | None = None) -> int:
    degrees = window.degrees() if window else x.support
    return sum((-1) ** (n % 2) * x.dim(n) for n in degrees)


def is_acyclic(x: Complex, degrees: Iterable[int], trusted_weight: int | None = None) -> bool:
    return all(homology_in_degree(x, n, trusted_weight).betti == 0 for n in degrees)


@dataclass(frozen=True)
class QuasiIsoCertificate:
    """Verdict of a quasi-isomorphism check with the degrees it can be trusted in."""

    passed: bool
    trusted: tuple[int, int] | None
    failing_degrees: tuple[int, ...] = ()
    trusted_weight: int | None = None

    @property
    def vacuous(self) -> bool:
        return self.trusted is None

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "trusted_degrees": list(self.trusted) if self.trusted else None,
            "trusted_weight": self.trusted_weight,
            "failing_degrees": list(self.failing_degrees),
        }


def is_quasi_iso(
    f: ChainMap, window: DegreeWindow, trusted_weight: int | None = None
) -> QuasiIsoCertificate:
    """True iff the cone of ``f`` has no homology in the trusted part of the window."""
    c = cone(f)
    failing = tuple(
        n for n in window.trusted_degrees() if homology_in_degree(c, n, trusted_weight).betti
    )
    cert = QuasiIsoCertificate(not failing, window.trusted, failing, trusted_weight)
    logger.debug(f"quasi-iso check on {window}: passed={cert.passed} failing={failing}")
    return cert


def find_homotopy(f: ChainMap, g: ChainMap) -> ChainMap | None:
    """A degree -1 map ``h`` with ``D(h) = f - g``, or None."""
    if f.degree_shift or g.degree_shift:
        raise ChainMapError("Homotopies are searched between degree 0 maps")
    x, y = f.source, f.target
    h = chom(x, y)
    diff = map_coordinates(f - g)
    if not diff:
        return ChainMap.zero(x, y, -1)
    sol = ColumnSolver(h.d(-1)).solve(diff)
    if sol is None:
        return None
    return map_from_coordinates(x, y, -1, sol)


def induced_homology_map(
    f: ChainMap,
    source_h: Mapping[int, HomologyGroup],
    target_h: Mapping[int, HomologyGroup],
) -> dict[int, Matrix]:
    """Matrix of ``H(f)`` per degree in the representative bases."""
    out = {}
    for n, hs in source_h.items():
        ht = target_h.get(n + f.degree_shift)
        if ht is None:
            continue
        cols = [ht.coordinates(f.apply(n, rep)) for rep in hs.representatives]
        out[n] = Matrix.from_columns(f.field, ht.betti, cols)
    return out


def subcomplex(x: Complex, vectors: Mapping[int, Sequence[Mapping[int, Scalar]]]) -> tuple[Complex, ChainMap]:
    """
    Subcomplex spanned by the given independent vectors per degree, with its inclusion.

    Raises ChainComplexError when the span is not closed under ``d``.
    """
    spaces = {}
    for n, vecs in vectors.items():
        space = Subspace(x.field, track=True)
        for k, v in enumerate(vecs):
            if not space.add(v, k):
                raise ChainComplexError(f"Dependent spanning vectors in degree {n}", degree=n)
        spaces[n] = space
    mats = {}
    for n, vecs in vectors.items():
        cols = []
        for v in vecs:
            dv = x.apply_d(n, v)
            if not dv:
                cols.append({})
                continue
            target = spaces.get(n + 1)
            expr = target.express(dv) if target is not None else None
            if expr is None:
                raise ChainComplexError(f"Span is not closed under d in degree {n}", degree=n)
            cols.append(expr)
        mats[n] = Matrix.from_columns(x.field, len(vectors.get(n + 1, [])), cols)
    dims = {n: len(v) for n, v in vectors.items()}
    weights = None
    if x.has_weights:
        weights = {
            n: [min((x.weights(n)[i] for i in v), default=0) for v in vecs]
            for n, vecs in vectors.items()
        }
    sub = Complex(x.field, dims, mats, weights=weights)
    inclusion = ChainMap.from_columns(sub, x, {n: list(v) for n, v in vectors.items()})
    return sub, inclusion
