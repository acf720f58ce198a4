"""
Reduced dg operads given by structure constants.

Every arity carries a flat basis with per-element degrees. Compositions ``o_k`` are
produced by a *composer* ``(n, k, m, i, j) -> vector`` on basis pairs and memoized; the full
multiplication ``gamma`` is derived from them. Operads built by bounded constructions carry
a filtration (number of generating vertices) and a cap: compositions above the cap are zero
and every identity check skips instances that reach past it.
"""

from __future__ import annotations

import math
import threading
from collections.abc import Callable, Iterable, Mapping, Sequence
from typing import Any

from .complexes import Complex
from .exactla import Field, Matrix, Scalar, Subspace, axpy, scaled
from .exceptions import AxiomError, DimensionMismatchError, TruncationError, ValidationError, VerificationError
from .logging_config import get_logger, log_performance
from .models import Certificate
from .symmetry import Permutation, RightAction, block_permutation, insert_block

logger = get_logger(__name__)

Composer = Callable[[int, int, int, int, int], Mapping[int, Scalar]]


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


class Collection:
    """
    Graded vector spaces ``V(n)`` with differentials and optional right S_n actions.

    Args:
        field: coefficient field
        degrees: arity -> degree of each flat basis element
        differentials: arity -> square flat matrix of d
        actions: arity -> RightAction on the flat basis; None for a non-symmetric collection
        labels: arity -> basis labels
    """

    def __init__(
        self,
        field: Field,
        degrees: Mapping[int, Sequence[int]],
        differentials: Mapping[int, Matrix] | None = None,
        actions: Mapping[int, RightAction] | None = None,
        labels: Mapping[int, Sequence[Any]] | None = None,
    ):
        self.field = field
        self.degrees = {n: tuple(d) for n, d in degrees.items() if d}
        if any(n < 1 for n in self.degrees):
            raise ValidationError("Collections are reduced: arity 0 must be empty", field="arity")
        self.differentials = {
            n: m for n, m in (differentials or {}).items() if n in self.degrees and not m.is_zero()
        }
        self.actions = dict(actions) if actions is not None else None
        self._labels = {n: tuple(v) for n, v in (labels or {}).items()}
        self._components: dict[int, Complex] = {}
        self._positions: dict[int, dict[int, tuple[int, int]]] = {}

    @property
    def symmetric(self) -> bool:
        return self.actions is not None

    @property
    def arities(self) -> list[int]:
        return sorted(self.degrees)

    def dim(self, n: int) -> int:
        return len(self.degrees.get(n, ()))

    def degree(self, n: int, i: int) -> int:
        return self.degrees[n][i]

    def labels(self, n: int) -> tuple:
        return self._labels.get(n) or tuple(range(self.dim(n)))

    def vector_degree(self, n: int, vec: Mapping[int, Scalar]) -> int | None:
        """Degree of a homogeneous vector (None for zero)."""
        found = {self.degrees[n][i] for i in vec}
        if len(found) > 1:
            raise ValidationError(
                f"Inhomogeneous element in arity {n}: degrees {sorted(found)}", field="element"
            )
        return found.pop() if found else None

    def d(self, n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        m = self.differentials.get(n)
        return m.apply(vec) if m is not None else {}

    def act(self, n: int, vec: Mapping[int, Scalar], sigma: Permutation) -> dict[int, Scalar]:
        if self.actions is None:
            raise ValidationError("Collection has no symmetric group action", field="action")
        return self.action(n).act(vec, sigma)

    def action(self, n: int) -> RightAction:
        if self.actions is None:
            raise ValidationError("Collection has no symmetric group action", field="action")
        if n in self.actions:
            return self.actions[n]
        return RightAction.trivial(self.field, n, self.dim(n))

    def positions(self, n: int) -> dict[int, tuple[int, int]]:
        """Flat index -> (degree, index inside that degree)."""
        if n not in self._positions:
            pos, seen = {}, {}
            for i, deg in enumerate(self.degrees.get(n, ())):
                pos[i] = (deg, seen.get(deg, 0))
                seen[deg] = seen.get(deg, 0) + 1
            self._positions[n] = pos
        return self._positions[n]

    def to_flat(self, n: int) -> dict[tuple[int, int], int]:
        return {v: k for k, v in self.positions(n).items()}

    def component(self, n: int) -> Complex:
        """``V(n)`` as a complex graded by degree."""
        if n in self._components:
            return self._components[n]
        pos = self.positions(n)
        dims: dict[int, int] = {}
        labels: dict[int, list] = {}
        for i, (deg, _) in pos.items():
            dims[deg] = dims.get(deg, 0) + 1
            labels.setdefault(deg, []).append(self.labels(n)[i])
        cols: dict[int, list] = {deg: [] for deg in dims}
        for i in range(self.dim(n)):
            deg = pos[i][0]
            image = {pos[r][1]: c for r, c in self.d(n, {i: self.field.one}).items()}
            cols[deg].append(image)
        mats = {deg: Matrix.from_columns(self.field, dims.get(deg + 1, 0), c) for deg, c in cols.items()}
        comp = Complex(self.field, dims, mats, labels)
        self._components[n] = comp
        return comp

    def validate(self) -> None:
        for n in self.arities:
            for i in range(self.dim(n)):
                image = self.d(n, {i: self.field.one})
                for r in image:
                    if self.degree(n, r) != self.degree(n, i) + 1:
                        raise ValidationError(
                            f"d does not raise degree by one in arity {n}", field="differential"
                        )
                if self.d(n, image):
                    raise VerificationError(f"d o d is nonzero in arity {n}", identity="d^2")
            if self.actions is None:
                continue
            action = self.action(n)
            action.check_relations()
            for g in action.generators:
                for i in range(self.dim(n)):
                    e = {i: self.field.one}
                    if self.d(n, g.apply(e)) != g.apply(self.d(n, e)):
                        raise VerificationError(
                            f"Action in arity {n} does not commute with d", identity="action-d"
                        )
                    if {self.degree(n, r) for r in g.apply(e)} - {self.degree(n, i)}:
                        raise VerificationError(
                            f"Action in arity {n} does not preserve degrees", identity="action"
                        )

    @classmethod
    def single(
        cls,
        field: Field,
        n: int,
        degrees: Sequence[int],
        differential: Matrix | None = None,
        action: RightAction | str | None = "trivial",
        labels: Sequence[Any] | None = None,
    ) -> Collection:
        """Collection concentrated in arity ``n``; ``action`` may be 'trivial', 'sign' or 'regular'."""
        dim = len(degrees)
        if isinstance(action, str):
            if action == "trivial":
                action = RightAction.trivial(field, n, dim)
            elif action == "sign":
                action = RightAction.sign(field, n, dim)
            elif action == "regular":
                base = dim
                size = math.factorial(n)
                degrees = [deg for deg in degrees for _ in range(size)]
                if differential is not None:
                    differential = _tensor_regular(differential, size)
                if labels is not None:
                    labels = [(lab, r) for lab in labels for r in range(size)]
                action = RightAction.regular(field, n, base)
            else:
                raise ValidationError(f"Unknown action '{action}'", field="action", value=action)
        return cls(
            field,
            {n: degrees},
            {n: differential} if differential is not None else None,
            {n: action} if action is not None else None,
            {n: labels} if labels is not None else None,
        )

    @classmethod
    def from_complex(
        cls, x: Complex, n: int, action: str = "regular"
    ) -> tuple[Collection, dict[tuple[int, int], int]]:
        """Place a complex in arity n; returns the collection and (degree, index) -> flat index."""
        degrees, labels, index = [], [], {}
        for deg in x.support:
            for i in range(x.dim(deg)):
                index[(deg, i)] = len(degrees)
                degrees.append(deg)
                labels.append((deg, i))
        cols = []
        for deg in x.support:
            for i in range(x.dim(deg)):
                cols.append({index[(deg + 1, r)]: c for r, c in x.d(deg).column(i).items()})
        d = Matrix.from_columns(x.field, len(degrees), cols)
        coll = cls.single(x.field, n, degrees, d, action, labels)
        return coll, index


def _tensor_regular(m: Matrix, size: int) -> Matrix:
    cols = []
    for j in range(m.cols):
        col = m.column(j)
        for r in range(size):
            cols.append({i * size + r: c for i, c in col.items()})
    return Matrix(m.field, m.rows * size, m.cols * size, tuple(cols))


class Operad:
    """
    Reduced dg operad with unit in arity 1 and compositions up to ``max_arity``.

    Args:
        collection: underlying collection; without actions the operad is non-symmetric
        unit: vector in arity 1, degree 0
        composer: ``(n, k, m, i, j) -> e_i o_k e_j`` on basis elements
        max_arity: largest arity represented
        name: display name
        symbols: expression symbols -> (arity, vector)
        filtration: arity -> filtration weight per basis element
        filtration_cap: compositions whose inputs exceed this total are zero
    """

    def __init__(
        self,
        collection: Collection,
        unit: Mapping[int, Scalar],
        composer: Composer,
        max_arity: int,
        name: str = "",
        symbols: Mapping[str, tuple[int, Mapping[int, Scalar]]] | None = None,
        filtration: Mapping[int, Sequence[int]] | None = None,
        filtration_cap: int | None = None,
        notices: Iterable[str] = (),
    ):
        self.collection = collection
        self.field = collection.field
        self.unit = dict(unit)
        self._composer = composer
        self.max_arity = max_arity
        self.name = name
        self.symbols = dict(symbols or {})
        self.filtration = {n: tuple(v) for n, v in (filtration or {}).items()}
        self.filtration_cap = filtration_cap
        self.notices = list(notices)
        self.splitting = None
        self.symmetrized_from: Operad | None = None
        self._memo: dict[tuple[int, int, int, int, int], dict[int, Scalar]] = {}
        self._lock = threading.Lock()

    def __repr__(self):
        dims = ", ".join(str(self.dim(n)) for n in range(1, self.max_arity + 1))
        return f"Operad({self.name or 'unnamed'}; dims {dims})"

    # -- collection access ------------------------------------------------------------------

    @property
    def symmetric(self) -> bool:
        return self.collection.symmetric

    def dim(self, n: int) -> int:
        return self.collection.dim(n)

    def dims(self) -> dict[int, int]:
        return {n: self.dim(n) for n in range(1, self.max_arity + 1)}

    def degree(self, n: int, i: int) -> int:
        return self.collection.degree(n, i)

    def labels(self, n: int) -> tuple:
        return self.collection.labels(n)

    def d(self, n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        return self.collection.d(n, vec)

    def act(self, n: int, vec: Mapping[int, Scalar], sigma: Permutation) -> dict[int, Scalar]:
        return self.collection.act(n, vec, sigma)

    def component(self, n: int) -> Complex:
        return self.collection.component(n)

    def symbol(self, name: str) -> tuple[int, dict[int, Scalar]]:
        if name not in self.symbols:
            raise ValidationError(
                f"Unknown operation '{name}' in {self.name}",
                field="symbol",
                value=name,
                expected_format=", ".join(sorted(self.symbols)) or "none declared",
            )
        n, vec = self.symbols[name]
        return n, dict(vec)

    # -- truncation -------------------------------------------------------------------------

    def weight(self, n: int, i: int) -> int:
        f = self.filtration.get(n)
        return f[i] if f else 0

    def exceeds(self, *pairs: tuple[int, Iterable[int]]) -> bool:
        """True when the basis elements ``(arity, indices)`` together pass the cap."""
        if self.filtration_cap is None:
            return False
        total = 0
        for n, idx in pairs:
            total += max((self.weight(n, i) for i in idx), default=0)
        return total > self.filtration_cap

    # -- compositions -----------------------------------------------------------------------

    def compose_basis(self, n: int, k: int, m: int, i: int, j: int) -> dict[int, Scalar]:
        key = (n, k, m, i, j)
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        if n + m - 1 > self.max_arity:
            raise TruncationError(
                f"o_{k} from arities ({n}, {m}) leaves the arity bound {self.max_arity}"
            )
        if not 1 <= k <= n:
            raise ValidationError(f"No slot {k} in arity {n}", field="slot")
        value = {r: self.field(c) for r, c in self._composer(n, k, m, i, j).items() if c}
        with self._lock:
            self._memo.setdefault(key, value)
        return value

    def compose(
        self, n: int, k: int, u: Mapping[int, Scalar], m: int, v: Mapping[int, Scalar]
    ) -> dict[int, Scalar]:
        """``u o_k v`` for ``u`` in arity n and ``v`` in arity m."""
        out: dict[int, Scalar] = {}
        for i, a in u.items():
            for j, b in v.items():
                axpy(out, a * b, self.compose_basis(n, k, m, i, j))
        return out

    def gamma(
        self, n: int, a: Mapping[int, Scalar], parts: Sequence[tuple[int, Mapping[int, Scalar]]]
    ) -> tuple[int, dict[int, Scalar]]:
        """``gamma(a; b_1, ..., b_n)`` by left-to-right insertion."""
        if len(parts) != n:
            raise DimensionMismatchError(f"gamma needs {n} inputs, got {len(parts)}", expected=n, actual=len(parts))
        result, arity, offset = dict(a), n, 0
        for m, b in parts:
            result = self.compose(arity, offset + 1, result, m, b)
            arity += m - 1
            offset += m
        return arity, result

    def evaluate(self, term: Any) -> tuple[int, dict[int, Scalar]]:
        """
        Element named by a composite term.

        A term is a variable number or ``(symbol, (term, ...))``. Each variable must occur
        exactly once and the variables must be ``1..n``.
        """
        vec, variables = self._evaluate(term)
        n = len(variables)
        if sorted(variables) != list(range(1, n + 1)):
            raise ValidationError(
                f"Variables {variables} are not a permutation of 1..{n}", field="element"
            )
        sigma = Permutation(tuple(variables)).inverse()
        return n, self.act(n, vec, sigma) if self.symmetric else self._planar(variables, vec)

    def _planar(self, variables, vec):
        if list(variables) != sorted(variables):
            raise ValidationError("Variables must appear in order in a non-symmetric operad", field="element")
        return vec

    def _evaluate(self, term: Any) -> tuple[dict[int, Scalar], tuple[int, ...]]:
        if isinstance(term, int):
            return dict(self.unit), (term,)
        name, args = term
        arity, vec = self.symbol(name)
        if len(args) != arity:
            raise ValidationError(
                f"'{name}' takes {arity} arguments, got {len(args)}", field="element", value=name
            )
        parts, variables = [], ()
        for arg in args:
            v, vars_ = self._evaluate(arg)
            parts.append((len(vars_), v))
            variables += vars_
        _, result = self.gamma(arity, vec, parts)
        return result, variables

    # -- derived operads --------------------------------------------------------------------

    def asymmetric(self) -> Operad:
        """The same structure with the symmetric group actions forgotten."""
        coll = self.collection
        bare = Collection(coll.field, coll.degrees, coll.differentials, None, coll._labels)
        return Operad(
            bare,
            self.unit,
            self.compose_basis,
            self.max_arity,
            f"{self.name}#",
            self.symbols,
            self.filtration,
            self.filtration_cap,
            self.notices,
        )

    def truncated(self, max_arity: int) -> Operad:
        coll = self.collection
        keep = range(1, max_arity + 1)
        sub = Collection(
            coll.field,
            {n: coll.degrees[n] for n in keep if n in coll.degrees},
            {n: m for n, m in coll.differentials.items() if n in keep},
            {n: a for n, a in coll.actions.items() if n in keep} if coll.actions is not None else None,
            {n: v for n, v in coll._labels.items() if n in keep},
        )
        op = Operad(
            sub,
            self.unit,
            self.compose_basis,
            max_arity,
            self.name,
            {s: v for s, v in self.symbols.items() if v[0] <= max_arity},
            {n: v for n, v in self.filtration.items() if n in keep},
            self.filtration_cap,
            self.notices,
        )
        op.splitting = self.splitting
        op.symmetrized_from = self.symmetrized_from
        return op


def mutate(o: Operad, n: int, k: int, m: int, i: int, j: int, value: Mapping[int, Any]) -> Operad:
    """Copy of ``o`` with the constant ``e_i o_k e_j`` replaced; used for negative controls."""
    target = {r: o.field(c) for r, c in value.items() if c}

    def composer(n_, k_, m_, i_, j_):
        if (n_, k_, m_, i_, j_) == (n, k, m, i, j):
            return target
        return o.compose_basis(n_, k_, m_, i_, j_)

    return Operad(
        o.collection, o.unit, composer, o.max_arity, f"{o.name}*", o.symbols, o.filtration, o.filtration_cap
    )


# -- verification ---------------------------------------------------------------------------


def _basis(o: Operad, n: int) -> range:
    return range(o.dim(n))


def _raise(identity: str, message: str, triple, pair) -> None:
    raise AxiomError(message, identity=identity, triple=triple, pair=pair)


def _check_units(o: Operad, max_arity: int, cert: Certificate) -> None:
    one = o.unit
    if any(o.degree(1, i) != 0 for i in one):
        _raise("unit", "Unit is not of degree 0", (1, 1, 1), ())
    if o.d(1, one):
        _raise("unit", "Unit is not a cycle", (1, 1, 1), ())
    for n in range(1, max_arity + 1):
        for a in _basis(o, n):
            e = {a: o.field.one}
            if o.compose(1, 1, one, n, e) != e:
                _raise("unit", f"1 o_1 e_{a} != e_{a} in arity {n}", (1, n, 1), (a,))
            for k in range(1, n + 1):
                if o.compose(n, k, e, 1, one) != e:
                    _raise("unit", f"e_{a} o_{k} 1 != e_{a} in arity {n}", (n, 1, k), (a,))
            cert.count("unit", n + 1)


def _check_associativity(o: Operad, max_arity: int, cert: Certificate) -> None:
    f = o.field
    for n in range(1, max_arity + 1):
        for m in range(1, max_arity + 2 - n):
            for p in range(1, max_arity + 3 - n - m):
                for a in _basis(o, n):
                    for b in _basis(o, m):
                        for c in _basis(o, p):
                            if o.exceeds((n, [a]), (m, [b]), (p, [c])):
                                cert.skipped += 1
                                continue
                            ea, eb, ec = {a: f.one}, {b: f.one}, {c: f.one}
                            sbc = _sign(o.degree(m, b) * o.degree(p, c))
                            for i in range(1, n + 1):
                                ab = o.compose_basis(n, i, m, a, b)
                                for j in range(1, n + m):
                                    lhs = o.compose(n + m - 1, j, ab, p, ec)
                                    if j < i:
                                        ac = o.compose(n, j, ea, p, ec)
                                        rhs = scaled(o.compose(n + p - 1, i + p - 1, ac, m, eb), sbc)
                                    elif j <= i + m - 1:
                                        bc = o.compose(m, j - i + 1, eb, p, ec)
                                        rhs = o.compose(n, i, ea, m + p - 1, bc)
                                    else:
                                        ac = o.compose(n, j - m + 1, ea, p, ec)
                                        rhs = scaled(o.compose(n + p - 1, i, ac, m, eb), sbc)
                                    if lhs != rhs:
                                        _raise(
                                            "associativity",
                                            f"(e_{a} o_{i} e_{b}) o_{j} e_{c} fails in arities ({n}, {m}, {p})",
                                            (n, m, p),
                                            (a, b, c, i, j),
                                        )
                                    cert.count("associativity")


def _check_equivariance(o: Operad, max_arity: int, cert: Certificate) -> None:
    f = o.field
    for n in range(1, max_arity + 1):
        for m in range(1, max_arity + 2 - n):
            for a in _basis(o, n):
                for b in _basis(o, m):
                    if o.exceeds((n, [a]), (m, [b])):
                        cert.skipped += 1
                        continue
                    ea, eb = {a: f.one}, {b: f.one}
                    for t in range(1, n):
                        s = Permutation.adjacent(n, t)
                        moved = o.act(n, ea, s)
                        for k in range(1, n + 1):
                            sizes = [m if v == k else 1 for v in range(1, n + 1)]
                            lhs = o.compose(n, k, moved, m, eb)
                            rhs = o.act(
                                n + m - 1, o.compose_basis(n, s(k), m, a, b), block_permutation(s, sizes)
                            )
                            if lhs != rhs:
                                _raise(
                                    "equivariance",
                                    f"(e_{a} s_{t}) o_{k} e_{b} fails in arities ({n}, {m})",
                                    (n, m, k),
                                    (a, b),
                                )
                            cert.count("equivariance")
                    for t in range(1, m):
                        s = Permutation.adjacent(m, t)
                        moved = o.act(m, eb, s)
                        for k in range(1, n + 1):
                            lhs = o.compose(n, k, ea, m, moved)
                            rhs = o.act(n + m - 1, o.compose_basis(n, k, m, a, b), insert_block(s, n, k))
                            if lhs != rhs:
                                _raise(
                                    "equivariance",
                                    f"e_{a} o_{k} (e_{b} s_{t}) fails in arities ({n}, {m})",
                                    (n, m, k),
                                    (a, b),
                                )
                            cert.count("equivariance")


def _check_differential(o: Operad, max_arity: int, cert: Certificate) -> None:
    f = o.field
    for n in range(1, max_arity + 1):
        for m in range(1, max_arity + 2 - n):
            for a in _basis(o, n):
                for b in _basis(o, m):
                    if o.exceeds((n, [a]), (m, [b])):
                        cert.skipped += 1
                        continue
                    ea, eb = {a: f.one}, {b: f.one}
                    da, db = o.d(n, ea), o.d(m, eb)
                    for k in range(1, n + 1):
                        lhs = o.d(n + m - 1, o.compose_basis(n, k, m, a, b))
                        rhs = o.compose(n, k, da, m, eb)
                        axpy(rhs, _sign(o.degree(n, a)), o.compose(n, k, ea, m, db))
                        if lhs != rhs:
                            _raise(
                                "chain-map",
                                f"d(e_{a} o_{k} e_{b}) fails the Leibniz rule in arities ({n}, {m})",
                                (n, m, k),
                                (a, b),
                            )
                        cert.count("chain-map")


@log_performance("operad axioms")
def check_operad(o: Operad, max_arity: int | None = None) -> Certificate:
    """
    Verify unit, associativity, equivariance and Leibniz identities on all basis triples.

    Raises AxiomError naming the arity triple and basis elements of the first failure.
    """
    max_arity = min(max_arity or o.max_arity, o.max_arity)
    cert = Certificate(f"operad {o.name}", bounds={"max_arity": max_arity})
    if o.filtration_cap is not None:
        cert.bounds["filtration_cap"] = o.filtration_cap
    o.collection.validate()
    _check_units(o, max_arity, cert)
    _check_associativity(o, max_arity, cert)
    if o.symmetric:
        _check_equivariance(o, max_arity, cert)
    _check_differential(o, max_arity, cert)
    cert.notices.extend(o.notices)
    logger.info(f"{o.name}: operad identities hold up to arity {max_arity} ({sum(cert.checks.values())} checks)")
    return cert


# -- morphisms ------------------------------------------------------------------------------


class OperadMorphism:
    """Per-arity linear maps ``source(n) -> target(n)`` given as flat matrices."""

    def __init__(self, source: Operad, target: Operad, maps: Mapping[int, Matrix], name: str = ""):
        for n, mat in maps.items():
            if (mat.rows, mat.cols) != (target.dim(n), source.dim(n)):
                raise DimensionMismatchError(f"Morphism component in arity {n} has the wrong shape")
        self.source = source
        self.target = target
        self.maps = dict(maps)
        self.name = name

    def apply(self, n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        m = self.maps.get(n)
        return m.apply(vec) if m is not None else {}

    def compose(self, other: OperadMorphism) -> OperadMorphism:
        """``self o other``."""
        maps = {n: self.maps[n] @ other.maps[n] for n in other.maps if n in self.maps}
        return OperadMorphism(other.source, self.target, maps)

    def check(self, max_arity: int | None = None) -> Certificate:
        src, tgt = self.source, self.target
        max_arity = min(max_arity or src.max_arity, src.max_arity, tgt.max_arity)
        cert = Certificate(f"morphism {self.name}", bounds={"max_arity": max_arity})
        f = src.field
        if self.apply(1, src.unit) != tgt.unit:
            raise VerificationError("Morphism does not preserve the unit", identity="unit")
        for n in range(1, max_arity + 1):
            for i in range(src.dim(n)):
                e = {i: f.one}
                if self.apply(n, src.d(n, e)) != tgt.d(n, self.apply(n, e)):
                    raise VerificationError(f"Morphism does not commute with d in arity {n}", identity="chain-map")
                cert.count("chain-map")
                if src.symmetric and tgt.symmetric:
                    for t in range(1, n):
                        s = Permutation.adjacent(n, t)
                        if self.apply(n, src.act(n, e, s)) != tgt.act(n, self.apply(n, e), s):
                            raise VerificationError(
                                f"Morphism is not equivariant for s_{t} in arity {n}", identity="equivariance"
                            )
                        cert.count("equivariance")
        for n in range(1, max_arity + 1):
            for m in range(1, max_arity + 2 - n):
                for a in range(src.dim(n)):
                    for b in range(src.dim(m)):
                        if src.exceeds((n, [a]), (m, [b])):
                            cert.skipped += 1
                            continue
                        fa, fb = self.apply(n, {a: f.one}), self.apply(m, {b: f.one})
                        if tgt.exceeds((n, fa), (m, fb)):
                            cert.skipped += 1
                            continue
                        for k in range(1, n + 1):
                            lhs = self.apply(n + m - 1, src.compose_basis(n, k, m, a, b))
                            rhs = tgt.compose(n, k, fa, m, fb)
                            if lhs != rhs:
                                raise VerificationError(
                                    f"Morphism does not respect o_{k} on ({a}, {b}) in arities ({n}, {m})",
                                    identity="composition",
                                    details={"triple": (n, m, k), "pair": (a, b)},
                                )
                            cert.count("composition")
        return cert


# -- symmetrization -------------------------------------------------------------------------


def symmetrize(t: Operad, check: bool = True) -> Operad:
    """
    ``T^S(n) = T(n) (x) k S_n`` with the free right action, from non-symmetric data.

    Basis element ``u (x) sigma`` has flat index ``u * n! + rank(sigma)``; compositions
    follow ``(u x s) o_i (v x t) = (u o_{s(i)} v) x (t' s')`` with ``s'`` the block
    permutation of ``s`` and ``t'`` the action of ``t`` on the inserted block.
    """
    if check:
        check_operad(t.asymmetric())
    f = t.field
    n_max = t.max_arity
    degrees, diffs, actions, labels = {}, {}, {}, {}
    for n in range(1, n_max + 1):
        size = math.factorial(n)
        degrees[n] = [t.degree(n, u) for u in range(t.dim(n)) for _ in range(size)]
        perms = Permutation.all_permutations(n)
        labels[n] = [(t.labels(n)[u], p.images) for u in range(t.dim(n)) for p in perms]
        cols = []
        for u in range(t.dim(n)):
            du = t.d(n, {u: f.one})
            for r in range(size):
                cols.append({w * size + r: c for w, c in du.items()})
        diffs[n] = Matrix.from_columns(f, len(degrees[n]), cols)
        actions[n] = RightAction.regular(f, n, t.dim(n))

    def composer(n: int, k: int, m: int, i: int, j: int) -> dict[int, Scalar]:
        u, r = divmod(i, math.factorial(n))
        v, q = divmod(j, math.factorial(m))
        sigma, tau = Permutation.from_rank(n, r), Permutation.from_rank(m, q)
        slot = sigma(k)
        sizes = [m if x == k else 1 for x in range(1, n + 1)]
        perm = insert_block(tau, n, slot) * block_permutation(sigma, sizes)
        size = math.factorial(n + m - 1)
        return {w * size + perm.rank: c for w, c in t.compose_basis(n, slot, m, u, v).items()}

    symbols = {name: (n, {u * math.factorial(n): c for u, c in vec.items()}) for name, (n, vec) in t.symbols.items()}
    filtration = {
        n: [w for w in ws for _ in range(math.factorial(n))] for n, ws in t.filtration.items()
    }
    sym = Operad(
        Collection(f, degrees, diffs, actions, labels),
        dict(t.unit),
        composer,
        n_max,
        name=f"{t.name.rstrip('#')}^S",
        symbols=symbols,
        filtration=filtration,
        filtration_cap=t.filtration_cap,
    )
    sym.symmetrized_from = t
    return sym


def adjunction_counit(o: Operad) -> OperadMorphism:
    """``pi: (O#)^S -> O``, ``u (x) sigma -> u sigma``."""
    sym = symmetrize(o.asymmetric(), check=False)
    maps = {}
    for n in range(1, o.max_arity + 1):
        perms = Permutation.all_permutations(n)
        cols = [o.act(n, {u: o.field.one}, p) for u in range(o.dim(n)) for p in perms]
        maps[n] = Matrix.from_columns(o.field, o.dim(n), cols)
    return OperadMorphism(sym, o, maps, name="pi")


# -- ideals and quotients -------------------------------------------------------------------


class Ideal:
    """Bounded saturation of an operadic ideal: one Subspace per arity."""

    def __init__(self, o: Operad):
        self.operad = o
        self.spaces = {n: Subspace(o.field) for n in range(1, o.max_arity + 1)}
        self.dropped = 0

    def contains(self, n: int, vec: Mapping[int, Scalar]) -> bool:
        return self.spaces[n].contains(vec)

    def dim(self, n: int) -> int:
        return self.spaces[n].dim

    def saturate(self, gens: Iterable[tuple[int, Mapping[int, Scalar]]]) -> None:
        o = self.operad
        work = []
        for n, vec in gens:
            if n > o.max_arity:
                raise TruncationError(f"Ideal generator of arity {n} above the arity bound")
            o.collection.vector_degree(n, vec)
            if self.spaces[n].add(vec):
                work.append((n, dict(vec)))
        f = o.field
        while work:
            n, x = work.pop()
            found = []
            if o.symmetric:
                for t in range(1, n):
                    found.append((n, o.act(n, x, Permutation.adjacent(n, t))))
            for m in range(1, o.max_arity + 2 - n):
                for b in range(o.dim(m)):
                    eb = {b: f.one}
                    if o.exceeds((n, x), (m, [b])):
                        self.dropped += 1
                        continue
                    for k in range(1, n + 1):
                        found.append((n + m - 1, o.compose(n, k, x, m, eb)))
                    for k in range(1, m + 1):
                        found.append((n + m - 1, o.compose(m, k, eb, n, x)))
            for arity, y in found:
                if y and self.spaces[arity].add(y):
                    work.append((arity, y))
        logger.debug(
            f"ideal in {o.name}: dims {[self.dim(n) for n in range(1, o.max_arity + 1)]}, "
            f"{self.dropped} products past the cap"
        )

    def check_differential(self) -> None:
        o = self.operad
        for n, space in self.spaces.items():
            for row in space.basis():
                if not space.contains(o.d(n, row)):
                    raise VerificationError(
                        f"The ideal is not closed under d in arity {n}",
                        identity="ideal-d",
                        suggestion="Add the differentials of the relations to the relation set",
                    )


@log_performance("operad quotient")
def quotient(o: Operad, gens: Iterable[tuple[int, Mapping[int, Any]]], name: str | None = None) -> Operad:
    """
    ``O / I`` for the ideal generated by ``gens`` (pairs of arity and vector).

    The quotient basis in each arity is the set of non-pivot basis elements of the saturated
    ideal; elements are reduced to their unique normal forms.
    """
    f = o.field
    coerced = [(n, {i: f(c) for i, c in v.items() if c}) for n, v in gens]
    ideal = Ideal(o)
    ideal.saturate([(n, v) for n, v in coerced if v])
    ideal.check_differential()
    if ideal.contains(1, o.unit):
        raise VerificationError("The ideal contains the unit", identity="unit")
    keep = {n: ideal.spaces[n].complement(range(o.dim(n))) for n in range(1, o.max_arity + 1)}
    position = {n: {a: q for q, a in enumerate(idx)} for n, idx in keep.items()}

    def reduce(n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        residual = ideal.spaces[n].normal_form(vec)
        return {position[n][a]: c for a, c in residual.items()}

    def lift(n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        return {keep[n][q]: c for q, c in vec.items()}

    degrees, diffs, actions, labels = {}, {}, {}, {}
    for n, idx in keep.items():
        degrees[n] = [o.degree(n, a) for a in idx]
        labels[n] = [o.labels(n)[a] for a in idx]
        diffs[n] = Matrix.from_columns(f, len(idx), [reduce(n, o.d(n, {a: f.one})) for a in idx])
        if o.symmetric:
            actions[n] = RightAction.from_images(
                f, n, len(idx), lambda q, s, n=n: reduce(n, o.act(n, lift(n, {q: f.one}), s))
            )

    def composer(n: int, k: int, m: int, i: int, j: int) -> dict[int, Scalar]:
        return reduce(n + m - 1, o.compose_basis(n, k, m, keep[n][i], keep[m][j]))

    q = Operad(
        Collection(f, degrees, diffs, actions if o.symmetric else None, labels),
        reduce(1, o.unit),
        composer,
        o.max_arity,
        name=name or f"{o.name}/I",
        symbols={s: (n, reduce(n, v)) for s, (n, v) in o.symbols.items()},
        filtration={n: [o.weight(n, a) for a in idx] for n, idx in keep.items()} if o.filtration else None,
        filtration_cap=o.filtration_cap,
        notices=o.notices + ([f"{ideal.dropped} ideal products dropped past the cap"] if ideal.dropped else []),
    )
    q.ambient = o
    q.ideal = ideal
    q.lift = lift
    q.reduce = reduce
    return q


# -- builtin operads ------------------------------------------------------------------------


def commutative(field: Field, max_arity: int = 5) -> Operad:
    """Com: one basis element ``mu_n`` of degree 0 in every arity, trivial action."""
    degrees = {n: [0] for n in range(1, max_arity + 1)}
    labels = {n: [f"mu{n}"] for n in range(1, max_arity + 1)}
    actions = {n: RightAction.trivial(field, n, 1) for n in range(1, max_arity + 1)}
    symbols = {f"mu{n}": (n, {0: field.one}) for n in range(1, max_arity + 1)}
    return Operad(
        Collection(field, degrees, None, actions, labels),
        {0: field.one},
        lambda n, k, m, i, j: {0: 1},
        max_arity,
        name="Com",
        symbols=symbols,
    )


def associative(field: Field, max_arity: int = 5) -> Operad:
    """Ass = (Com#)^S."""
    ass = symmetrize(commutative(field, max_arity).asymmetric())
    ass.name = "Ass"
    return ass


def builtin(name: str, field: Field, max_arity: int = 5, with_splitting: bool = True) -> Operad:
    """
    One of Com, Ass, Lie, with a Sigma-splitting attached when one exists over ``field``.

    Ass carries its canonical splitting in every characteristic; Com and Lie carry the
    averaging splitting when the characteristic does not divide ``max_arity!``.
    """
    from .splittings import averaging_splitting, canonical_splitting

    key = name.strip().lower()
    if key == "com":
        o = commutative(field, max_arity)
    elif key == "ass":
        o = associative(field, max_arity)
    elif key == "lie":
        from .free_operads import lie

        o = lie(field, max_arity)
    else:
        raise ValidationError(
            f"Unknown builtin operad '{name}'", field="operad", value=name, expected_format="Com, Ass or Lie"
        )
    if with_splitting:
        if key == "ass":
            o.splitting = canonical_splitting(o)
        elif not field.divides_group_order(math.factorial(max_arity)):
            o.splitting = averaging_splitting(o)
    return o
