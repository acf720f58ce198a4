"""
Algebras over operads as weight-truncated presented objects.

A presentation lists generators in a fixed order, each with a degree and a differential
that may only use earlier generators. Elements of the free algebra are sums of canonical
monomials: the generator indices sorted, together with a representative operation of
``O(n)`` modulo the stabilizer of that tuple (with Koszul signs, so squares of odd
generators can vanish). Every generator carries a weight (1 unless stated) and the weight of
a monomial is the sum over its generators; everything above the weight cap is zero, which
is a dg ideal because no differential lowers weight.
"""

from __future__ import annotations

import itertools
import random
import threading
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple

from .complexes import ChainMap, Complex, DegreeWindow, is_quasi_iso
from .exactla import Matrix, Scalar, Subspace, accumulate, axpy
from .exceptions import (
    ChainMapError,
    DimensionMismatchError,
    PresentationError,
    TruncationError,
    ValidationError,
    VerificationError,
)
from .logging_config import get_logger, log_performance
from .models import Certificate
from .operads import Operad, OperadMorphism
from .symmetry import Permutation

logger = get_logger(__name__)


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


class Monomial(NamedTuple):
    """Canonical monomial: sorted generator indices and a representative operation."""

    generators: tuple[int, ...]
    operation: int

    @property
    def arity(self) -> int:
        return len(self.generators)


Polynomial = dict[Monomial, Scalar]


def multisets(weights: Sequence[int], budget: int, max_count: int) -> list[tuple[int, ...]]:
    """Sorted index tuples (the empty one included) of total weight <= budget and length <= max_count."""
    out: list[tuple[int, ...]] = []

    def grow(prefix: tuple[int, ...], start: int, left: int) -> None:
        out.append(prefix)
        if len(prefix) == max_count:
            return
        for g in range(start, len(weights)):
            if weights[g] <= left:
                grow(prefix + (g,), g, left - weights[g])

    if budget >= 0 and max_count >= 0:
        grow((), 0, budget)
    return out


@dataclass
class Generator:
    name: str
    degree: int
    differential: Polynomial = field(default_factory=dict)
    weight: int = 1


class Coinvariants:
    """
    Normal forms in ``O(n) (x)_{S_n} (x_{s_1} (x) ... (x) x_{s_n})``.

    The relation space for a sorted tuple is spanned by ``p s_j - e p`` over the basis of
    ``O(n)`` and the adjacent transpositions fixing the tuple, ``e = -1`` exactly when the
    swapped generator is odd. Representatives are the non-pivot basis elements, so the
    relation spaces only depend on the arity and the parity pattern of repeated entries
    and are shared between presentations over the same operad.
    """

    def __init__(self, operad: Operad, degrees: Sequence[int], cache: dict | None = None):
        if not operad.symmetric:
            raise ValidationError(
                f"Algebras need a symmetric operad; {operad.name} has no actions", field="operad"
            )
        self.operad = operad
        self.field = operad.field
        self.degrees = degrees
        self._spaces: dict[tuple, Subspace] = cache if cache is not None else {}
        self._lock = threading.Lock()

    def _key(self, gens: tuple[int, ...]) -> tuple:
        n = len(gens)
        return n, tuple((j, self.degrees[gens[j]] % 2) for j in range(n - 1) if gens[j] == gens[j + 1])

    def _space(self, gens: tuple[int, ...]) -> Subspace:
        key = self._key(gens)
        with self._lock:
            hit = self._spaces.get(key)
        if hit is not None:
            return hit
        n, pairs = key
        if n > self.operad.max_arity:
            raise TruncationError(
                f"A monomial with {n} generators needs arity {n} of {self.operad.name}, "
                f"which stops at {self.operad.max_arity}"
            )
        f, o = self.field, self.operad
        rels = []
        for j, odd in pairs:
            s = Permutation.adjacent(n, j + 1)
            for p in range(o.dim(n)):
                rel = o.act(n, {p: f.one}, s)
                accumulate(rel, p, f.one if odd else -f.one)
                rels.append(rel)
        space = Subspace.spanned_by(f, rels)
        with self._lock:
            self._spaces.setdefault(key, space)
        return space

    def reps(self, gens: tuple[int, ...]) -> list[int]:
        """Representative operations for a sorted generator tuple."""
        return self._space(gens).complement(range(self.operad.dim(len(gens))))

    def sort(self, gens: Sequence[int]) -> tuple[tuple[int, ...], Permutation, int]:
        """Stable sort with ``sigma(p)`` = old position of the entry now at p, and its Koszul sign."""
        n = len(gens)
        order = sorted(range(n), key=lambda i: gens[i])
        exponent = 0
        for a in range(n):
            for b in range(a + 1, n):
                if order[a] > order[b]:
                    exponent += self.degrees[gens[order[a]]] * self.degrees[gens[order[b]]]
        return tuple(gens[i] for i in order), Permutation(tuple(i + 1 for i in order)), _sign(exponent)

    def canonical(self, vec: Mapping[int, Scalar], gens: Sequence[int]) -> Polynomial:
        """Normal form of ``vec (x) x_{gens[0]} (x) ...`` for ``vec`` in ``O(len(gens))``."""
        if not vec:
            return {}
        n = len(gens)
        ordered, sigma, sign = self.sort(gens)
        moved = dict(vec) if sigma.is_identity() else self.operad.act(n, vec, sigma)
        residual = self._space(ordered).normal_form(moved)
        return {Monomial(ordered, u): (c if sign > 0 else -c) for u, c in residual.items()}


class AlgebraPresentation:
    """
    Generators with triangular differentials, optional relations, and a weight cap.

    Differentials are stored as polynomials of the free algebra. Generators are only ever
    appended, so the triangularity of ``d`` holds by construction.
    """

    def __init__(
        self,
        operad: Operad,
        weight_cap: int = 4,
        name: str = "A",
        cache: dict | None = None,
    ):
        if weight_cap < 1:
            raise ValidationError("Weight cap must be at least 1", field="weight_cap", value=str(weight_cap))
        self.operad = operad
        self.field = operad.field
        self.weight_cap = weight_cap
        self.name = name
        self.generators: list[Generator] = []
        self.relations: list[Polynomial] = []
        self._degrees: list[int] = []
        self._weights: list[int] = []
        self._cache = cache if cache is not None else {}
        self.coinvariants = Coinvariants(operad, self._degrees, self._cache)
        self._names: dict[str, int] = {}
        self._d_memo: dict[Monomial, Polynomial] = {}

    def __repr__(self):
        gens = ", ".join(f"{g.name}:{g.degree}" for g in self.generators)
        return f"AlgebraPresentation({self.name} over {self.operad.name}; {gens}; cap {self.weight_cap})"

    # -- construction ---------------------------------------------------------------------

    def add_generator(
        self, name: str, degree: int, differential: Mapping[Monomial, Any] | None = None, weight: int = 1
    ) -> int:
        """Append a generator; ``differential`` may only mention earlier generators."""
        if name in self._names:
            raise PresentationError(f"Duplicate generator '{name}'", generator=name)
        if weight < 0:
            raise PresentationError(f"Generator '{name}' has negative weight {weight}", generator=name)
        diff = {m: self.field(c) for m, c in (differential or {}).items() if c}
        k = len(self.generators)
        for m in diff:
            if any(g >= k for g in m.generators):
                raise PresentationError(
                    f"Differential of '{name}' is not triangular: it uses a later generator",
                    generator=name,
                )
        self.generators.append(Generator(name, degree, {}, weight))
        self._degrees.append(degree)
        self._weights.append(weight)
        self._names[name] = k
        diff = self.truncate(diff)
        deg = self.degree_of(diff)
        problem = None
        if deg is not None and deg != degree + 1:
            problem = f"d({name}) has degree {deg}, expected {degree + 1}"
        elif any(self.weight_of(m) < weight for m in diff):
            problem = f"d({name}) has a term of weight below {weight}"
        if problem:
            self.generators.pop()
            self._degrees.pop()
            self._weights.pop()
            del self._names[name]
            raise PresentationError(problem, generator=name)
        self.generators[k].differential = diff
        return k

    def add_relation(self, poly: Mapping[Monomial, Any]) -> None:
        rel = {m: self.field(c) for m, c in poly.items() if c}
        self.degree_of(rel)
        if rel:
            self.relations.append(rel)

    def copy(self, name: str | None = None, weight_cap: int | None = None) -> AlgebraPresentation:
        other = AlgebraPresentation(self.operad, weight_cap or self.weight_cap, name or self.name, self._cache)
        for g in self.generators:
            other.add_generator(g.name, g.degree, g.differential, g.weight)
        for r in self.relations:
            other.add_relation(r)
        return other

    def prefix(self, count: int, name: str | None = None) -> AlgebraPresentation:
        """Sub-presentation on the first ``count`` generators (relations dropped)."""
        other = AlgebraPresentation(self.operad, self.weight_cap, name or f"{self.name}[:{count}]", self._cache)
        for g in self.generators[:count]:
            other.add_generator(g.name, g.degree, g.differential, g.weight)
        return other

    def without_relations(self) -> AlgebraPresentation:
        return self.prefix(len(self.generators), name=self.name)

    # -- generators -----------------------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.generators)

    @property
    def names(self) -> list[str]:
        return [g.name for g in self.generators]

    @property
    def weights(self) -> list[int]:
        return list(self._weights)

    def index(self, name: str) -> int:
        if name not in self._names:
            raise ValidationError(
                f"Unknown generator '{name}' in {self.name}",
                field="generator",
                value=name,
                expected_format=", ".join(self.names) or "no generators",
            )
        return self._names[name]

    def generator(self, name_or_index: str | int) -> Polynomial:
        k = self.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        return self.coinvariants.canonical(self.operad.unit, (k,))

    # -- arithmetic -----------------------------------------------------------------------

    def weight_of(self, m: Monomial) -> int:
        return sum(self._weights[g] for g in m.generators)

    def monomial_degree(self, m: Monomial) -> int:
        return sum(self._degrees[g] for g in m.generators) + self.operad.degree(m.arity, m.operation)

    def degree_of(self, poly: Mapping[Monomial, Scalar]) -> int | None:
        found = {self.monomial_degree(m) for m in poly}
        if len(found) > 1:
            raise ValidationError(f"Inhomogeneous element: degrees {sorted(found)}", field="element")
        return found.pop() if found else None

    def truncate(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        return {m: c for m, c in poly.items() if self.weight_of(m) <= self.weight_cap}

    def mu(self, n: int, op: Mapping[int, Scalar], inputs: Sequence[Mapping[Monomial, Scalar]]) -> Polynomial:
        """
        ``op(a_1, ..., a_n)`` in the free algebra.

        Moving the operation of ``a_j`` past the generators of ``a_1..a_{j-1}`` costs
        ``(-1)^{|q_j| (|w_1| + ... + |w_{j-1}|)}``.
        """
        if len(inputs) != n:
            raise DimensionMismatchError(f"Operation of arity {n} got {len(inputs)} inputs", expected=n, actual=len(inputs))
        out: Polynomial = {}
        if not op or any(not x for x in inputs):
            return out
        o = self.operad
        for choice in itertools.product(*(list(x.items()) for x in inputs)):
            weight = sum(self.weight_of(m) for m, _ in choice)
            if weight > self.weight_cap:
                continue
            coeff = self.field.one
            exponent, prefix = 0, 0
            gens: tuple[int, ...] = ()
            parts = []
            for m, c in choice:
                exponent += o.degree(m.arity, m.operation) * prefix
                prefix += sum(self._degrees[g] for g in m.generators)
                coeff = coeff * c
                gens += m.generators
                parts.append((m.arity, {m.operation: self.field.one}))
            _, vec = o.gamma(n, op, parts)
            axpy(out, coeff * _sign(exponent), self.coinvariants.canonical(vec, gens))
        return out

    def product(self, symbol: str, *inputs: Mapping[Monomial, Scalar] | str) -> Polynomial:
        """``symbol(inputs...)`` with generator names allowed as inputs."""
        n, vec = self.operad.symbol(symbol)
        polys = [self.generator(x) if isinstance(x, str) else x for x in inputs]
        return self.mu(n, vec, polys)

    def evaluate(self, expr: Any) -> Polynomial:
        """A generator name, or ``(symbol, (expr, ...))`` built recursively."""
        if isinstance(expr, str):
            return self.generator(expr)
        symbol, args = expr
        return self.product(symbol, *(self.evaluate(a) for a in args))

    def d_monomial(self, m: Monomial) -> Polynomial:
        """Leibniz rule: ``d(q; x..) = (dq; x..) + sum (-1)^{|q| + |x_<i|} (q; .., dx_i, ..)``."""
        hit = self._d_memo.get(m)
        if hit is not None:
            return hit
        o, f = self.operad, self.field
        n = m.arity
        q = {m.operation: f.one}
        out: Polynomial = {}
        dq = o.d(n, q)
        if dq:
            axpy(out, 1, self.coinvariants.canonical(dq, m.generators))
        qdeg = o.degree(n, m.operation)
        singles = [self.generator(g) for g in m.generators]
        prefix = 0
        for i, g in enumerate(m.generators):
            dg = self.generators[g].differential
            if dg:
                inputs = singles[:i] + [dg] + singles[i + 1 :]
                axpy(out, _sign(qdeg + prefix), self.mu(n, q, inputs))
            prefix += self._degrees[g]
        self._d_memo[m] = out
        return out

    def d(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        out: Polynomial = {}
        for m, c in poly.items():
            axpy(out, c, self.d_monomial(m))
        return out

    # -- truncation metadata --------------------------------------------------------------

    @property
    def weight_jump(self) -> int:
        """Largest ``weight(d x) - weight(x)`` over generators (0 when all differentials are linear)."""
        jumps = [max(self.weight_of(m) for m in g.differential) - g.weight for g in self.generators if g.differential]
        return max(jumps, default=0)

    @property
    def trusted_weight(self) -> int:
        return self.weight_cap - self.weight_jump

    # -- display --------------------------------------------------------------------------

    def operation_name(self, n: int, u: int) -> str:
        label = self.operad.labels(n)[u]
        if isinstance(label, tuple) and len(label) == 2 and isinstance(label[1], tuple):
            name, images = label
            return str(name) if list(images) == sorted(images) else f"{name}[{''.join(map(str, images))}]"
        return str(label)

    def render_monomial(self, m: Monomial) -> str:
        names = [self.generators[g].name for g in m.generators]
        if m.arity == 1 and {m.operation: self.field.one} == self.operad.unit:
            return names[0]
        return f"{self.operation_name(m.arity, m.operation)}({','.join(names)})"

    def render(self, poly: Mapping[Monomial, Scalar]) -> str:
        if not poly:
            return "0"
        parts = []
        for m in sorted(poly):
            c = poly[m]
            text = self.field.format(c)
            parts.append(f"{text} {self.render_monomial(m)}")
        return " ".join(parts)

    def generator_log(self) -> list[dict[str, Any]]:
        return [
            {"name": g.name, "degree": g.degree, "d": self.render(g.differential)} for g in self.generators
        ]


# -- realization ----------------------------------------------------------------------------


class RealizedAlgebra:
    """
    Basis, differential and multiplication of a truncated presented algebra.

    With relations the algebra is the quotient of the free algebra by the dg ideal they
    generate, saturated inside the weight cap; the basis is then the set of monomials that
    are not pivots of that ideal.
    """

    def __init__(self, presentation: AlgebraPresentation, workers: int = 1, leibniz_samples: int = 24):
        self.presentation = presentation
        self.operad = presentation.operad
        self.field = presentation.field
        self.weight_cap = presentation.weight_cap
        self.name = presentation.name
        p = presentation
        if any(g.weight < 1 for g in p.generators):
            raise PresentationError("Realized algebras need generators of positive weight")
        longest = p.weight_cap // min((g.weight for g in p.generators), default=p.weight_cap)
        if p.size and self.operad.max_arity < longest:
            raise TruncationError(
                f"Weight cap {p.weight_cap} needs arity {longest} of {self.operad.name}, "
                f"which stops at {self.operad.max_arity}",
                suggestion="Raise max-arity of the operad or lower the weight cap",
            )
        self.ideal = self._saturate(p.relations) if p.relations else None
        free = self._enumerate()
        self.basis: dict[int, list[Monomial]] = {}
        for m in free:
            if self.ideal is not None and m in self.ideal.rows:
                continue
            self.basis.setdefault(p.monomial_degree(m), []).append(m)
        self.position = {m: (deg, i) for deg, ms in self.basis.items() for i, m in enumerate(ms)}
        self.complex = self._build_complex(workers)
        self.leibniz_checks = self.check_leibniz(leibniz_samples) if leibniz_samples else 0
        logger.debug(
            f"realized {self.name}: dims {self.weight_dims()} by weight, trusted weight {self.trusted_weight}"
        )

    def __repr__(self):
        return f"RealizedAlgebra({self.name}; {self.complex!r})"

    # -- construction ---------------------------------------------------------------------

    def _enumerate(self) -> list[Monomial]:
        p = self.presentation
        out = []
        for gens in multisets(p.weights, p.weight_cap, self.operad.max_arity):
            if gens:
                out.extend(Monomial(gens, u) for u in p.coinvariants.reps(gens))
        out.sort(key=lambda m: (p.weight_of(m), m))
        return out

    def _saturate(self, relations: Iterable[Polynomial]) -> Subspace:
        """Span of ``op(r, x_2, ..., x_n)`` and ``d`` over all relations, inside the cap."""
        p, f = self.presentation, self.field
        space = Subspace(f)
        work: list[Polynomial] = []

        def push(poly: Polynomial) -> None:
            if poly and space.add(poly):
                work.append(poly)

        for r in relations:
            push(p.truncate(r))
        singles = [p.generator(k) for k in range(p.size)]
        while work:
            x = work.pop()
            push(p.d(x))
            low = min(p.weight_of(m) for m in x)
            for others in multisets(p.weights, p.weight_cap - low, self.operad.max_arity - 1):
                n = len(others) + 1
                inputs = [x] + [singles[g] for g in others]
                for u in range(self.operad.dim(n)):
                    push(p.mu(n, {u: f.one}, inputs))
        logger.debug(f"ideal of {self.name}: dimension {space.dim} inside weight {p.weight_cap}")
        return space

    def _column(self, m: Monomial) -> tuple[int, dict[int, Scalar]]:
        deg = self.presentation.monomial_degree(m)
        image = self.reduce(self.presentation.d_monomial(m))
        return deg, {self.position[t][1]: c for t, c in image.items()}

    def _build_complex(self, workers: int) -> Complex:
        p = self.presentation
        order = [m for deg in sorted(self.basis) for m in self.basis[deg]]
        if workers > 1 and len(order) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                columns = list(pool.map(self._column, order))
        else:
            columns = [self._column(m) for m in order]
        cols: dict[int, list[dict[int, Scalar]]] = {deg: [] for deg in self.basis}
        for m, (deg, col) in zip(order, columns, strict=True):
            cols[deg].append(col)
            if col:
                dd = self.reduce(p.d(self.polynomial(deg + 1, col)))
                if dd:
                    raise PresentationError(
                        f"d^2 is nonzero on {p.render_monomial(m)} in {self.name}",
                        details={"monomial": p.render_monomial(m), "d2": p.render(dd)},
                    )
        mats = {deg: Matrix.from_columns(self.field, len(self.basis.get(deg + 1, [])), c) for deg, c in cols.items()}
        dims = {deg: len(ms) for deg, ms in self.basis.items()}
        weights = {deg: [p.weight_of(m) for m in ms] for deg, ms in self.basis.items()}
        return Complex(self.field, dims, mats, dict(self.basis), weights)

    # -- elements -------------------------------------------------------------------------

    @property
    def trusted_weight(self) -> int:
        return self.presentation.trusted_weight

    def reduce(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        out = self.presentation.truncate(poly)
        if self.ideal is not None and out:
            out = self.ideal.normal_form(out)
        return out

    def generator(self, name_or_index: str | int) -> Polynomial:
        return self.reduce(self.presentation.generator(name_or_index))

    def mu(self, n: int, op: Mapping[int, Scalar], inputs: Sequence[Mapping[Monomial, Scalar]]) -> Polynomial:
        return self.reduce(self.presentation.mu(n, op, inputs))

    def product(self, symbol: str, *inputs: Mapping[Monomial, Scalar] | str) -> Polynomial:
        return self.reduce(self.presentation.product(symbol, *inputs))

    def evaluate(self, expr: Any) -> Polynomial:
        return self.reduce(self.presentation.evaluate(expr))

    def d(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        return self.reduce(self.presentation.d(poly))

    def degree_of(self, poly: Mapping[Monomial, Scalar]) -> int | None:
        return self.presentation.degree_of(poly)

    def vector(self, poly: Mapping[Monomial, Scalar]) -> tuple[int | None, dict[int, Scalar]]:
        """Coordinates of a homogeneous element in the basis of its degree."""
        poly = self.reduce(poly)
        deg = self.degree_of(poly)
        return deg, {self.position[m][1]: c for m, c in poly.items()}

    def polynomial(self, degree: int, vec: Mapping[int, Scalar]) -> Polynomial:
        ms = self.basis.get(degree, [])
        return {ms[i]: c for i, c in vec.items()}

    def render(self, poly: Mapping[Monomial, Scalar]) -> str:
        return self.presentation.render(poly)

    def weight_dims(self) -> dict[int, int]:
        dims = {w: 0 for w in range(1, self.weight_cap + 1)}
        for ms in self.basis.values():
            for m in ms:
                dims[self.presentation.weight_of(m)] += 1
        return dims

    def all_monomials(self) -> list[Monomial]:
        return [m for deg in sorted(self.basis) for m in self.basis[deg]]

    # -- verification ---------------------------------------------------------------------

    def check_leibniz(self, samples: int = 24, seed: int = 0) -> int:
        """
        ``d op(a..) = (d op)(a..) + sum (-1)^{|op| + |a_<i|} op(.., d a_i, ..)`` on sampled
        operations and basis monomials; returns the number of instances checked.
        """
        monomials = self.all_monomials()
        o, p, f = self.operad, self.presentation, self.field
        arities = [n for n in range(2, min(3, self.weight_cap) + 1) if o.dim(n)]
        if not monomials or not arities:
            return 0
        rng = random.Random(seed)
        checked = 0
        for _ in range(samples):
            n = rng.choice(arities)
            u = rng.randrange(o.dim(n))
            args = [rng.choice(monomials) for _ in range(n)]
            if sum(p.weight_of(a) for a in args) > self.weight_cap:
                continue
            polys = [{a: f.one} for a in args]
            op = {u: f.one}
            lhs = self.d(self.mu(n, op, polys))
            rhs = self.mu(n, o.d(n, op), polys)
            prefix = o.degree(n, u)
            for i, a in enumerate(args):
                da = self.d(polys[i])
                if da:
                    axpy(rhs, _sign(prefix), self.mu(n, op, polys[:i] + [da] + polys[i + 1 :]))
                prefix += p.monomial_degree(a)
            if lhs != self.reduce(rhs):
                raise VerificationError(
                    f"Leibniz rule fails in {self.name} for {p.operation_name(n, u)} on "
                    f"{', '.join(p.render_monomial(a) for a in args)}",
                    identity="leibniz",
                )
            checked += 1
        return checked


@log_performance("realize")
def realize(p: AlgebraPresentation, workers: int = 1, leibniz_samples: int = 24) -> RealizedAlgebra:
    """Enumerate bases up to the weight cap, extend d by Leibniz and assert d^2 = 0."""
    return RealizedAlgebra(p, workers=workers, leibniz_samples=leibniz_samples)


def free_presentation(o: Operad, v: Sequence[tuple[str, int]], cap: int, name: str = "F") -> AlgebraPresentation:
    p = AlgebraPresentation(o, cap, name)
    for gen_name, degree in v:
        p.add_generator(gen_name, degree)
    return p


def free_algebra(o: Operad, v: Sequence[tuple[str, int]], cap: int, name: str = "F") -> RealizedAlgebra:
    """The free algebra on named generators of given degrees, truncated at ``cap``."""
    return realize(free_presentation(o, v, cap, name))


# -- maps -----------------------------------------------------------------------------------


class AlgebraMap:
    """
    Algebra map determined by generator images, optionally along an operad morphism.

    ``phi(q; x_1..x_n) = alpha(q)(phi x_1, ..., phi x_n)``; generators without an image go
    to zero.
    """

    def __init__(
        self,
        source: RealizedAlgebra,
        target: RealizedAlgebra,
        images: Mapping[str, Mapping[Monomial, Any]],
        operad_map: OperadMorphism | None = None,
        name: str = "",
    ):
        self.source = source
        self.target = target
        self.operad_map = operad_map
        self.name = name or f"{source.name}->{target.name}"
        sp = source.presentation
        f = target.field
        self.images: list[Polynomial] = []
        for g in sp.generators:
            img = target.reduce({m: f(c) for m, c in images.get(g.name, {}).items() if c})
            deg = target.degree_of(img)
            if deg is not None and deg != g.degree:
                raise ValidationError(
                    f"Image of '{g.name}' has degree {deg}, expected {g.degree}", field="map", value=g.name
                )
            self.images.append(img)
        self._memo: dict[Monomial, Polynomial] = {}
        self._chain: ChainMap | None = None

    def apply_monomial(self, m: Monomial) -> Polynomial:
        hit = self._memo.get(m)
        if hit is not None:
            return hit
        q = {m.operation: self.target.field.one}
        if self.operad_map is not None:
            q = self.operad_map.apply(m.arity, q)
        out = self.target.mu(m.arity, q, [self.images[g] for g in m.generators])
        self._memo[m] = out
        return out

    def apply(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        out: Polynomial = {}
        for m, c in poly.items():
            axpy(out, c, self.apply_monomial(m))
        return self.target.reduce(out)

    def chain_map(self, check: bool = True) -> ChainMap:
        """The underlying map of complexes; raises ChainMapError when it does not commute with d."""
        if self._chain is None:
            src, tgt = self.source, self.target
            images = {}
            for deg, ms in src.basis.items():
                images[deg] = [tgt.vector(self.apply_monomial(m))[1] for m in ms]
            self._chain = ChainMap.from_columns(src.complex, tgt.complex, images)
        if check:
            try:
                self._chain.check()
            except ChainMapError as e:
                raise ChainMapError(f"{self.name} does not commute with d: {e.message}", degree=e.degree) from e
        return self._chain

    def respects_relations(self) -> bool:
        free = self.source.presentation
        return all(not self.apply(r) for r in free.relations)

    def compose(self, other: AlgebraMap, name: str = "") -> AlgebraMap:
        """``self o other``."""
        images = {g.name: self.apply(img) for g, img in zip(other.source.presentation.generators, other.images, strict=True)}
        operad_map = other.operad_map
        if self.operad_map is not None:
            operad_map = self.operad_map if operad_map is None else self.operad_map.compose(operad_map)
        return AlgebraMap(other.source, self.target, images, operad_map, name or f"{self.name}o{other.name}")


def identity_map(a: RealizedAlgebra) -> AlgebraMap:
    return AlgebraMap(a, a, {g.name: a.generator(g.name) for g in a.presentation.generators}, name=f"id_{a.name}")


# -- cells ----------------------------------------------------------------------------------


def attach_cells(
    a: AlgebraPresentation,
    m: Complex,
    alpha: ChainMap,
    names: Mapping[tuple[int, int], str] | None = None,
    name: str | None = None,
) -> AlgebraPresentation:
    """
    ``A<M, alpha>``: a generator ``t_e`` of degree ``|e| - 1`` for every basis element e of M,
    with ``d t_e = alpha(e) - t_{d e}``.

    ``alpha`` maps M into the complex of ``realize(a)``, whose basis labels are monomials.
    New generators are appended from the top degree of M down, which keeps d triangular.
    """
    alpha.check()
    if alpha.source is not m and alpha.source.support != m.support:
        raise DimensionMismatchError("alpha does not start at M")
    b = a.copy(name or f"{a.name}<M>")
    if not m.total_dim:
        return b
    target = alpha.target
    created: dict[tuple[int, int], int] = {}
    for deg in sorted(m.support, reverse=True):
        for i in range(m.dim(deg)):
            label = m.basis_labels(deg)[i]
            gen_name = (names or {}).get((deg, i)) or (label if isinstance(label, str) else f"t{b.size}")
            image = alpha.apply(deg, {i: b.field.one})
            diff = {target.basis_labels(deg)[r]: c for r, c in image.items()}
            for r, c in m.d(deg).column(i).items():
                axpy(diff, -c, b.generator(created[(deg + 1, r)]))
            created[(deg, i)] = b.add_generator(gen_name, deg - 1, diff)
    logger.info(f"attached {m.total_dim} cells to {a.name}")
    return b


def kill_cycle(a: AlgebraPresentation, z: Mapping[Monomial, Any], name: str = "T") -> AlgebraPresentation:
    """``A<T; dT = z>`` for a cycle z of the free algebra."""
    z = {m: a.field(c) for m, c in z.items() if c}
    if a.d(z):
        raise PresentationError(f"Cannot kill {a.render(z)}: it is not a cycle", generator=name)
    deg = a.degree_of(z)
    if deg is None:
        raise PresentationError("Cannot kill the zero cycle", generator=name)
    b = a.copy(f"{a.name}<{name}>")
    b.add_generator(name, deg - 1, z)
    return b


def contractible_cells(field, degree: int, names: tuple[str, str] = ("u", "v")) -> Complex:
    """``k -> k`` in degrees ``degree, degree + 1`` with labelled basis."""
    return Complex(
        field, {degree: 1, degree + 1: 1}, {degree: Matrix.identity(field, 1)}, {degree: [names[0]], degree + 1: [names[1]]}
    )


# -- base change ----------------------------------------------------------------------------


def inverse_image(alpha: OperadMorphism, a: AlgebraPresentation, name: str | None = None) -> AlgebraPresentation:
    """``alpha^* A``: the same generators, with every operation pushed along ``alpha``."""
    if a.operad is not alpha.source:
        raise ValidationError("The presentation is not over the source of the operad map", field="operad")
    b = AlgebraPresentation(alpha.target, a.weight_cap, name or f"{alpha.name or 'alpha'}*{a.name}")

    def transport(poly: Mapping[Monomial, Scalar]) -> Polynomial:
        out: Polynomial = {}
        for m, c in poly.items():
            axpy(out, c, b.coinvariants.canonical(alpha.apply(m.arity, {m.operation: a.field.one}), m.generators))
        return out

    for g in a.generators:
        b.add_generator(g.name, g.degree, transport(g.differential), g.weight)
    for r in a.relations:
        b.add_relation(transport(r))
    return b


class DirectImage:
    """``alpha_* B``: the complex of B with operations of the source operad acting through alpha."""

    def __init__(self, alpha: OperadMorphism, b: RealizedAlgebra):
        if b.operad is not alpha.target:
            raise ValidationError("The algebra is not over the target of the operad map", field="operad")
        self.alpha = alpha
        self.algebra = b
        self.complex = b.complex

    def mu(self, n: int, op: Mapping[int, Scalar], inputs: Sequence[Mapping[Monomial, Scalar]]) -> Polynomial:
        return self.algebra.mu(n, self.alpha.apply(n, op), inputs)


def unit_map(alpha: OperadMorphism, a: RealizedAlgebra, pulled: RealizedAlgebra | None = None) -> AlgebraMap:
    """``eta_A: A -> alpha_* alpha^* A``, the identity on generators."""
    target = pulled or realize(inverse_image(alpha, a.presentation), leibniz_samples=0)
    images = {g.name: target.generator(g.name) for g in a.presentation.generators}
    return AlgebraMap(a, target, images, operad_map=alpha, name=f"eta_{a.name}")


def check_direct_image_map(eta: AlgebraMap, samples: int = 24, seed: int = 0) -> int:
    """``eta(op(a, b)) = alpha(op)(eta a, eta b)`` on sampled binary products."""
    src = eta.source
    o = src.operad
    monomials = src.all_monomials()
    if not monomials or not o.dim(2) or eta.operad_map is None:
        return 0
    pushed = DirectImage(eta.operad_map, eta.target)
    rng = random.Random(seed)
    checked = 0
    f = src.field
    for _ in range(samples):
        a, b = rng.choice(monomials), rng.choice(monomials)
        if src.presentation.weight_of(a) + src.presentation.weight_of(b) > src.weight_cap:
            continue
        op = {rng.randrange(o.dim(2)): f.one}
        lhs = eta.apply(src.mu(2, op, [{a: f.one}, {b: f.one}]))
        rhs = pushed.mu(2, op, [eta.apply({a: f.one}), eta.apply({b: f.one})])
        if lhs != rhs:
            raise VerificationError("The unit map is not an algebra map", identity="direct-image")
        checked += 1
    return checked


def arity_chain_map(alpha: OperadMorphism, n: int) -> ChainMap:
    """Component of an operad morphism in arity n as a map of complexes."""
    src, tgt = alpha.source.collection, alpha.target.collection
    source, target = src.component(n), tgt.component(n)
    spos, tpos = src.positions(n), tgt.positions(n)
    entries: dict[int, dict[tuple[int, int], Scalar]] = {}
    for i in range(src.dim(n)):
        deg, local = spos[i]
        for r, c in alpha.apply(n, {i: alpha.source.field.one}).items():
            entries.setdefault(deg, {})[(tpos[r][1], local)] = c
    comps = {
        deg: Matrix.from_entries(source.field, target.dim(deg), source.dim(deg), e) for deg, e in entries.items()
    }
    return ChainMap(source, target, comps)


@log_performance("unit quasi-isomorphism")
def check_unit_qi(alpha: OperadMorphism, a: AlgebraPresentation, window: DegreeWindow) -> Certificate:
    """
    Certify that ``eta_A: A -> alpha_* alpha^* A`` is a quasi-isomorphism in the window.

    Raises VerificationError when alpha is not a quasi-isomorphism in some arity up to the
    weight cap of A.
    """
    cert = Certificate(f"unit {alpha.name or 'alpha'} on {a.name}", bounds={"weight_cap": a.weight_cap})
    for n in range(1, a.weight_cap + 1):
        comp = arity_chain_map(alpha, n)
        comp.check()
        qi = is_quasi_iso(comp, DegreeWindow.covering(comp.source, comp.target))
        if not qi:
            raise VerificationError(
                f"The operad map is not a quasi-isomorphism in arity {n}",
                identity="operad-qi",
                details={"arity": n, "failing_degrees": list(qi.failing_degrees)},
            )
        cert.count("operad-qi")
    src = realize(a)
    eta = unit_map(alpha, src)
    chain = eta.chain_map()
    cert.count("direct-image", check_direct_image_map(eta))
    trusted = min(src.trusted_weight, eta.target.trusted_weight)
    qi = is_quasi_iso(chain, window, trusted)
    cert.count("unit-qi")
    cert.bounds.update({"trusted_degrees": list(window.trusted) if window.trusted else None, "trusted_weight": trusted})
    if not qi:
        cert.fail("unit-qi", failing_degrees=list(qi.failing_degrees))
    return cert
