"""
Enveloping algebras of presented algebras and dg modules over them.

``U(O, A)`` is the part of the free algebra on the generators of A plus one hole generator
``_`` (degree 0, weight 0) that is linear in the hole. A basis element is a canonical
monomial ``p (x) (x_{s_1}, ..., x_{s_k}; _)`` with p in ``O(k+1)``; the hole has the largest
generator index, so it always sits in the last slot. The product plugs the second factor
into the hole of the first, which is just the algebra arithmetic of the extended
presentation, and the unit is the hole itself. Relations of A enter as the hole-linear
part of the ideal they generate.
"""

from __future__ import annotations

import random
import threading
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .algebras import (
    AlgebraMap,
    AlgebraPresentation,
    Monomial,
    Polynomial,
    RealizedAlgebra,
    identity_map,
    multisets,
    realize,
)
from .complexes import (
    ChainMap,
    Complex,
    DegreeWindow,
    QuasiIsoCertificate,
    betti_numbers,
    cone,
    is_quasi_iso,
)
from .exactla import Matrix, Scalar, Subspace, accumulate, axpy, rank, scaled
from .exceptions import (
    ChainComplexError,
    ChainMapError,
    FieldArithmeticError,
    PresentationError,
    TruncationError,
    ValidationError,
    VerificationError,
)
from .free_operads import cell_operation, inclusion_morphism
from .logging_config import get_logger, log_performance
from .models import Certificate
from .operads import Operad, OperadMorphism
from .resolutions import cone_classes, leading_weight, split_cone_vector
from .symmetry import Permutation

logger = get_logger(__name__)

HOLE = "_"


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def _sample(items: list, limit: int, seed: int) -> list:
    if len(items) <= limit:
        return items
    return random.Random(seed).sample(items, limit)


class _AssociativeAlgebra:
    """Element bookkeeping and law checks shared by U and its opposite."""

    name: str
    field: Any
    operad: Operad
    weight_cap: int
    basis: dict[int, list[Monomial]]
    position: dict[Monomial, tuple[int, int]]
    complex: Complex
    one: Polynomial
    unit_monomial: Monomial

    def monomial_degree(self, m: Monomial) -> int:
        raise NotImplementedError

    def weight_of(self, m: Monomial) -> int:
        raise NotImplementedError

    def reduce(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        raise NotImplementedError

    def multiply(self, u: Mapping[Monomial, Scalar], v: Mapping[Monomial, Scalar]) -> Polynomial:
        raise NotImplementedError

    def d(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        raise NotImplementedError

    def render(self, poly: Mapping[Monomial, Scalar]) -> str:
        raise NotImplementedError

    @property
    def trusted_weight(self) -> int:
        raise NotImplementedError

    def degree_of(self, poly: Mapping[Monomial, Scalar]) -> int | None:
        found = {self.monomial_degree(m) for m in poly}
        if len(found) > 1:
            raise ValidationError(f"Inhomogeneous element: degrees {sorted(found)}", field="element")
        return found.pop() if found else None

    def vector(self, poly: Mapping[Monomial, Scalar]) -> tuple[int | None, dict[int, Scalar]]:
        poly = self.reduce(poly)
        return self.degree_of(poly), {self.position[m][1]: c for m, c in poly.items()}

    def polynomial(self, degree: int, vec: Mapping[int, Scalar]) -> Polynomial:
        ms = self.basis.get(degree, [])
        return {ms[i]: c for i, c in vec.items()}

    def all_monomials(self) -> list[Monomial]:
        return [m for deg in sorted(self.basis) for m in self.basis[deg]]

    def weight_dims(self) -> dict[int, int]:
        dims = {w: 0 for w in range(self.weight_cap + 1)}
        for m in self.all_monomials():
            dims[self.weight_of(m)] += 1
        return dims

    def check_laws(self, limit: int = 4000, seed: int = 0) -> Certificate:
        """Unit law, ``d(xy) = dx y + (-1)^{|x|} x dy`` and associativity on basis monomials."""
        f = self.field
        cap = self.weight_cap
        cert = Certificate(f"algebra laws of {self.name}", bounds={"weight_cap": cap})
        monomials = self.all_monomials()
        for m in monomials:
            x = {m: f.one}
            if self.multiply(self.one, x) != x or self.multiply(x, self.one) != x:
                raise VerificationError(f"The unit law fails on {self.render(x)}", identity="unit")
            cert.count("unit")
        pairs = [(a, b) for a in monomials for b in monomials if self.weight_of(a) + self.weight_of(b) <= cap]
        for a, b in _sample(pairs, limit, seed):
            x, y = {a: f.one}, {b: f.one}
            lhs = self.d(self.multiply(x, y))
            rhs = self.multiply(self.d(x), y)
            axpy(rhs, _sign(self.monomial_degree(a)), self.multiply(x, self.d(y)))
            if lhs != self.reduce(rhs):
                raise VerificationError(
                    f"d is not a derivation on {self.render(x)} * {self.render(y)}", identity="derivation"
                )
            cert.count("derivation")
        triples = [
            (a, b, c)
            for a, b in pairs
            for c in monomials
            if self.weight_of(a) + self.weight_of(b) + self.weight_of(c) <= cap
        ]
        for a, b, c in _sample(triples, limit, seed):
            x, y, z = {a: f.one}, {b: f.one}, {c: f.one}
            if self.multiply(self.multiply(x, y), z) != self.multiply(x, self.multiply(y, z)):
                raise VerificationError(
                    f"Associativity fails on {self.render(x)}, {self.render(y)}, {self.render(z)}",
                    identity="associativity",
                )
            cert.count("associativity")
        cert.skipped = max(len(pairs) - limit, 0) + max(len(triples) - limit, 0)
        if cert.skipped:
            cert.notices.append(f"sampled {limit} of the pairs and triples")
        return cert


class EnvelopingAlgebra(_AssociativeAlgebra):
    """
    ``U(O, A)`` up to a weight cap, with its complex, product and differential.

    Args:
        presentation: generators (positive weights) and relations of A
        weight_cap: defaults to the cap of the presentation
        workers: threads used for the columns of d
    """

    def __init__(
        self,
        presentation: AlgebraPresentation,
        weight_cap: int | None = None,
        workers: int = 1,
        name: str | None = None,
    ):
        a = presentation
        o = a.operad
        cap = weight_cap or a.weight_cap
        self.presentation = a
        self.operad = o
        self.field = a.field
        self.weight_cap = cap
        self.name = name or f"U({a.name})"
        if any(g.weight < 1 for g in a.generators):
            raise PresentationError("Enveloping algebras need generators of positive weight")
        longest = cap // min(a.weights, default=cap) + 1 if a.size else 1
        if o.max_arity < longest:
            raise TruncationError(
                f"Weight cap {cap} needs arity {longest} of {o.name}, which stops at {o.max_arity}",
                suggestion="Raise max-arity of the operad by one above the weight cap",
            )
        self.extended = a.copy(f"{a.name}+{HOLE}", weight_cap=cap)
        ext = self.extended
        self.hole = ext.add_generator(HOLE, 0, weight=0)
        self._singles = [ext.generator(g) for g in range(ext.size)]
        self.one = ext.generator(self.hole)
        self.unit_monomial = next(iter(self.one))
        self.ideal = self._hole_ideal() if a.relations else None
        self.basis: dict[int, list[Monomial]] = {}
        for gens in multisets(a.weights, cap, o.max_arity - 1):
            full = gens + (self.hole,)
            for u in ext.coinvariants.reps(full):
                m = Monomial(full, u)
                if self.ideal is not None and m in self.ideal.rows:
                    continue
                self.basis.setdefault(ext.monomial_degree(m), []).append(m)
        for ms in self.basis.values():
            ms.sort(key=lambda m: (ext.weight_of(m), m))
        self.position = {m: (deg, i) for deg, ms in self.basis.items() for i, m in enumerate(ms)}
        self._products: dict[tuple[Monomial, Monomial], Polynomial] = {}
        self._lock = threading.Lock()
        self._opposite: OppositeAlgebra | None = None
        self.complex = self._build_complex(workers)
        logger.debug(f"{self.name}: dims {self.weight_dims()} by weight")

    def __repr__(self):
        return f"EnvelopingAlgebra({self.name}; {self.complex!r})"

    # -- construction ---------------------------------------------------------------------

    def _hole_ideal(self) -> Subspace:
        """Span of ``p(i, x_1, ..., x_k, _)`` over a basis of the ideal of A."""
        a, ext, o, f = self.presentation, self.extended, self.operad, self.field
        base = RealizedAlgebra(a.copy(weight_cap=self.weight_cap), leibniz_samples=0).ideal
        polys = []
        hole = self._singles[self.hole]
        for row in base.basis():
            low = min(ext.weight_of(m) for m in row)
            for others in multisets(a.weights, self.weight_cap - low, o.max_arity - 2):
                n = len(others) + 2
                inputs = [row] + [self._singles[g] for g in others] + [hole]
                for u in range(o.dim(n)):
                    polys.append(ext.mu(n, {u: f.one}, inputs))
        space = Subspace.spanned_by(f, polys)
        logger.debug(f"hole-linear ideal of {self.name}: dimension {space.dim}")
        return space

    def _column(self, m: Monomial) -> tuple[int, dict[int, Scalar]]:
        image = self.reduce(self.extended.d_monomial(m))
        return self.monomial_degree(m), {self.position[t][1]: c for t, c in image.items()}

    def _build_complex(self, workers: int) -> Complex:
        order = self.all_monomials()
        if workers > 1 and len(order) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                columns = list(pool.map(self._column, order))
        else:
            columns = [self._column(m) for m in order]
        cols: dict[int, list[dict[int, Scalar]]] = {deg: [] for deg in self.basis}
        for m, (deg, col) in zip(order, columns, strict=True):
            cols[deg].append(col)
            if col and self.d(self.polynomial(deg + 1, col)):
                raise PresentationError(
                    f"d^2 is nonzero on {self.render({m: self.field.one})} in {self.name}",
                    details={"monomial": self.render({m: self.field.one})},
                )
        mats = {deg: Matrix.from_columns(self.field, len(self.basis.get(deg + 1, [])), c) for deg, c in cols.items()}
        dims = {deg: len(ms) for deg, ms in self.basis.items()}
        weights = {deg: [self.weight_of(m) for m in ms] for deg, ms in self.basis.items()}
        return Complex(self.field, dims, mats, dict(self.basis), weights)

    # -- arithmetic -----------------------------------------------------------------------

    @property
    def trusted_weight(self) -> int:
        return self.extended.trusted_weight

    def monomial_degree(self, m: Monomial) -> int:
        return self.extended.monomial_degree(m)

    def weight_of(self, m: Monomial) -> int:
        return self.extended.weight_of(m)

    def reduce(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        out = self.extended.truncate(poly)
        if self.ideal is not None and out:
            out = self.ideal.normal_form(out)
        return out

    def multiply_monomials(self, x: Monomial, y: Monomial) -> Polynomial:
        key = (x, y)
        with self._lock:
            hit = self._products.get(key)
        if hit is not None:
            return hit
        inputs = [self._singles[g] for g in x.generators[:-1]] + [{y: self.field.one}]
        out = self.reduce(self.extended.mu(x.arity, {x.operation: self.field.one}, inputs))
        with self._lock:
            self._products[key] = out
        return out

    def multiply(self, u: Mapping[Monomial, Scalar], v: Mapping[Monomial, Scalar]) -> Polynomial:
        out: Polynomial = {}
        for x, a in u.items():
            for y, b in v.items():
                axpy(out, a * b, self.multiply_monomials(x, y))
        return out

    def d(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        return self.reduce(self.extended.d(poly))

    def element(self, expr: Any) -> Polynomial:
        """An expression of the extended presentation in which ``_`` is the hole."""
        poly = self.reduce(self.extended.evaluate(expr))
        if any(m.generators.count(self.hole) != 1 for m in poly):
            raise ValidationError("Elements of U must use the hole exactly once", field="element")
        return poly

    def left_multiplier(self, symbol: str, *inputs: str) -> Polynomial:
        """``symbol(inputs..., _)``, the operator of multiplying by the inputs."""
        return self.element((symbol, tuple(inputs) + (HOLE,)))

    def render_monomial(self, m: Monomial) -> str:
        return "1" if m == self.unit_monomial else self.extended.render_monomial(m)

    def render(self, poly: Mapping[Monomial, Scalar]) -> str:
        if not poly:
            return "0"
        return " ".join(f"{self.field.format(poly[m])} {self.render_monomial(m)}" for m in sorted(poly))

    def opposite(self) -> OppositeAlgebra:
        if self._opposite is None:
            self._opposite = OppositeAlgebra(self)
        return self._opposite

    # -- filtration -----------------------------------------------------------------------

    def multi_index(self, m: Monomial) -> tuple[int, ...]:
        """Generator counts of m, last generator first, so that tuple order is inverse lexicographic."""
        counts = [0] * self.presentation.size
        for g in m.generators:
            if g != self.hole:
                counts[g] += 1
        return tuple(reversed(counts))

    def check_filtration(self) -> Certificate:
        """Every term of ``d m`` has a multi-index at most that of m."""
        cert = Certificate(f"filtration of {self.name}", bounds={"weight_cap": self.weight_cap})
        for m in self.all_monomials():
            key = self.multi_index(m)
            for t in self.extended.d_monomial(m):
                if self.multi_index(t) > key:
                    raise VerificationError(
                        f"d raises the filtration on {self.render_monomial(m)}",
                        identity="filtration",
                        details={"monomial": self.render_monomial(m), "term": self.extended.render_monomial(t)},
                    )
            cert.count("filtration")
        return cert


class OppositeAlgebra(_AssociativeAlgebra):
    """``U^op``: the same complex with ``x *_op y = (-1)^{|x||y|} y x``."""

    def __init__(self, base: EnvelopingAlgebra):
        self.base = base
        self.name = f"{base.name}^op"
        self.field = base.field
        self.operad = base.operad
        self.weight_cap = base.weight_cap
        self.basis = base.basis
        self.position = base.position
        self.complex = base.complex
        self.one = base.one
        self.unit_monomial = base.unit_monomial

    @property
    def trusted_weight(self) -> int:
        return self.base.trusted_weight

    def monomial_degree(self, m: Monomial) -> int:
        return self.base.monomial_degree(m)

    def weight_of(self, m: Monomial) -> int:
        return self.base.weight_of(m)

    def reduce(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        return self.base.reduce(poly)

    def d(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        return self.base.d(poly)

    def render(self, poly: Mapping[Monomial, Scalar]) -> str:
        return self.base.render(poly)

    def multiply(self, u: Mapping[Monomial, Scalar], v: Mapping[Monomial, Scalar]) -> Polynomial:
        out: Polynomial = {}
        for x, a in u.items():
            for y, b in v.items():
                sign = _sign(self.monomial_degree(x) * self.monomial_degree(y))
                axpy(out, a * b * sign, self.base.multiply_monomials(y, x))
        return out

    def opposite(self) -> EnvelopingAlgebra:
        return self.base


@log_performance("enveloping algebra")
def enveloping(a: AlgebraPresentation, cap: int | None = None, workers: int = 1) -> EnvelopingAlgebra:
    """``U(O, A)`` with its laws asserted on basis monomials."""
    u = EnvelopingAlgebra(a, cap, workers=workers)
    u.check_laws()
    u.check_filtration()
    return u


def graded_formula_dims(a: AlgebraPresentation, cap: int | None = None) -> dict[int, int]:
    """
    Weight dimensions of U for a free presentation by averaging characters.

    The part on a multiset S of generators is the coinvariant space of ``O(|S|+1)`` under
    the stabilizer of S (fixing the hole) twisted by Koszul signs, whose dimension is the
    average of ``sign(g) trace(g)``.
    """
    o, f = a.operad, a.field
    cap = cap or a.weight_cap
    if a.relations:
        raise ValidationError("The graded formula applies to free presentations", field="presentation")
    degrees = [g.degree for g in a.generators]
    dims = {w: 0 for w in range(cap + 1)}
    for gens in multisets(a.weights, cap, o.max_arity - 1):
        n = len(gens) + 1
        group = [
            s
            for s in Permutation.all_permutations(n - 1)
            if all(gens[s(i + 1) - 1] == gens[i] for i in range(n - 1))
        ]
        if f.divides_group_order(len(group)):
            raise FieldArithmeticError(
                f"Character averaging over a group of order {len(group)} is impossible in {f.name}",
                characteristic=f.characteristic,
            )
        total = f.zero
        for s in group:
            exponent = sum(
                degrees[gens[i]] * degrees[gens[j]]
                for i in range(n - 1)
                for j in range(i + 1, n - 1)
                if s(i + 1) > s(j + 1)
            )
            sigma = Permutation(s.images + (n,))
            trace = sum((o.act(n, {p: f.one}, sigma).get(p, f.zero) for p in range(o.dim(n))), f.zero)
            total += _sign(exponent) * trace
        dims[sum(a.weights[g] for g in gens)] += int(total * f.inverse(f(len(group))))
    return dims


# -- maps -------------------------------------------------------------------------------------


class EnvelopingMap:
    """
    ``U(f)`` for an algebra map given on generators, optionally along an operad morphism:
    ``p (x) (x..; _) -> alpha(p) (x) (f x..; _)``.
    """

    def __init__(
        self,
        source: EnvelopingAlgebra,
        target: EnvelopingAlgebra,
        images: Sequence[Mapping[Monomial, Scalar]],
        operad_map: OperadMorphism | None = None,
        name: str = "U(f)",
    ):
        if len(images) != source.presentation.size:
            raise ValidationError(
                f"{len(images)} generator images for {source.presentation.size} generators", field="images"
            )
        self.source = source
        self.target = target
        self.images = [dict(img) for img in images]
        self.operad_map = operad_map
        self.name = name
        self._memo: dict[Monomial, Polynomial] = {}
        self._chain: ChainMap | None = None

    @classmethod
    def from_algebra_map(cls, f: AlgebraMap, source: EnvelopingAlgebra, target: EnvelopingAlgebra) -> EnvelopingMap:
        if source.presentation.names != f.source.presentation.names:
            raise ValidationError("U(A) is not built on the source presentation of the map", field="source")
        if target.presentation.names != f.target.presentation.names:
            raise ValidationError("U(B) is not built on the target presentation of the map", field="target")
        return cls(source, target, f.images, f.operad_map, name=f"U({f.name})")

    @classmethod
    def inclusion(cls, source: EnvelopingAlgebra, target: EnvelopingAlgebra) -> EnvelopingMap:
        """Induced by a generator-name inclusion of presentations over the same operad."""
        images = [target.extended.generator(name) for name in source.presentation.names]
        return cls(source, target, images, name=f"{source.name}->{target.name}")

    def apply_monomial(self, m: Monomial) -> Polynomial:
        hit = self._memo.get(m)
        if hit is not None:
            return hit
        f = self.target.field
        q = {m.operation: f.one}
        if self.operad_map is not None:
            q = self.operad_map.apply(m.arity, q)
        inputs = [self.images[g] for g in m.generators[:-1]] + [self.target.one]
        out = self.target.reduce(self.target.extended.mu(m.arity, q, inputs))
        self._memo[m] = out
        return out

    def apply(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        out: Polynomial = {}
        for m, c in poly.items():
            axpy(out, c, self.apply_monomial(m))
        return out

    def chain_map(self, check: bool = True) -> ChainMap:
        if self._chain is None:
            src, tgt = self.source, self.target
            images = {deg: [tgt.vector(self.apply_monomial(m))[1] for m in ms] for deg, ms in src.basis.items()}
            self._chain = ChainMap.from_columns(src.complex, tgt.complex, images)
        if check:
            try:
                self._chain.check()
            except ChainMapError as e:
                raise ChainMapError(f"{self.name} does not commute with d: {e.message}", degree=e.degree) from e
        return self._chain

    def check_multiplicative(self, limit: int = 400, seed: int = 0) -> int:
        src, f = self.source, self.source.field
        monomials = src.all_monomials()
        pairs = [(a, b) for a in monomials for b in monomials if src.weight_of(a) + src.weight_of(b) <= src.weight_cap]
        for a, b in _sample(pairs, limit, seed):
            x, y = {a: f.one}, {b: f.one}
            if self.apply(src.multiply(x, y)) != self.target.multiply(self.apply(x), self.apply(y)):
                raise VerificationError(
                    f"{self.name} is not multiplicative on {src.render(x)}, {src.render(y)}", identity="multiplicative"
                )
        return min(len(pairs), limit)

    def is_quasi_iso(self, window: DegreeWindow) -> QuasiIsoCertificate:
        trusted = min(self.source.trusted_weight, self.target.trusted_weight)
        return is_quasi_iso(self.chain_map(), window, trusted)


def check_prefix_colimit(a: AlgebraPresentation, cap: int | None = None) -> Certificate:
    """U of every generator prefix maps injectively and multiplicatively into U of the whole."""
    if a.relations:
        raise ValidationError("Prefix colimits are taken over cell presentations without relations", field="presentation")
    full = EnvelopingAlgebra(a, cap)
    cert = Certificate(f"prefix colimit of {full.name}", bounds={"weight_cap": full.weight_cap})
    for k in range(a.size):
        part = EnvelopingAlgebra(a.prefix(k), full.weight_cap)
        phi = EnvelopingMap.inclusion(part, full)
        chain = phi.chain_map()
        if not chain.is_injective():
            raise VerificationError(f"U of the first {k} generators does not embed", identity="prefix", details={"prefix": k})
        cert.count("prefix-injective")
        cert.count("prefix-multiplicative", phi.check_multiplicative())
    return cert


# -- coequalizer description ----------------------------------------------------------------


def restricted_presentation(
    b: RealizedAlgebra, alpha: OperadMorphism | None = None, name: str | None = None
) -> AlgebraPresentation:
    """
    A presentation of B (or of ``alpha_* B``) by all of its basis elements.

    One generator per basis monomial, with the linear differential of B, and one relation
    ``p(g_1, ..., g_k) - g_{p(b_1, ..., b_k)}`` per operation p and multiset of basis elements.
    """
    o = alpha.source if alpha is not None else b.operad
    f = b.field
    p = AlgebraPresentation(o, b.weight_cap, name or f"res({b.name})")
    index: dict[Monomial, int] = {}
    taken: set[str] = set()
    for deg in sorted(b.basis, reverse=True):
        for m in b.basis[deg]:
            label = f"[{b.presentation.render_monomial(m)}]"
            while label in taken:
                label += "'"
            taken.add(label)
            diff: Polynomial = {}
            for t, c in b.d({m: f.one}).items():
                axpy(diff, c, p.generator(index[t]))
            index[m] = p.add_generator(label, deg, diff, b.presentation.weight_of(m))
    p.basis_monomials = {k: m for m, k in index.items()}
    unit = o.unit
    for gens in multisets(p.weights, p.weight_cap, o.max_arity):
        if not gens:
            continue
        n = len(gens)
        for u in range(o.dim(n)):
            op = {u: f.one}
            if n == 1 and op == unit:
                continue
            pushed = alpha.apply(n, op) if alpha is not None else op
            value = b.mu(n, pushed, [{p.basis_monomials[g]: f.one} for g in gens])
            rel = p.mu(n, op, [p.generator(g) for g in gens])
            for t, c in value.items():
                axpy(rel, -c, p.generator(index[t]))
            p.add_relation(rel)
    return p


def check_coequalizer(a: AlgebraPresentation, cap: int | None = None) -> Certificate:
    """U from the presentation and U from the multiplication table of ``realize(a)`` agree."""
    direct = EnvelopingAlgebra(a, cap)
    table = EnvelopingAlgebra(restricted_presentation(realize(a.copy(weight_cap=direct.weight_cap), leibniz_samples=0)))
    cert = Certificate(f"coequalizer cross-check of {direct.name}", bounds={"weight_cap": direct.weight_cap})
    for deg in sorted(set(direct.complex.support) | set(table.complex.support)):
        if direct.complex.dim(deg) != table.complex.dim(deg):
            cert.fail("coequalizer", degree=deg, graded=direct.complex.dim(deg), table=table.complex.dim(deg))
            return cert
        cert.count("degree-dims")
    if direct.weight_dims() != table.weight_dims():
        cert.fail("coequalizer", graded=direct.weight_dims(), table=table.weight_dims())
    cert.count("weight-dims")
    return cert


# -- modules ----------------------------------------------------------------------------------


class UModule:
    """
    dg module over U (or over ``U^op`` for right modules) on a weight-graded complex.

    ``action(u, degree, i)`` is ``u . e_i`` for a basis monomial u and the i-th basis element
    in ``degree``, as a vector in degree ``degree + |u|``.
    """

    def __init__(
        self,
        algebra: _AssociativeAlgebra,
        complex: Complex,
        action: Callable[[Monomial, int, int], Mapping[int, Scalar]],
        name: str = "M",
        trusted_weight: int | None = None,
    ):
        self.algebra = algebra
        self.complex = complex
        self.field = complex.field
        self.name = name
        self._action = action
        self._memo: dict[tuple[Monomial, int, int], dict[int, Scalar]] = {}
        self.trusted_weight = trusted_weight if trusted_weight is not None else algebra.trusted_weight

    def __repr__(self):
        return f"UModule({self.name} over {self.algebra.name}; {self.complex!r})"

    def weight(self, degree: int, i: int) -> int:
        ws = self.complex.weights(degree)
        return ws[i] if ws else 0

    def act_monomial(self, u: Monomial, degree: int, i: int) -> dict[int, Scalar]:
        key = (u, degree, i)
        hit = self._memo.get(key)
        if hit is None:
            hit = {r: c for r, c in self._action(u, degree, i).items() if c}
            self._memo[key] = hit
        return hit

    def act(self, u: Mapping[Monomial, Scalar], degree: int, vec: Mapping[int, Scalar]) -> tuple[int | None, dict[int, Scalar]]:
        deg_u = self.algebra.degree_of(u)
        if deg_u is None or not vec:
            return None, {}
        out: dict[int, Scalar] = {}
        for m, c in u.items():
            for i, v in vec.items():
                axpy(out, c * v, self.act_monomial(m, degree, i))
        return degree + deg_u, out

    def elements(self) -> list[tuple[int, int]]:
        return [(deg, i) for deg in self.complex.support for i in range(self.complex.dim(deg))]

    def check(self, limit: int = 2000, seed: int = 0) -> Certificate:
        """Unit, ``u(v m) = (uv) m`` and ``d(u m) = du m + (-1)^{|u|} u dm`` on basis elements."""
        alg, x, f = self.algebra, self.complex, self.field
        cap = alg.weight_cap
        cert = Certificate(f"module laws of {self.name}", bounds={"weight_cap": cap})
        elements = self.elements()
        monomials = alg.all_monomials()
        for deg, i in elements:
            if self.act(alg.one, deg, {i: f.one})[1] != {i: f.one}:
                raise VerificationError(f"The unit of {alg.name} does not act as the identity", identity="module-unit")
            cert.count("unit")
        pairs = [(u, e) for u in monomials for e in elements if alg.weight_of(u) + self.weight(*e) <= cap]
        for u, (deg, i) in _sample(pairs, limit, seed):
            e = {i: f.one}
            out_deg, ue = self.act({u: f.one}, deg, e)
            lhs = x.apply_d(out_deg, ue) if ue else {}
            du = alg.d({u: f.one})
            rhs = self.act(du, deg, e)[1] if du else {}
            de = x.apply_d(deg, e)
            if de:
                axpy(rhs, _sign(alg.monomial_degree(u)), self.act({u: f.one}, deg + 1, de)[1])
            if lhs != rhs:
                raise VerificationError(
                    f"The action of {alg.render({u: f.one})} on {self.name} is not compatible with d",
                    identity="module-leibniz",
                    details={"degree": deg, "index": i},
                )
            cert.count("leibniz")
        triples = [(u, v, e) for u, e in pairs for v in monomials if alg.weight_of(u) + alg.weight_of(v) + self.weight(*e) <= cap]
        for u, v, (deg, i) in _sample(triples, limit, seed):
            inner_deg, inner = self.act({v: f.one}, deg, {i: f.one})
            lhs = self.act({u: f.one}, inner_deg, inner)[1] if inner else {}
            uv = alg.multiply({u: f.one}, {v: f.one})
            rhs = self.act(uv, deg, {i: f.one})[1] if uv else {}
            if lhs != rhs:
                raise VerificationError(
                    f"The action on {self.name} is not associative", identity="module-associativity",
                    details={"degree": deg, "index": i},
                )
            cert.count("associativity")
        return cert


def trivial_module(algebra: _AssociativeAlgebra, degree: int = 0, name: str = "k") -> UModule:
    """k in one degree: the unit acts by 1, everything else by 0. Needs ``O(1) = k``."""
    if algebra.operad.dim(1) != 1:
        raise ValidationError(
            f"The trivial module needs O(1) = k, but {algebra.operad.name}(1) has dimension {algebra.operad.dim(1)}",
            field="operad",
        )
    f = algebra.field
    unit = algebra.unit_monomial

    def action(u: Monomial, deg: int, i: int) -> dict[int, Scalar]:
        return {0: f.one} if u == unit else {}

    return UModule(algebra, Complex.point(f, degree, label="1", weight=0), action, name=name)


def module_along(u: EnvelopingAlgebra, f: AlgebraMap, name: str | None = None) -> UModule:
    """B as a left U(A)-module through ``f: A -> B``: ``p (x) (x..; _)`` acts by ``b -> alpha(p)(f x.., b)``."""
    if u.presentation.names != f.source.presentation.names:
        raise ValidationError("U is not built on the source presentation of the map", field="algebra")
    b = f.target
    one = b.field.one

    def action(m: Monomial, deg: int, i: int) -> dict[int, Scalar]:
        q = {m.operation: one}
        if f.operad_map is not None:
            q = f.operad_map.apply(m.arity, q)
        inputs = [f.images[g] for g in m.generators[:-1]] + [{b.basis[deg][i]: one}]
        value = b.mu(m.arity, q, inputs)
        return b.vector(value)[1] if value else {}

    return UModule(u, b.complex, action, name=name or b.name, trusted_weight=min(u.trusted_weight, b.trusted_weight))


def regular_module(u: EnvelopingAlgebra, a: RealizedAlgebra, name: str | None = None) -> UModule:
    """A as a left module: ``p (x) (x..; _)`` acts by ``b -> p(x.., b)``."""
    return module_along(u, identity_map(a), name)


# -- semifree modules -------------------------------------------------------------------------

Element = dict[tuple[Monomial, int], Scalar]


@dataclass
class ModuleGenerator:
    name: str
    degree: int
    weight: int = 0
    differential: Element = field(default_factory=dict)


class SemifreeModule(UModule):
    """
    ``(+)_j U e_j`` with ``d e_j`` a combination of ``u e_k`` over earlier generators k.

    The basis is the set of pairs ``(u, j)`` with ``weight(u) + weight(e_j)`` within the cap,
    and ``d(u e_j) = du e_j + (-1)^{|u|} u de_j``.
    """

    def __init__(
        self,
        algebra: _AssociativeAlgebra,
        generators: Sequence[ModuleGenerator] = (),
        name: str = "P",
        workers: int = 1,
    ):
        self.algebra = algebra
        self.name = name
        self.generators: list[ModuleGenerator] = []
        for g in generators:
            self._check_generator(g)
            self.generators.append(g)
        cap = algebra.weight_cap
        self.basis: dict[int, list[tuple[Monomial, int]]] = {}
        for j, g in enumerate(self.generators):
            for u in algebra.all_monomials():
                if algebra.weight_of(u) + g.weight <= cap:
                    self.basis.setdefault(algebra.monomial_degree(u) + g.degree, []).append((u, j))
        self.position = {e: (deg, i) for deg, es in self.basis.items() for i, e in enumerate(es)}
        jump = max((self.element_weight(de) - g.weight for g in self.generators for de in [g.differential] if de), default=0)
        super().__init__(algebra, self._build_complex(workers), self._act_basis, name, algebra.trusted_weight - jump)

    def _check_generator(self, g: ModuleGenerator) -> None:
        k = len(self.generators)
        for (u, j), _ in g.differential.items():
            if j >= k:
                raise PresentationError(f"d({g.name}) uses a later generator", generator=g.name)
            if self.algebra.monomial_degree(u) + self.generators[j].degree != g.degree + 1:
                raise PresentationError(f"d({g.name}) is not of degree {g.degree + 1}", generator=g.name)
            if self.algebra.weight_of(u) + self.generators[j].weight < g.weight:
                raise PresentationError(f"d({g.name}) has a term of weight below {g.weight}", generator=g.name)

    def _build_complex(self, workers: int) -> Complex:
        f = self.algebra.field
        order = [(deg, e) for deg in sorted(self.basis) for e in self.basis[deg]]

        def column(item):
            deg, e = item
            return self.vector(self.d_element({e: f.one}))[1]

        if workers > 1 and len(order) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                columns = list(pool.map(column, order))
        else:
            columns = [column(item) for item in order]
        cols: dict[int, list[dict[int, Scalar]]] = {deg: [] for deg in self.basis}
        for (deg, _), col in zip(order, columns, strict=True):
            cols[deg].append(col)
        mats = {deg: Matrix.from_columns(f, len(self.basis.get(deg + 1, [])), c) for deg, c in cols.items()}
        dims = {deg: len(es) for deg, es in self.basis.items()}
        labels = {deg: [(self.algebra.render({u: f.one}), self.generators[j].name) for u, j in es] for deg, es in self.basis.items()}
        weights = {deg: [self.algebra.weight_of(u) + self.generators[j].weight for u, j in es] for deg, es in self.basis.items()}
        try:
            return Complex(f, dims, mats, labels, weights)
        except ChainComplexError as e:
            raise PresentationError(f"d^2 is nonzero on {self.name}: {e.message}") from e

    @property
    def rank(self) -> int:
        return len(self.generators)

    def element_weight(self, x: Element) -> int:
        return max((self.algebra.weight_of(u) + self.generators[j].weight for u, j in x), default=0)

    def element_degree(self, x: Element) -> int | None:
        found = {self.algebra.monomial_degree(u) + self.generators[j].degree for u, j in x}
        return found.pop() if len(found) == 1 else None

    def _truncate(self, x: Element) -> Element:
        cap = self.algebra.weight_cap
        return {(u, j): c for (u, j), c in x.items() if self.algebra.weight_of(u) + self.generators[j].weight <= cap}

    def left_multiply(self, u: Mapping[Monomial, Scalar], x: Element) -> Element:
        out: Element = {}
        f = self.algebra.field
        for (v, k), c in x.items():
            for w, a in self.algebra.multiply(u, {v: f.one}).items():
                accumulate(out, (w, k), a * c)
        return self._truncate(out)

    def d_element(self, x: Element) -> Element:
        alg, f = self.algebra, self.algebra.field
        out: Element = {}
        for (u, j), c in x.items():
            for v, a in alg.d({u: f.one}).items():
                accumulate(out, (v, j), c * a)
            de = self.generators[j].differential
            if de:
                axpy(out, c * _sign(alg.monomial_degree(u)), self.left_multiply({u: f.one}, de))
        return self._truncate(out)

    def vector(self, x: Element) -> tuple[int | None, dict[int, Scalar]]:
        x = self._truncate(x)
        return self.element_degree(x), {self.position[e][1]: c for e, c in x.items()}

    def element(self, degree: int, vec: Mapping[int, Scalar]) -> Element:
        es = self.basis.get(degree, [])
        return {es[i]: c for i, c in vec.items()}

    def _act_basis(self, u: Monomial, degree: int, i: int) -> dict[int, Scalar]:
        x = self.left_multiply({u: self.algebra.field.one}, {self.basis[degree][i]: self.algebra.field.one})
        return self.vector(x)[1] if x else {}

    def generator_log(self) -> list[dict[str, Any]]:
        f = self.algebra.field
        out = []
        for g in self.generators:
            terms = [
                f"{f.format(c)} {self.algebra.render({u: f.one})}.{self.generators[k].name}"
                for (u, k), c in sorted(g.differential.items(), key=lambda t: (t[0][1], t[0][0]))
            ]
            out.append({"name": g.name, "degree": g.degree, "weight": g.weight, "d": " ".join(terms) or "0"})
        return out


def free_module(algebra: _AssociativeAlgebra, degrees: Sequence[int], name: str = "F") -> SemifreeModule:
    """Free module on generators of the given degrees (weight 0, no differential)."""
    gens = [ModuleGenerator(f"e{j}", deg) for j, deg in enumerate(degrees)]
    return SemifreeModule(algebra, gens, name=name)


# -- semifree resolutions ---------------------------------------------------------------------


@dataclass
class ModuleResolution:
    module: SemifreeModule
    epsilon: ChainMap
    certificate: Certificate
    images: list[tuple[int, dict[int, Scalar]]]  # epsilon of each generator
    stages: list[list[int]] = field(default_factory=list)  # generator degrees added per stage
    unresolved: list[dict[str, Any]] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.unresolved


def _augmentation(p: SemifreeModule, m: UModule, images: Sequence[tuple[int, dict[int, Scalar]]]) -> ChainMap:
    f = m.field
    cols = {}
    for deg, es in p.basis.items():
        cols[deg] = []
        for u, j in es:
            gen_deg, vec = images[j]
            cols[deg].append(m.act({u: f.one}, gen_deg, vec)[1] if vec else {})
    eps = ChainMap.from_columns(p.complex, m.complex, cols)
    try:
        eps.check()
    except ChainMapError as e:
        raise VerificationError(f"The augmentation onto {m.name} is not a chain map", identity="augmentation") from e
    return eps


def _module_generators(m: UModule, degree_floor: int, prefix: str) -> tuple[list[ModuleGenerator], list]:
    """Basis elements of M outside ``U_+ M``; non-cycles come with a contractible partner."""
    alg, x, f = m.algebra, m.complex, m.field
    products: dict[int, list[dict[int, Scalar]]] = {}
    for u in alg.all_monomials():
        if alg.weight_of(u) < 1:
            continue
        for deg, i in m.elements():
            vec = m.act_monomial(u, deg, i)
            if vec:
                products.setdefault(deg + alg.monomial_degree(u), []).append(vec)
    decomposable = {deg: Subspace.spanned_by(f, vecs) for deg, vecs in products.items()}
    gens: list[ModuleGenerator] = []
    images: list[tuple[int, dict[int, Scalar]]] = []
    for deg in sorted(x.support, reverse=True):
        if deg < degree_floor:
            continue
        space = decomposable.get(deg, Subspace(f))
        for i in space.complement(range(x.dim(deg))):
            w = m.weight(deg, i)
            db = x.apply_d(deg, {i: f.one})
            if not db:
                gens.append(ModuleGenerator(f"{prefix}{len(gens)}", deg, w))
                images.append((deg, {i: f.one}))
                continue
            gens.append(ModuleGenerator(f"{prefix}{len(gens)}", deg + 1, w))
            images.append((deg + 1, db))
            partner = {(alg.unit_monomial, len(gens) - 1): f.one}
            gens.append(ModuleGenerator(f"{prefix}{len(gens)}", deg, w, partner))
            images.append((deg, {i: f.one}))
    return gens, images


@log_performance("semifree resolution")
def semifree_resolve(
    m: UModule,
    degree_floor: int = -4,
    mode: str = "minimal",
    stage_cap: int = 8,
    workers: int = 1,
    prefix: str = "e",
) -> ModuleResolution:
    """
    Semifree ``P -> M`` by killing the homology of the cone of the augmentation.

    Stage 0 takes the basis elements of M that are not in ``U_+ M``. A cone class ``(c, b)``
    in degree n adds a generator e of degree n with ``d e = c`` and ``e -> -b``; its weight is
    the leading weight of the class. Modes and stage cap work as for algebra resolutions.
    """
    if mode not in ("minimal", "full"):
        raise ValidationError(f"Unknown resolution mode '{mode}'", field="mode", value=mode, expected_format="minimal or full")
    gens, images = _module_generators(m, degree_floor, prefix)
    stages = [[g.degree for g in gens]]
    cert = Certificate(
        f"semifree resolution of {m.name}",
        bounds={"degree_floor": degree_floor, "stage_cap": stage_cap, "weight_cap": m.algebra.weight_cap, "mode": mode},
    )
    stage = 0
    unresolved: list[dict[str, Any]] = []
    while True:
        p = SemifreeModule(m.algebra, gens, name=f"P({m.name})", workers=workers)
        eps = _augmentation(p, m, images)
        x = cone(eps)
        trusted = min(p.trusted_weight, m.trusted_weight)
        top = max(x.support, default=degree_floor)
        degrees = list(range(top, degree_floor - 1, -1))
        groups = cone_classes(x, degrees, trusted, workers)
        pending = [(n, rep) for n in degrees for rep in groups[n].representatives]
        logger.debug(f"module stage {stage}: {len(pending)} cone classes, weight <= {trusted}")
        if not pending:
            break
        if stage >= stage_cap:
            unresolved = [{"degree": n, "weight": leading_weight(x, n, rep)} for n, rep in pending]
            cert.fail("resolution", unresolved=unresolved)
            cert.notices.append(f"stopped after {stage} stages with {len(unresolved)} classes left")
            logger.warning(f"semifree resolution of {m.name} stopped at the stage cap")
            break
        if mode == "minimal":
            n = pending[0][0]
            in_degree = [rep for k, rep in pending if k == n]
            low = min(leading_weight(x, n, rep) for rep in in_degree)
            chosen = [(n, rep) for rep in in_degree if leading_weight(x, n, rep) == low]
        else:
            chosen = pending
        stage += 1
        stages.append([])
        for n, rep in chosen:
            c_vec, b_vec = split_cone_vector(p.complex, n, rep)
            name = f"{prefix}{len(gens)}"
            gens.append(ModuleGenerator(name, n, leading_weight(x, n, rep), p.element(n + 1, c_vec)))
            images.append((n, scaled(b_vec, -1)))
            stages[-1].append(n)
            logger.info(f"module stage {stage}: {name} in degree {n}")
    trusted_degrees = [n for n in degrees if n > min(degrees)] if degrees else []
    if not eps.is_surjective([n for n in trusted_degrees if m.complex.dim(n)]):
        cert.fail("surjective", degrees=trusted_degrees)
    cert.count("surjective", len(trusted_degrees))
    cert.count("filtration", len(gens))
    if not unresolved:
        cert.count("cone-acyclic", len(degrees))
    cert.count("stages", stage)
    cert.bounds.update(
        {
            "trusted_degrees": [min(trusted_degrees), max(trusted_degrees)] if trusted_degrees else None,
            "trusted_weight": trusted,
            "generator_degrees": stages,
        }
    )
    return ModuleResolution(p, eps, cert, images, stages, unresolved)


# -- derived tensor ---------------------------------------------------------------------------


@dataclass
class DerivedTensor:
    complex: Complex
    resolution: ModuleResolution
    side: str
    trusted_weight: int
    window: DegreeWindow

    @property
    def betti(self) -> dict[int, int]:
        return betti_numbers(self.complex, self.window, self.trusted_weight)


def _check_sides(right: UModule, left: UModule) -> None:
    ops = right.algebra
    if not isinstance(ops, OppositeAlgebra) or ops.base is not left.algebra:
        raise ValidationError("The right module must be a module over the opposite of U", field="module")


def _tensor_complex(
    f, basis: dict[int, list[tuple]], weights: Callable[[tuple], int], column: Callable[[tuple], Iterable]
) -> Complex:
    position = {e: (deg, i) for deg, es in basis.items() for i, e in enumerate(es)}
    mats = {}
    for deg, es in basis.items():
        cols = []
        for e in es:
            col: dict[int, Scalar] = {}
            for key, c in column(e):
                if key in position:
                    accumulate(col, position[key][1], c)
            cols.append(col)
        mats[deg] = Matrix.from_columns(f, len(basis.get(deg + 1, [])), cols)
    dims = {deg: len(es) for deg, es in basis.items()}
    return Complex(f, dims, mats, weights={deg: [weights(e) for e in es] for deg, es in basis.items()})


@log_performance("derived tensor")
def derived_tensor(
    right: UModule, left: UModule, window: DegreeWindow, resolve: str = "right", stage_cap: int = 8
) -> DerivedTensor:
    """
    ``M (x)^L_U N`` by resolving one argument and tensoring over U with the other.

    With a semifree right module ``P = (+) e_j U``, ``P (x)_U N`` has basis ``e_j (x) n`` and
    ``d(e_j (x) n) = sum (-1)^{|u||e_k|} e_k (x) u n + (-1)^{|e_j|} e_j (x) dn`` for
    ``d e_j = sum u *op e_k``; resolving the left argument is the mirror image.
    """
    _check_sides(right, left)
    u = left.algebra
    f, cap = u.field, u.weight_cap
    one = f.one
    floor = window.lo - 1
    if resolve == "right":
        res = semifree_resolve(right, floor, stage_cap=stage_cap)
        p, n_mod = res.module, left
        basis: dict[int, list[tuple]] = {}
        for j, g in enumerate(p.generators):
            for deg, i in n_mod.elements():
                if g.weight + n_mod.weight(deg, i) <= cap:
                    basis.setdefault(g.degree + deg, []).append((j, deg, i))

        def column(e):
            j, deg, i = e
            g = p.generators[j]
            for (v, k), c in g.differential.items():
                sign = _sign(u.monomial_degree(v) * p.generators[k].degree)
                out_deg, vec = n_mod.act({v: one}, deg, {i: one})
                for r, a in vec.items():
                    yield (k, out_deg, r), c * a * sign
            for r, a in n_mod.complex.apply_d(deg, {i: one}).items():
                yield (j, deg + 1, r), a * _sign(g.degree)

        weights = lambda e: p.generators[e[0]].weight + n_mod.weight(e[1], e[2])  # noqa: E731
        trusted = min(p.trusted_weight, n_mod.trusted_weight)
    elif resolve == "left":
        res = semifree_resolve(left, floor, stage_cap=stage_cap)
        q, m_mod = res.module, right
        basis = {}
        for deg, i in m_mod.elements():
            for j, g in enumerate(q.generators):
                if g.weight + m_mod.weight(deg, i) <= cap:
                    basis.setdefault(deg + g.degree, []).append((deg, i, j))

        def column(e):
            deg, i, j = e
            for r, a in m_mod.complex.apply_d(deg, {i: one}).items():
                yield (deg + 1, r, j), a
            for (v, k), c in q.generators[j].differential.items():
                sign = _sign(deg + u.monomial_degree(v) * deg)
                out_deg, vec = m_mod.act({v: one}, deg, {i: one})
                for r, a in vec.items():
                    yield (out_deg, r, k), c * a * sign

        weights = lambda e: m_mod.weight(e[0], e[1]) + q.generators[e[2]].weight  # noqa: E731
        trusted = min(q.trusted_weight, m_mod.trusted_weight)
    else:
        raise ValidationError(f"Unknown side '{resolve}'", field="resolve", value=resolve, expected_format="left or right")
    x = _tensor_complex(f, basis, weights, column)
    logger.debug(f"derived tensor ({resolve} resolved): {x!r}")
    return DerivedTensor(x, res, resolve, trusted, window)


# -- base change ------------------------------------------------------------------------------


def restrict_module(phi: EnvelopingMap, n: UModule, name: str | None = None) -> UModule:
    """Direct image: N with U(A) acting through ``U(f)``."""
    if n.algebra is not phi.target:
        raise ValidationError("The module is not over the target of U(f)", field="module")
    f = n.field

    def action(u: Monomial, deg: int, i: int) -> dict[int, Scalar]:
        image = phi.apply_monomial(u)
        return n.act(image, deg, {i: f.one})[1] if image else {}

    return UModule(phi.source, n.complex, action, name or f"f_*{n.name}", min(n.trusted_weight, phi.source.trusted_weight))


def extend_module(phi: EnvelopingMap, p: SemifreeModule, name: str | None = None) -> SemifreeModule:
    """Inverse image ``U(B) (x)_{U(A)} P`` of a semifree module: same generators, pushed differentials."""
    if p.algebra is not phi.source:
        raise ValidationError("The module is not over the source of U(f)", field="module")
    gens = []
    for g in p.generators:
        pushed: Element = {}
        for (u, k), c in g.differential.items():
            for w, a in phi.apply_monomial(u).items():
                accumulate(pushed, (w, k), c * a)
        gens.append(ModuleGenerator(g.name, g.degree, g.weight, pushed))
    return SemifreeModule(phi.target, gens, name=name or f"f^*{p.name}")


def base_change_module(phi: EnvelopingMap, m: UModule, direction: str = "inverse", degree_floor: int = -4) -> UModule:
    """
    Base change of modules along ``U(f)``.

    ``direct`` restricts a U(B)-module; ``inverse`` tensors a U(A)-module up to U(B), after
    replacing it by a semifree resolution when it is not semifree already.
    """
    if direction == "direct":
        return restrict_module(phi, m)
    if direction != "inverse":
        raise ValidationError(f"Unknown direction '{direction}'", field="direction", expected_format="direct or inverse")
    if not isinstance(m, SemifreeModule):
        logger.info(f"resolving {m.name} before the inverse image")
        m = semifree_resolve(m, degree_floor).module
    return extend_module(phi, m)


# -- cells on the operad side -----------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    """A free generator ``t`` of ``U<N, beta>``: ``d t = attaching - sum c t_k``."""

    label: tuple
    degree: int
    weight: int
    attaching: Polynomial
    boundary: dict[int, Scalar]


Word = tuple  # (u_0, t_1, u_1, ..., t_k, u_k): monomials of U at even places, cell indices at odd


class CellExtension:
    """
    The free extension ``U<N, beta>`` of an enveloping algebra by cells of positive weight.

    Elements are combinations of words ``u_0 t_1 u_1 ... t_k u_k`` with basis monomials ``u_i``
    of U; products concatenate words and multiply the two monomials that meet.
    """

    def __init__(self, base: EnvelopingAlgebra, cells: Sequence[Cell], name: str | None = None):
        if any(c.weight < 1 for c in cells):
            raise TruncationError("Cells of weight 0 make the extension infinite below the cap")
        self.base = base
        self.cells = list(cells)
        self.field = base.field
        self.weight_cap = base.weight_cap
        self.name = name or f"{base.name}<N>"
        self.basis: dict[int, list[Word]] = {}
        for w in self._words(self.weight_cap):
            self.basis.setdefault(self.word_degree(w), []).append(w)
        self.position = {w: (deg, i) for deg, ws in self.basis.items() for i, w in enumerate(ws)}
        self.complex = self._build_complex()

    def _words(self, budget: int) -> list[Word]:
        monomials = self.base.all_monomials()
        out: list[Word] = []

        def grow(word: Word, left: int) -> None:
            for u in monomials:
                wu = self.base.weight_of(u)
                if wu > left:
                    continue
                closed = word + (u,)
                out.append(closed)
                for k, cell in enumerate(self.cells):
                    if cell.weight <= left - wu:
                        grow(closed + (k,), left - wu - cell.weight)

        grow((), budget)
        return out

    def word_weight(self, w: Word) -> int:
        return sum(self.base.weight_of(x) if i % 2 == 0 else self.cells[x].weight for i, x in enumerate(w))

    def word_degree(self, w: Word) -> int:
        return sum(self.base.monomial_degree(x) if i % 2 == 0 else self.cells[x].degree for i, x in enumerate(w))

    def _truncate(self, x: Mapping[Word, Scalar]) -> dict[Word, Scalar]:
        return {w: c for w, c in x.items() if self.word_weight(w) <= self.weight_cap}

    def from_base(self, poly: Mapping[Monomial, Scalar]) -> dict[Word, Scalar]:
        return {(m,): c for m, c in poly.items()}

    def cell(self, k: int) -> dict[Word, Scalar]:
        unit = self.base.unit_monomial
        return {(unit, k, unit): self.field.one}

    def multiply(self, x: Mapping[Word, Scalar], y: Mapping[Word, Scalar]) -> dict[Word, Scalar]:
        out: dict[Word, Scalar] = {}
        for v, a in x.items():
            for w, b in y.items():
                if self.word_weight(v) + self.word_weight(w) > self.weight_cap:
                    continue
                for m, c in self.base.multiply_monomials(v[-1], w[0]).items():
                    accumulate(out, v[:-1] + (m,) + w[1:], a * b * c)
        return self._truncate(out)

    def _d_piece(self, i: int, x: Any) -> dict[Word, Scalar]:
        if i % 2 == 0:
            return self.from_base(self.base.d({x: self.field.one}))
        cell = self.cells[x]
        out = self.from_base(cell.attaching)
        for k, c in cell.boundary.items():
            axpy(out, -c, self.cell(k))
        return out

    def _piece(self, i: int, x: Any) -> dict[Word, Scalar]:
        return {(x,): self.field.one} if i % 2 == 0 else self.cell(x)

    def d_word(self, w: Word) -> dict[Word, Scalar]:
        out: dict[Word, Scalar] = {}
        prefix = 0
        pieces = [self._piece(i, x) for i, x in enumerate(w)]
        for i, x in enumerate(w):
            dx = self._d_piece(i, x)
            if dx:
                acc: dict[Word, Scalar] = {(self.base.unit_monomial,): self.field.one}
                for j, piece in enumerate(pieces):
                    acc = self.multiply(acc, dx if j == i else piece)
                    if not acc:
                        break
                axpy(out, _sign(prefix), acc)
            prefix += self.base.monomial_degree(x) if i % 2 == 0 else self.cells[x].degree
        return out

    def _build_complex(self) -> Complex:
        mats = {}
        for deg, ws in self.basis.items():
            cols = [{self.position[t][1]: c for t, c in self.d_word(w).items()} for w in ws]
            mats[deg] = Matrix.from_columns(self.field, len(self.basis.get(deg + 1, [])), cols)
        dims = {deg: len(ws) for deg, ws in self.basis.items()}
        weights = {deg: [self.word_weight(w) for w in ws] for deg, ws in self.basis.items()}
        return Complex(self.field, dims, mats, weights=weights)

    def weight_dims(self) -> dict[int, int]:
        dims = {w: 0 for w in range(self.weight_cap + 1)}
        for ws in self.basis.values():
            for w in ws:
                dims[self.word_weight(w)] += 1
        return dims


@dataclass
class CellComparison:
    certificate: Certificate
    extension: CellExtension
    enveloping: EnvelopingAlgebra
    base: EnvelopingAlgebra
    isomorphism: ChainMap


def _identity_morphism(o: Operad) -> OperadMorphism:
    return OperadMorphism(o, o, {n: Matrix.identity(o.field, o.dim(n)) for n in range(1, o.max_arity + 1)}, name="id")


@log_performance("cell enveloping comparison")
def env_of_attached_operad(o_prime: Operad, a: AlgebraPresentation, cap: int | None = None, limit: int = 400) -> CellComparison:
    """
    ``U(O<M, n, alpha>, A) = U(O, A)<N, beta>`` with ``N = M (x) (hole slot) (x) A^{(x) n-1}``.

    A cell ``t`` of N is a basis element m of M, a slot s for the hole and an ordered tuple of
    ``n - 1`` basis elements of A; it maps to ``T_m(b_1, .., _ at s, .., b_{n-1})`` in
    ``U(O', A)`` and ``beta`` sends it to ``alpha(m)(b_1, .., _ at s, ..)`` in ``U(O, A)``.
    The comparison map is checked to be a chain isomorphism that respects products.
    """
    if a.operad is not o_prime:
        raise ValidationError("The algebra is not presented over the attached operad", field="operad")
    cells_cx: Complex | None = getattr(o_prime, "cells", None)
    if cells_cx is None:
        o, incl, n = o_prime, _identity_morphism(o_prime), 0
    else:
        o, incl, n = o_prime.base_operad, inclusion_morphism(o_prime), o_prime.cell_arity
        if n < 2:
            raise TruncationError("Cells in arity 1 have weight 0 in U and cannot be truncated by weight")
    f = a.field
    upper = EnvelopingAlgebra(a, cap, name=f"U({o_prime.name}, {a.name})")
    cap = upper.weight_cap
    algebra = RealizedAlgebra(a.copy(weight_cap=cap), leibniz_samples=0)
    restricted = restricted_presentation(algebra, incl, name=f"{a.name}|{o.name}")
    lower = EnvelopingAlgebra(restricted, cap, name=f"U({o.name}, {a.name})")
    monomial_of = restricted.basis_monomials
    generator_of = {m: g for g, m in monomial_of.items()}

    # cells: (k, slot, b_1..b_{n-1})
    cells: list[Cell] = []
    if cells_cx is not None:
        flat = [(deg, i) for deg in cells_cx.support for i in range(cells_cx.dim(deg))]
        tuples = [t for t in _ordered_tuples(algebra, n - 1, cap)]
        index: dict[tuple, int] = {}
        labels = [(k, s, t) for k in range(len(flat)) for s in range(n) for t in tuples]
        for label in labels:
            index[label] = len(index)
        hole = lower.one
        for k, s, t in labels:
            deg_m, i_m = flat[k]
            inputs = [lower.extended.generator(generator_of[b]) for b in t]
            inputs.insert(s, hole)
            attaching = lower.reduce(lower.extended.mu(n, o_prime.cell_images.get(k, {}), inputs)) if o_prime.cell_images.get(k) else {}
            boundary: dict[int, Scalar] = {}
            for r, c in cells_cx.d(deg_m).column(i_m).items():
                accumulate(boundary, index[(flat.index((deg_m + 1, r)), s, t)], c)
            prefix = deg_m
            for j, b in enumerate(t):
                for b2, c in algebra.d({b: f.one}).items():
                    moved = t[:j] + (b2,) + t[j + 1 :]
                    if (k, s, moved) in index:
                        accumulate(boundary, index[(k, s, moved)], c * _sign(prefix))
                prefix += algebra.presentation.monomial_degree(b)
            weight = sum(algebra.presentation.weight_of(b) for b in t)
            degree = deg_m - 1 + sum(algebra.presentation.monomial_degree(b) for b in t)
            cells.append(Cell((k, s, t), degree, weight, attaching, boundary))
    ext = CellExtension(lower, cells)

    def image_of_monomial(m: Monomial) -> Polynomial:
        q = incl.apply(m.arity, {m.operation: f.one})
        inputs = [{monomial_of[g]: f.one} for g in m.generators[:-1]] + [upper.one]
        return upper.reduce(upper.extended.mu(m.arity, q, inputs))

    def image_of_cell(cell: Cell) -> Polynomial:
        k, s, t = cell.label
        inputs: list[Polynomial] = [{b: f.one} for b in t]
        inputs.insert(s, upper.one)
        return upper.reduce(upper.extended.mu(n, cell_operation(o_prime, k), inputs))

    cell_images = [image_of_cell(c) for c in cells]

    def image(word: Word) -> Polynomial:
        out = image_of_monomial(word[0])
        for i in range(1, len(word), 2):
            out = upper.multiply(out, cell_images[word[i]])
            out = upper.multiply(out, image_of_monomial(word[i + 1]))
        return out

    cert = Certificate(
        f"enveloping algebra of {o_prime.name}", bounds={"weight_cap": cap, "cells": len(cells)}
    )
    cols = {deg: [upper.vector(image(w))[1] for w in ws] for deg, ws in ext.basis.items()}
    phi = ChainMap.from_columns(ext.complex, upper.complex, cols)
    try:
        phi.check()
    except ChainMapError as e:
        raise VerificationError(f"The comparison map does not commute with d: {e.message}", identity="cell-d") from e
    cert.count("commutes-with-d", len(ext.position))
    if ext.weight_dims() != upper.weight_dims():
        cert.fail("dimensions", extension=ext.weight_dims(), enveloping=upper.weight_dims())
        return CellComparison(cert, ext, upper, lower, phi)
    cert.count("weight-dims", cap + 1)
    for deg in sorted(set(ext.complex.support) | set(upper.complex.support)):
        size = ext.complex.dim(deg)
        if size != upper.complex.dim(deg) or rank(phi.component(deg)) != size:
            cert.fail("bijection", degree=deg)
            return CellComparison(cert, ext, upper, lower, phi)
        cert.count("bijection")
    words = [w for ws in ext.basis.values() for w in ws]
    pairs = [(v, w) for v in words for w in words if ext.word_weight(v) + ext.word_weight(w) <= cap]
    for v, w in _sample(pairs, limit, 0):
        lhs = {}
        for t, c in ext.multiply({v: f.one}, {w: f.one}).items():
            axpy(lhs, c, image(t))
        if lhs != upper.multiply(image(v), image(w)):
            raise VerificationError("The comparison map does not respect products", identity="cell-product")
        cert.count("product")
    logger.info(f"{upper.name} matches {ext.name}: dims {upper.weight_dims()}")
    return CellComparison(cert, ext, upper, lower, phi)


def _ordered_tuples(algebra: RealizedAlgebra, length: int, cap: int) -> list[tuple[Monomial, ...]]:
    monomials = algebra.all_monomials()
    out: list[tuple[Monomial, ...]] = [()]
    for _ in range(length):
        out = [
            t + (m,)
            for t in out
            for m in monomials
            if sum(algebra.presentation.weight_of(b) for b in t) + algebra.presentation.weight_of(m) <= cap
        ]
    return out
