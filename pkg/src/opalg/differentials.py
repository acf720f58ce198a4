"""
Modules of differentials, derivation complexes and the cotangent complex.

Everything is written in generator coordinates: a derivation of a cell algebra, and a
U-linear map out of a semifree module, is determined by its values on generators.
Both complexes below are built on that description; what distinguishes them is how the
differential is computed, through the derivation rule on ``dx`` or through the
differential of the generators of ``Omega``.
"""

from __future__ import annotations

import random
import threading
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from .algebras import AlgebraMap, AlgebraPresentation, Monomial, Polynomial, RealizedAlgebra, realize
from .complexes import ChainMap, Complex, DegreeWindow, betti_numbers
from .enveloping import (
    Element,
    EnvelopingAlgebra,
    EnvelopingMap,
    ModuleGenerator,
    SemifreeModule,
    UModule,
    extend_module,
    module_along,
    regular_module,
)
from .exactla import Matrix, Scalar, accumulate, rank
from .exceptions import ChainComplexError, ChainMapError, ValidationError, VerificationError
from .logging_config import get_logger, log_performance
from .models import Certificate
from .resolutions import Resolution, resolve

logger = get_logger(__name__)


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def _prefix_size(a: AlgebraPresentation, b: AlgebraPresentation | int | None) -> int:
    if b is None:
        return 0
    if isinstance(b, int):
        count = b
    else:
        count = b.size
        if a.names[:count] != b.names:
            raise ValidationError(
                f"{b.name} is not a generator prefix of {a.name}",
                field="subalgebra",
                expected_format="the first generators of the presentation",
            )
    if not 0 <= count <= a.size:
        raise ValidationError(f"Prefix of {count} generators in a presentation of {a.size}", field="subalgebra")
    return count


@dataclass(frozen=True)
class Slot:
    """One term of the derivation rule: the hole placed in slot i of a monomial."""

    generator: int
    multiplier: Polynomial  # element of U with the hole in place of the generator
    degree: int  # degree of the multiplier
    after: int  # total degree of the generators right of the slot


class UniversalDerivation:
    """
    Derivation rule on a free presentation, relative to a generator prefix.

    ``delta(p(x_1..x_k)) = sum_i (-1)^{n |u_i| + |x_i| |x_{>i}|} u_i . delta(x_i)`` where ``u_i``
    is the canonical element of U with the hole in slot i. The sign accounts for moving
    the slot to the end, where U keeps its hole.
    """

    def __init__(self, u: EnvelopingAlgebra, prefix: int = 0):
        a = u.presentation
        if a.relations:
            raise ValidationError(
                "Derivations are computed on cell presentations; resolve the algebra first",
                field="presentation",
            )
        self.algebra = u
        self.presentation = a
        self.prefix = prefix
        self._slots: dict[Monomial, list[Slot]] = {}
        self._lock = threading.Lock()

    def slots(self, m: Monomial) -> list[Slot]:
        with self._lock:
            hit = self._slots.get(m)
        if hit is not None:
            return hit
        u, a = self.algebra, self.presentation
        ext = u.extended
        one = a.field.one
        singles = [ext.generator(g) for g in range(a.size)]
        degrees = [a.generators[g].degree for g in m.generators]
        out = []
        for i, g in enumerate(m.generators):
            if g < self.prefix:
                continue
            inputs = [singles[h] for h in m.generators]
            inputs[i] = u.one
            multiplier = u.reduce(ext.mu(m.arity, {m.operation: one}, inputs))
            if not multiplier:
                continue
            out.append(Slot(g, multiplier, a.monomial_degree(m) - degrees[i], sum(degrees[i + 1 :])))
        with self._lock:
            self._slots[m] = out
        return out

    def apply(self, poly: Mapping[Monomial, Scalar]) -> Element:
        """``d poly`` as an element of ``Omega``: coordinates ``(u, j)`` with j counted from the prefix."""
        out: Element = {}
        for m, c in poly.items():
            for s in self.slots(m):
                sign = _sign(self.presentation.generators[s.generator].degree * s.after)
                for w, a in s.multiplier.items():
                    accumulate(out, (w, s.generator - self.prefix), c * a * sign)
        return out


@dataclass
class DifferentialsModule:
    """``Omega_{A/B}``: semifree on ``dx`` for the generators x of A outside the prefix B."""

    presentation: AlgebraPresentation
    prefix: int
    module: SemifreeModule
    derivation: UniversalDerivation

    @property
    def algebra(self) -> EnvelopingAlgebra:
        return self.derivation.algebra

    def universal(self, poly: Mapping[Monomial, Scalar]) -> Element:
        return self.module._truncate(self.derivation.apply(poly))

    def generator_log(self) -> list[dict[str, Any]]:
        return self.module.generator_log()


@log_performance("omega")
def omega(
    a: AlgebraPresentation,
    b: AlgebraPresentation | int | None = None,
    u: EnvelopingAlgebra | None = None,
) -> DifferentialsModule:
    """
    Module of relative differentials of a cell presentation over a generator prefix.

    The differential of ``dx`` is the derivation rule applied to ``dx``; the generators of the
    prefix have no differentials, so they drop out of every formula.
    """
    prefix = _prefix_size(a, b)
    u = u or EnvelopingAlgebra(a)
    if u.presentation.names != a.names:
        raise ValidationError("U is not built on this presentation", field="algebra")
    rule = UniversalDerivation(u, prefix)
    gens = [
        ModuleGenerator(f"d{g.name}", g.degree, g.weight, rule.apply(g.differential))
        for g in a.generators[prefix:]
    ]
    module = SemifreeModule(u, gens, name=f"Omega({a.name}/{a.names[:prefix] or '0'})")
    logger.debug(f"{module.name}: {module.rank} generators, {module.complex!r}")
    return DifferentialsModule(a, prefix, module, rule)


# -- complexes in generator coordinates -------------------------------------------------------


class _GeneratorCoordinates:
    """
    Maps determined by one value in M per generator, graded by their degree.

    A coordinate ``(j, i)`` of degree n is the basis element i of M in degree ``|g_j| + n``
    placed on generator j. Its weight is ``weight(i) - weight(g_j) + max weight``, which d
    never lowers; classes are trusted up to the trusted weight of M.
    """

    def __init__(self, target: UModule, names: list[str], degrees: list[int], weights: list[int], title: str):
        self.target = target
        self.field = target.field
        self.names = names
        self.degrees = degrees
        self.weights = weights
        self.name = title
        x = target.complex
        self.basis: dict[int, list[tuple[int, int]]] = {}
        for j, deg in enumerate(degrees):
            for e in x.support:
                for i in range(x.dim(e)):
                    self.basis.setdefault(e - deg, []).append((j, i))
        # (j, i) recurs in every degree where generator j meets M, so positions are per degree
        self.position = {n: {c: k for k, c in enumerate(cs)} for n, cs in self.basis.items()}
        self.offset = max(weights, default=0)
        self.trusted_weight = target.trusted_weight

    def _build(self) -> Complex:
        f = self.field
        mats = {}
        for n, cs in self.basis.items():
            cols = [self.vector(n + 1, self.boundary(n, {c: f.one})) for c in cs]
            mats[n] = Matrix.from_columns(f, len(self.basis.get(n + 1, [])), cols)
        dims = {n: len(cs) for n, cs in self.basis.items()}
        labels = {n: [(self.names[j], i) for j, i in cs] for n, cs in self.basis.items()}
        weights = {
            n: [self.target.weight(self.degrees[j] + n, i) - self.weights[j] + self.offset for j, i in cs]
            for n, cs in self.basis.items()
        }
        try:
            return Complex(f, dims, mats, labels, weights)
        except ChainComplexError as e:
            raise VerificationError(f"D^2 is nonzero on {self.name}: {e.message}", identity="d-squared") from e

    def vector(self, n: int, coords: Mapping[tuple[int, int], Scalar]) -> dict[int, Scalar]:
        position = self.position.get(n, {})
        return {position[c]: v for c, v in coords.items() if c in position}

    def coordinates(self, n: int, vec: Mapping[int, Scalar]) -> dict[tuple[int, int], Scalar]:
        cs = self.basis.get(n, [])
        return {cs[k]: v for k, v in vec.items()}

    def value(self, coords: Mapping[tuple[int, int], Scalar], j: int) -> dict[int, Scalar]:
        return {i: v for (k, i), v in coords.items() if k == j}

    def boundary(self, n: int, coords: Mapping[tuple[int, int], Scalar]) -> dict[tuple[int, int], Scalar]:
        """``D phi = d_M phi - (-1)^n phi d`` on every generator."""
        x = self.target.complex
        out: dict[tuple[int, int], Scalar] = {}
        for (j, i), c in coords.items():
            for r, v in x.apply_d(self.degrees[j] + n, {i: self.field.one}).items():
                accumulate(out, (j, r), c * v)
        s = -_sign(n)
        for l in range(len(self.degrees)):
            for r, v in self.on_boundary(n, coords, l).items():
                accumulate(out, (l, r), s * v)
        return out

    def on_boundary(self, n: int, coords: Mapping[tuple[int, int], Scalar], l: int) -> dict[int, Scalar]:
        raise NotImplementedError


class DerivationComplex(_GeneratorCoordinates):
    """``Der_B(A, M)`` for a cell presentation A, a generator prefix B and a U(A)-module M."""

    def __init__(self, a: AlgebraPresentation, b: AlgebraPresentation | int | None, m: UModule):
        prefix = _prefix_size(a, b)
        u = m.algebra
        if not isinstance(u, EnvelopingAlgebra) or u.presentation.names != a.names:
            raise ValidationError("M must be a module over U of the presentation", field="module")
        self.presentation = a
        self.prefix = prefix
        self.rule = UniversalDerivation(u, prefix)
        free = a.generators[prefix:]
        super().__init__(
            m, [g.name for g in free], [g.degree for g in free], [g.weight for g in free], f"Der({a.name}, {m.name})"
        )
        self.complex = self._build()

    def evaluate(self, n: int, coords: Mapping[tuple[int, int], Scalar], poly: Mapping[Monomial, Scalar]) -> dict[int, Scalar]:
        """The derivation with these coordinates applied to an element of the free algebra."""
        a, m = self.presentation, self.target
        out: dict[int, Scalar] = {}
        for mono, c in poly.items():
            for s in self.rule.slots(mono):
                j = s.generator - self.prefix
                value = self.value(coords, j)
                if not value:
                    continue
                deg = a.generators[s.generator].degree
                sign = _sign(n * s.degree + deg * s.after)
                _, vec = m.act(s.multiplier, deg + n, value)
                for r, v in vec.items():
                    accumulate(out, r, c * sign * v)
        return out

    def on_boundary(self, n: int, coords: Mapping[tuple[int, int], Scalar], l: int) -> dict[int, Scalar]:
        return self.evaluate(n, coords, self.presentation.generators[self.prefix + l].differential)


class HomComplex(_GeneratorCoordinates):
    """``CHom_U(P, M)`` for a semifree P: ``phi(u e_k) = (-1)^{n |u|} u phi(e_k)``."""

    def __init__(self, p: SemifreeModule, m: UModule):
        if p.algebra is not m.algebra:
            raise ValidationError("Both modules must be over the same algebra", field="module")
        self.source = p
        super().__init__(
            m,
            [g.name for g in p.generators],
            [g.degree for g in p.generators],
            [g.weight for g in p.generators],
            f"CHom({p.name}, {m.name})",
        )
        self.complex = self._build()

    def apply(self, n: int, coords: Mapping[tuple[int, int], Scalar], element: Element) -> dict[int, Scalar]:
        u, m = self.source.algebra, self.target
        one = self.field.one
        out: dict[int, Scalar] = {}
        for (w, k), c in element.items():
            value = self.value(coords, k)
            if not value:
                continue
            _, vec = m.act({w: one}, self.degrees[k] + n, value)
            sign = _sign(n * u.monomial_degree(w))
            for r, v in vec.items():
                accumulate(out, r, c * sign * v)
        return out

    def on_boundary(self, n: int, coords: Mapping[tuple[int, int], Scalar], l: int) -> dict[int, Scalar]:
        return self.apply(n, coords, self.source.generators[l].differential)


def derivations(a: AlgebraPresentation, b: AlgebraPresentation | int | None, m: UModule) -> DerivationComplex:
    return DerivationComplex(a, b, m)


# -- checks -----------------------------------------------------------------------------------


def _coordinate_map(source: _GeneratorCoordinates, target: _GeneratorCoordinates) -> ChainMap:
    cols = {n: [target.vector(n, {c: source.field.one}) for c in cs] for n, cs in source.basis.items()}
    return ChainMap.from_columns(source.complex, target.complex, cols)


@log_performance("adjunction check")
def adjunction_check(
    a: AlgebraPresentation, b: AlgebraPresentation | int | None, m: UModule, limit: int = 2000, seed: int = 0
) -> Certificate:
    """
    ``CHom_U(Omega_{A/B}, M) = Der_B(A, M)``: precomposition with d and extension from generators.

    Both maps are the identity in generator coordinates, so what is checked is that each
    commutes with the two differentials and that ``phi(d a)`` agrees with the derivation
    rule on every basis monomial of A.
    """
    om = omega(a, b, u=m.algebra)
    der = DerivationComplex(a, om.prefix, m)
    hom = HomComplex(om.module, m)
    cert = Certificate(f"adjunction for {om.module.name}", bounds={"weight_cap": m.algebra.weight_cap})
    forward = _coordinate_map(hom, der)
    backward = _coordinate_map(der, hom)
    for name, chain in (("precompose", forward), ("extend", backward)):
        try:
            chain.check()
        except ChainMapError as e:
            raise VerificationError(
                f"The {name} map does not commute with the differentials: {e.message}",
                identity="adjunction",
                details={"degree": e.degree},
            ) from e
        cert.count(f"{name}-chain-map")
    if forward.compose(backward) != ChainMap.identity(der.complex) or backward.compose(forward) != ChainMap.identity(hom.complex):
        raise VerificationError("The adjunction maps are not mutually inverse", identity="adjunction")
    cert.count("inverse", 2)
    monomials = realize(a.copy(weight_cap=m.algebra.weight_cap), leibniz_samples=0).all_monomials()
    pairs = [(n, c, mono) for n, cs in der.basis.items() for c in cs for mono in monomials]
    if len(pairs) > limit:
        cert.skipped = len(pairs) - limit
        pairs = random.Random(seed).sample(pairs, limit)
    one = der.field.one
    for n, c, mono in pairs:
        poly = {mono: one}
        if der.evaluate(n, {c: one}, poly) != hom.apply(n, {c: one}, om.universal(poly)):
            raise VerificationError(
                "phi o d differs from the derivation rule",
                identity="universal-derivation",
                details={"degree": n, "generator": der.names[c[0]], "monomial": a.render_monomial(mono)},
            )
        cert.count("universal-derivation")
    return cert


@dataclass
class ShortExactSequence:
    left: SemifreeModule
    middle: SemifreeModule
    right: SemifreeModule
    inclusion: ChainMap
    projection: ChainMap
    certificate: Certificate
    ranks: tuple[int, int, int]


def _dims_by_weight(p: SemifreeModule) -> dict[str, int]:
    out: dict[tuple[int, int], int] = {}
    for n in p.complex.support:
        for w in p.complex.weights(n) or ():
            out[(n, w)] = out.get((n, w), 0) + 1
    return {f"{n}:{w}": k for (n, w), k in sorted(out.items())}


@log_performance("relative sequence")
def relative_ses(a: AlgebraPresentation, c: int, b: int) -> ShortExactSequence:
    """``0 -> f^* Omega_{B/C} -> Omega_{A/C} -> Omega_{A/B} -> 0`` for prefixes ``C <= B <= A``."""
    if not 0 <= c <= b <= a.size:
        raise ValidationError(f"Prefixes {c} <= {b} <= {a.size} are required", field="prefixes")
    u = EnvelopingAlgebra(a)
    ub = EnvelopingAlgebra(a.prefix(b), u.weight_cap)
    inner = omega(a.prefix(b), c, u=ub)
    left = extend_module(EnvelopingMap.inclusion(ub, u), inner.module, name=f"f^*{inner.module.name}")
    middle = omega(a, c, u=u).module
    right = omega(a, b, u=u).module
    shift = b - c
    one = u.field.one

    def columns(src: SemifreeModule, tgt: SemifreeModule, move) -> dict[int, list[dict[int, Scalar]]]:
        cols = {}
        for n, es in src.basis.items():
            cols[n] = []
            for w, j in es:
                k = move(j)
                cols[n].append(tgt.vector({(w, k): one})[1] if k is not None else {})
        return cols

    inclusion = ChainMap.from_columns(left.complex, middle.complex, columns(left, middle, lambda j: j))
    projection = ChainMap.from_columns(
        middle.complex, right.complex, columns(middle, right, lambda j: j - shift if j >= shift else None)
    )
    cert = Certificate(f"relative sequence {c} <= {b} <= {a.size} of {a.name}", bounds={"weight_cap": u.weight_cap})
    for name, chain in (("inclusion", inclusion), ("projection", projection)):
        try:
            chain.check()
        except ChainMapError as e:
            raise VerificationError(f"The {name} is not a chain map: {e.message}", identity="ses") from e
        cert.count(f"{name}-chain-map")
    if not projection.compose(inclusion).is_zero():
        cert.fail("ses", reason="composite is nonzero")
    for n in sorted(set(middle.complex.support) | set(left.complex.support) | set(right.complex.support)):
        lk = rank(inclusion.component(n)) if left.complex.dim(n) else 0
        rk = rank(projection.component(n)) if right.complex.dim(n) else 0
        if lk != left.complex.dim(n) or rk != right.complex.dim(n) or lk + rk != middle.complex.dim(n):
            cert.fail("ses", degree=n, left=lk, right=rk, middle=middle.complex.dim(n))
            break
        cert.count("exact-degree")
    cert.bounds["dims_by_weight"] = {
        "left": _dims_by_weight(left),
        "middle": _dims_by_weight(middle),
        "right": _dims_by_weight(right),
    }
    ranks = (left.rank, middle.rank, right.rank)
    logger.info(f"relative sequence of {a.name}: generator ranks {ranks}")
    return ShortExactSequence(left, middle, right, inclusion, projection, cert, ranks)


# -- cotangent complex ------------------------------------------------------------------------


@dataclass
class CotangentComplex:
    """``L_{A/B} = Omega_{P/Q}`` for a resolution ``Q -> P`` of the arrow ``B -> A``."""

    differentials: DifferentialsModule
    resolution: Resolution
    base: Resolution | None
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def module(self) -> SemifreeModule:
        return self.differentials.module

    @property
    def algebra(self) -> EnvelopingAlgebra:
        return self.differentials.algebra

    def indecomposables(self) -> Complex:
        """``k (x)_U L``: the generators with the unit part of their differentials."""
        p = self.module
        u = p.algebra
        f = u.field
        if u.operad.dim(1) != 1:
            raise ValidationError("k (x)_U L needs O(1) = k", field="operad")
        basis: dict[int, list[int]] = {}
        for j, g in enumerate(p.generators):
            basis.setdefault(g.degree, []).append(j)
        position = {j: k for js in basis.values() for k, j in enumerate(js)}
        mats = {}
        for n, js in basis.items():
            cols = []
            for j in js:
                col: dict[int, Scalar] = {}
                for (w, k), c in p.generators[j].differential.items():
                    if w == u.unit_monomial:
                        accumulate(col, position[k], c)
                cols.append(col)
            mats[n] = Matrix.from_columns(f, len(basis.get(n + 1, [])), cols)
        dims = {n: len(js) for n, js in basis.items()}
        labels = {n: [p.generators[j].name for j in js] for n, js in basis.items()}
        weights = {n: [p.generators[j].weight for j in js] for n, js in basis.items()}
        return Complex(f, dims, mats, labels, weights)


@log_performance("cotangent complex")
def cotangent(
    a: RealizedAlgebra,
    window: DegreeWindow,
    over: AlgebraMap | None = None,
    mode: str = "minimal",
    stage_cap: int = 8,
    workers: int = 1,
) -> CotangentComplex:
    """
    Resolve ``B -> A`` and take relative differentials.

    Without ``over`` the base is the initial algebra and ``L_A = Omega_P`` for a resolution
    ``P -> A``; with ``over: B -> A`` the base B is resolved first and A is resolved under it.
    """
    base = None
    under = None
    if over is not None:
        if over.target is not a:
            raise ValidationError("The base map must land in the algebra", field="over")
        base = resolve(over.source, window.lo - 1, mode, stage_cap, workers, prefix="q")
        under = over.compose(base.epsilon, name="under")
    res = resolve(a, window.lo - 1, mode, stage_cap, workers, under=under)
    prefix = base.presentation.size if base is not None else 0
    om = omega(res.presentation, prefix)
    provenance = {
        "resolution": res.presentation.generator_log(),
        "mode": mode,
        "complete": res.complete,
        "base": base.presentation.generator_log() if base is not None else [],
        "window": [window.lo, window.hi],
    }
    logger.info(f"cotangent complex of {a.name}: {om.module.rank} generators")
    return CotangentComplex(om, res, base, provenance)


def cotangent_invariance(a: RealizedAlgebra, window: DegreeWindow, stage_cap: int = 8) -> Certificate:
    """Minimal and full resolutions give the same homology of ``k (x)_U L``."""
    cert = Certificate(f"cotangent invariance for {a.name}", bounds={"window": [window.lo, window.hi]})
    tables = {}
    trusted = a.trusted_weight
    for mode in ("minimal", "full"):
        cot = cotangent(a, window, mode=mode, stage_cap=stage_cap)
        trusted = min(trusted, cot.module.trusted_weight)
        tables[mode] = cot.indecomposables()
    betti = {mode: betti_numbers(x, window, trusted) for mode, x in tables.items()}
    cert.bounds["trusted_weight"] = trusted
    cert.bounds["betti"] = betti
    if betti["minimal"] != betti["full"]:
        cert.fail("cotangent-invariance", **betti)
    cert.count("resolutions", 2)
    return cert


@dataclass
class CohomologyResult:
    complex: Complex
    betti: dict[int, int]
    derivation_complex: Complex
    derivation_betti: dict[int, int]
    trusted_weight: int
    certificate: Certificate


@log_performance("cohomology")
def cohomology(cot: CotangentComplex, window: DegreeWindow, m: UModule | None = None) -> CohomologyResult:
    """
    ``H(A, M) = RHom_U(L_A, M)``, with M defaulting to A through the augmentation.

    L is semifree, so ``CHom_U(L, M)`` needs no further resolution. Without explicit
    coefficients the tangent complex ``Der(P, P)`` of the resolution ``P -> A`` is computed
    alongside; ``P -> A`` is a quasi-isomorphism above the resolution floor, so the two agree in
    every degree whose derivations only see P there.
    """
    u = cot.algebra
    res = cot.resolution
    coefficients = m or module_along(u, res.epsilon, name=res.epsilon.target.name)
    hom = HomComplex(cot.module, coefficients)
    prefix = cot.differentials.prefix
    cert = Certificate(
        f"cohomology of {res.epsilon.target.name} with coefficients in {coefficients.name}",
        bounds={"window": [window.lo, window.hi]},
    )
    if m is None:
        der = DerivationComplex(res.presentation, prefix, regular_module(u, res.algebra))
        floor = cot.provenance["window"][0] - 1
        lo = max(window.lo, floor + 1 - min(der.degrees, default=0))
    else:
        der = DerivationComplex(res.presentation, prefix, m)
        lo = window.lo
    trusted = min(hom.trusted_weight, der.trusted_weight, cot.module.trusted_weight)
    cert.bounds["trusted_weight"] = trusted
    betti = betti_numbers(hom.complex, window, trusted)
    route = betti_numbers(der.complex, DegreeWindow(lo, window.hi), trusted) if lo <= window.hi else {}
    cert.bounds["compared_degrees"] = sorted(route)
    if lo > window.lo:
        cert.notices.append(f"Der(P, P) reaches below the resolution floor under degree {lo}")
    mismatch = {n: (betti[n], b) for n, b in route.items() if betti[n] != b}
    if mismatch:
        cert.fail("two-routes", rhom=betti, derivations=route)
    cert.count("two-routes", len(route))
    return CohomologyResult(hom.complex, betti, der.complex, route, trusted, cert)
