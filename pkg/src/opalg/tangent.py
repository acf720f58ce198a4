"""
Tangent dg Lie algebras ``T_A = Der(A, A)`` and their transport along weak equivalences.

A weak equivalence of cell algebras does not induce a map of tangent Lie algebras, only a
zig-zag through a subalgebra: derivations preserving the kernel of an acyclic fibration,
or derivations preserving the source of a standard acyclic cofibration. Transport is
computed on homology, where both legs of every zig-zag are invertible.
"""

from __future__ import annotations

import random
import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

from .algebras import AlgebraMap, Polynomial, RealizedAlgebra, realize
from .complexes import (
    ChainMap,
    Complex,
    DegreeWindow,
    HomologyGroup,
    homology,
    induced_homology_map,
    is_acyclic,
    is_quasi_iso,
    subcomplex,
)
from .differentials import DerivationComplex
from .enveloping import EnvelopingAlgebra, module_along, regular_module
from .exactla import Matrix, Scalar, accumulate, axpy, inverse, rank, rref, solve
from .exceptions import ChainComplexError, ChainMapError, TruncationError, ValidationError, VerificationError
from .logging_config import get_logger, log_performance
from .models import Certificate
from .resolutions import factorize_fibration

logger = get_logger(__name__)

Vector = dict[int, Scalar]
Coordinates = dict[tuple[int, int], Scalar]


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def _sample(items: list, limit: int, seed: int) -> list:
    if len(items) <= limit:
        return items
    return random.Random(seed).sample(items, limit)


class DGLieAlgebra:
    """
    Derivations of a cell algebra into itself with the graded commutator.

    Elements are vectors of the derivation complex in generator coordinates. Composites are
    evaluated on the truncated algebra, so an identity holds exactly for the coordinates
    whose value has weight at most ``exact_weight(depth)``, depth being the number of
    nested applications.
    """

    def __init__(self, algebra: RealizedAlgebra, window: DegreeWindow, workers: int = 1, name: str | None = None):
        self.algebra = algebra
        self.presentation = algebra.presentation
        self.window = window
        self.field = algebra.field
        self.name = name or f"T({algebra.name})"
        self.enveloping = EnvelopingAlgebra(self.presentation, algebra.weight_cap, workers=workers)
        self.module = regular_module(self.enveloping, algebra)
        self.derivations = DerivationComplex(self.presentation, 0, self.module)
        self.complex = self.derivations.complex
        weights = self.presentation.weights
        self.min_shift = min(weights) - max(weights) if weights else 0
        self._homology: dict[int | None, dict[int, HomologyGroup]] = {}
        self._lock = threading.Lock()
        self.certificate: Certificate | None = None

    def __repr__(self):
        return f"DGLieAlgebra({self.name}; {self.complex!r})"

    @property
    def trusted_weight(self) -> int:
        return self.derivations.trusted_weight

    def exact_weight(self, depth: int = 1) -> int:
        return self.algebra.weight_cap + depth * self.min_shift

    # -- arithmetic -----------------------------------------------------------------------

    def coordinates(self, n: int, vec: Mapping[int, Scalar]) -> Coordinates:
        return self.derivations.coordinates(n, vec)

    def value(self, n: int, vec: Mapping[int, Scalar], k: int) -> Polynomial:
        """``delta(x_k)`` as an element of A."""
        val = self.derivations.value(self.coordinates(n, vec), k)
        if not val:
            return {}
        return self.algebra.polynomial(self.presentation.generators[k].degree + n, val)

    def apply(self, n: int, vec: Mapping[int, Scalar], poly: Mapping) -> Vector:
        return self.derivations.evaluate(n, self.coordinates(n, vec), poly)

    def _composite(self, n1: int, v1: Mapping[int, Scalar], n2: int, v2: Mapping[int, Scalar]) -> Coordinates:
        coords1 = self.coordinates(n1, v1)
        out: Coordinates = {}
        for k in range(self.presentation.size):
            inner = self.value(n2, v2, k)
            if not inner:
                continue
            for r, c in self.derivations.evaluate(n1, coords1, inner).items():
                accumulate(out, (k, r), c)
        return out

    def bracket(self, n1: int, v1: Mapping[int, Scalar], n2: int, v2: Mapping[int, Scalar]) -> Vector:
        """``[d1, d2] = d1 d2 - (-1)^{n1 n2} d2 d1``, in degree ``n1 + n2``."""
        if not v1 or not v2:
            return {}
        coords = self._composite(n1, v1, n2, v2)
        for key, c in self._composite(n2, v2, n1, v1).items():
            accumulate(coords, key, -_sign(n1 * n2) * c)
        return self.derivations.vector(n1 + n2, coords)

    def d(self, n: int, vec: Mapping[int, Scalar]) -> Vector:
        return self.complex.apply_d(n, vec) if vec else {}

    def value_weight(self, n: int, i: int) -> int:
        k, r = self.derivations.basis[n][i]
        return self.module.weight(self.presentation.generators[k].degree + n, r)

    def trim(self, n: int, vec: Mapping[int, Scalar], bound: int) -> Vector:
        return {i: c for i, c in vec.items() if c and self.value_weight(n, i) <= bound}

    def homology(self) -> dict[int, HomologyGroup]:
        """Homology over the window, computed once so that every map shares its bases."""
        key = self.trusted_weight
        with self._lock:
            hit = self._homology.get(key)
            if hit is None:
                hit = homology(self.complex, self.window, self.trusted_weight)
                self._homology[key] = hit
        return hit

    def basis_elements(self, degrees: Sequence[int] | None = None) -> list[tuple[int, Vector]]:
        degrees = self.window.degrees() if degrees is None else degrees
        one = self.field.one
        return [(n, {i: one}) for n in degrees for i in range(self.complex.dim(n))]

    # -- axioms ---------------------------------------------------------------------------

    def check_axioms(self, limit: int = 400, seed: int = 0) -> Certificate:
        """Antisymmetry, Jacobi and the derivation property of D on basis elements of the window."""
        cert = Certificate(
            f"dg Lie axioms of {self.name}",
            bounds={"window": [self.window.lo, self.window.hi], "exact_weight": self.exact_weight(2)},
        )
        elements = self.basis_elements()
        pairs = [(x, y) for x in elements for y in elements]
        sampled = _sample(pairs, limit, seed)
        cert.skipped += len(pairs) - len(sampled)
        for (n1, a), (n2, b) in sampled:
            n = n1 + n2
            bound = self.exact_weight(1)
            total = self.bracket(n1, a, n2, b)
            axpy(total, _sign(n1 * n2), self.bracket(n2, b, n1, a))
            if self.trim(n, total, bound):
                raise VerificationError(
                    f"[a, b] + (-1)^(|a||b|) [b, a] is nonzero in {self.name}",
                    identity="antisymmetry",
                    details={"degrees": [n1, n2], "a": sorted(a), "b": sorted(b)},
                )
            cert.count("antisymmetry")
            bound = self.exact_weight(2)
            lhs = self.d(n, self.bracket(n1, a, n2, b))
            rhs = self.bracket(n1 + 1, self.d(n1, a), n2, b)
            axpy(rhs, _sign(n1), self.bracket(n1, a, n2 + 1, self.d(n2, b)))
            axpy(lhs, -1, rhs)
            if self.trim(n + 1, lhs, bound):
                raise VerificationError(
                    f"D is not a derivation of the bracket of {self.name}",
                    identity="d-derivation",
                    details={"degrees": [n1, n2]},
                )
            cert.count("d-derivation")
        triples = [(x, y, z) for x, y in pairs for z in elements]
        sampled = _sample(triples, limit, seed)
        cert.skipped += len(triples) - len(sampled)
        bound = self.exact_weight(2)
        for (n1, a), (n2, b), (n3, c) in sampled:
            total: Vector = {}
            for (p, x), (q, y), (r, z), s in (
                ((n1, a), (n2, b), (n3, c), n1 * n3),
                ((n2, b), (n3, c), (n1, a), n2 * n1),
                ((n3, c), (n1, a), (n2, b), n3 * n2),
            ):
                axpy(total, _sign(s), self.bracket(p, x, q + r, self.bracket(q, y, r, z)))
            if self.trim(n1 + n2 + n3, total, bound):
                raise VerificationError(
                    f"The Jacobi identity fails in {self.name}",
                    identity="jacobi",
                    details={"degrees": [n1, n2, n3]},
                )
            cert.count("jacobi")
        if bound < self.algebra.weight_cap:
            cert.notices.append(f"identities compared on values of weight <= {bound}")
        logger.debug(f"{self.name}: dg Lie axioms hold on {sum(cert.checks.values())} instances")
        return cert


def _as_realized(a: Any) -> RealizedAlgebra:
    return a if isinstance(a, RealizedAlgebra) else realize(a, leibniz_samples=0)


@log_performance("tangent")
def tangent(a: Any, window: DegreeWindow, workers: int = 1, limit: int = 400) -> DGLieAlgebra:
    """``T_A`` with its axioms checked in the window."""
    lie = DGLieAlgebra(_as_realized(a), window, workers)
    lie.certificate = lie.check_axioms(limit)
    logger.info(f"{lie.name}: dims {dict(sorted((n, lie.complex.dim(n)) for n in lie.complex.support))}")
    return lie


def _lie(a: RealizedAlgebra, window: DegreeWindow, tangents: dict | None) -> DGLieAlgebra:
    if tangents is None:
        return tangent(a, window)
    if a not in tangents:
        tangents[a] = tangent(a, window)
    return tangents[a]


def _checked(chain: ChainMap, name: str) -> ChainMap:
    try:
        chain.check()
    except ChainMapError as e:
        raise VerificationError(f"{name} does not commute with the differentials: {e.message}", identity="chain-map") from e
    return chain


# -- the pair T_A -> Der_alpha(A, B) <- T_B ----------------------------------------------------


@dataclass
class DerivationPair:
    target: DerivationComplex
    push: ChainMap  # delta -> alpha o delta
    pull: ChainMap  # delta -> delta o alpha
    certificate: Certificate


@log_performance("derivation pair")
def der_pair(alpha: AlgebraMap, window: DegreeWindow, tangents: dict | None = None) -> DerivationPair:
    """
    ``alpha_*: T_A -> Der_alpha(A, B)`` and ``alpha^*: T_B -> Der_alpha(A, B)``.

    Both are quasi-isomorphisms when alpha is a weak equivalence of cell algebras; for other
    maps the certificate records the failing degrees.
    """
    a, b = alpha.source, alpha.target
    ta, tb = _lie(a, window, tangents), _lie(b, window, tangents)
    one = a.field.one
    der = DerivationComplex(a.presentation, 0, module_along(ta.enveloping, alpha, name=b.name))
    gens = a.presentation.generators

    push_cols = {}
    for n, cs in ta.derivations.basis.items():
        push_cols[n] = []
        for k, i in cs:
            deg = gens[k].degree + n
            _, vec = b.vector(alpha.apply({a.basis[deg][i]: one}))
            push_cols[n].append(der.vector(n, {(k, r): c for r, c in vec.items()}))
    pull_cols = {}
    for n, cs in tb.derivations.basis.items():
        pull_cols[n] = []
        for c in cs:
            coords: Coordinates = {}
            for k, image in enumerate(alpha.images):
                for r, v in tb.derivations.evaluate(n, {c: one}, image).items():
                    accumulate(coords, (k, r), v)
            pull_cols[n].append(der.vector(n, coords))
    push = _checked(ChainMap.from_columns(ta.complex, der.complex, push_cols), "alpha_*")
    pull = _checked(ChainMap.from_columns(tb.complex, der.complex, pull_cols), "alpha^*")

    cert = Certificate(f"derivation pair of {alpha.name}", bounds={"window": [window.lo, window.hi]})
    cert.count("chain-map", 2)
    for name, chain, source in (("push", push, ta), ("pull", pull, tb)):
        qi = is_quasi_iso(chain, window, min(source.trusted_weight, der.trusted_weight))
        cert.bounds[name] = qi.to_dict()
        if not qi:
            cert.fail("quasi-iso", leg=name, degrees=list(qi.failing_degrees))
        cert.count("quasi-iso")
    return DerivationPair(der, push, pull, cert)


# -- tangent subalgebras ----------------------------------------------------------------------


@dataclass
class TangentSubalgebra:
    """
    ``T_alpha`` with the zig-zag ``T_source <- T_alpha -> T_target``.

    For an acyclic fibration the left leg is the inclusion and the right leg the map to the
    quotient; for a standard acyclic cofibration the left leg is the restriction and the
    right leg the inclusion. Both legs are quasi-isomorphisms.
    """

    kind: str  # fibration | cofibration
    parent: DGLieAlgebra
    source: DGLieAlgebra
    target: DGLieAlgebra
    complex: Complex
    members: dict[int, list[Vector]]  # spanning vectors in the parent, per degree
    to_source: ChainMap
    to_target: ChainMap
    certificate: Certificate
    section: ChainMap | None = None


def _certify(
    cert: Certificate,
    window: DegreeWindow,
    trusted: int,
    onto: tuple[str, ChainMap],
    into: tuple[str, ChainMap],
) -> None:
    """Surjective and injective legs, both quasi-isomorphisms, with an acyclic kernel for the first."""
    degrees = window.trusted_degrees()
    name, chain = onto
    if not chain.is_surjective([n for n in degrees if chain.target.dim(n)]):
        cert.fail("surjective", leg=name)
    cert.count("surjective")
    kernel = {n: rref(chain.component(n)).kernel_basis for n in chain.source.support}
    kernel = {n: vs for n, vs in kernel.items() if vs}
    try:
        k_complex, _ = subcomplex(chain.source, kernel)
    except ChainComplexError as e:
        raise TruncationError(f"The kernel of {name} is not closed under d at this weight cap: {e.message}") from e
    if not is_acyclic(k_complex, degrees, trusted):
        cert.fail("acyclic-kernel", leg=name)
    cert.count("acyclic-kernel")
    iname, ichain = into
    if not ichain.is_injective():
        cert.fail("injective", leg=iname)
    cert.count("injective")
    for leg, c in (onto, into):
        qi = is_quasi_iso(c, window, trusted)
        cert.bounds[leg] = qi.to_dict()
        if not qi:
            cert.fail("quasi-iso", leg=leg, degrees=list(qi.failing_degrees))
        cert.count("quasi-iso")


def _closure(
    cert: Certificate, lie: DGLieAlgebra, members: Mapping[int, list[Vector]], preserved, limit: int, seed: int
) -> None:
    elements = [(n, v) for n in lie.window.degrees() for v in members.get(n, [])]
    pairs = [(x, y) for x in elements for y in elements]
    sampled = _sample(pairs, limit, seed)
    cert.skipped += len(pairs) - len(sampled)
    for (n1, a), (n2, b) in sampled:
        if not preserved(n1 + n2, lie.bracket(n1, a, n2, b)):
            cert.fail("bracket-closure", degrees=[n1, n2])
            return
        cert.count("bracket-closure")


@log_performance("t_fib")
def t_fib(
    alpha: AlgebraMap, window: DegreeWindow, tangents: dict | None = None, limit: int = 200, seed: int = 0
) -> TangentSubalgebra:
    """``T_alpha = {d in T_A : d(I) in I}`` for an acyclic fibration with kernel I."""
    a, b = alpha.source, alpha.target
    f = alpha.chain_map()
    trusted = min(a.trusted_weight, b.trusted_weight)
    if not f.is_surjective(b.complex.support) or not is_quasi_iso(f, window, trusted):
        raise VerificationError(f"{alpha.name} is not an acyclic fibration in the window", identity="acyclic-fibration")
    ta, tb = _lie(a, window, tangents), _lie(b, window, tangents)
    one, fld = a.field.one, a.field
    ideal = [
        (e, a.polynomial(e, z)) for e in a.complex.support for z in rref(f.component(e)).kernel_basis
    ]
    logger.debug(f"kernel of {alpha.name}: {len(ideal)} basis elements")

    def conditions(n: int, vec: Mapping[int, Scalar]) -> Vector:
        out: Vector = {}
        offset = 0
        for e, z in ideal:
            image = f.apply(e + n, ta.apply(n, vec, z))
            for r, c in image.items():
                out[offset + r] = c
            offset += b.complex.dim(e + n)
        return out

    members: dict[int, list[Vector]] = {}
    for n in ta.complex.support:
        rows = sum(b.complex.dim(e + n) for e, _ in ideal)
        cols = [conditions(n, {i: one}) for i in range(ta.complex.dim(n))]
        kernel = rref(Matrix.from_columns(fld, rows, cols)).kernel_basis
        if kernel:
            members[n] = kernel
    try:
        sub, iota = subcomplex(ta.complex, members)
    except ChainComplexError as e:
        raise TruncationError(f"T_alpha is not closed under d at this weight cap: {e.message}") from e

    preimages = []
    for y in b.presentation.generators:
        deg, vec = b.vector(b.generator(y.name))
        x = solve(f.component(deg), vec)
        if x is None:
            raise VerificationError(f"{y.name} has no preimage under {alpha.name}", identity="acyclic-fibration")
        preimages.append(a.polynomial(deg, x))
    pi_cols = {}
    for n, vs in members.items():
        pi_cols[n] = []
        for v in vs:
            coords: Coordinates = {}
            for k, pre in enumerate(preimages):
                deg = b.presentation.generators[k].degree + n
                for r, c in f.apply(deg, ta.apply(n, v, pre)).items():
                    accumulate(coords, (k, r), c)
            pi_cols[n].append(tb.derivations.vector(n, coords))
    pi = _checked(ChainMap.from_columns(sub, tb.complex, pi_cols), "pi_alpha")

    cert = Certificate(
        f"T_alpha for the acyclic fibration {alpha.name}",
        bounds={"window": [window.lo, window.hi], "trusted_weight": min(ta.trusted_weight, tb.trusted_weight)},
    )
    cert.bounds["ideal_dim"] = len(ideal)
    _certify(cert, window, min(ta.trusted_weight, tb.trusted_weight), ("pi", pi), ("iota", iota))

    bound = ta.exact_weight(2)

    def preserved(n: int, vec: Vector) -> bool:
        for e, z in ideal:
            image = f.apply(e + n, ta.apply(n, vec, z))
            weights = b.complex.weights(e + n) or ()
            if any(c and (weights[r] if weights else 0) <= bound for r, c in image.items()):
                return False
        return True

    _closure(cert, ta, members, preserved, limit, seed)
    logger.info(f"T_alpha of {alpha.name}: dims {dict(sorted((n, sub.dim(n)) for n in sub.support))}")
    return TangentSubalgebra("fibration", ta, ta, tb, sub, members, iota, pi, cert)


def _prefix_inclusion(alpha: AlgebraMap) -> int | None:
    a, b = alpha.source.presentation, alpha.target.presentation
    k = a.size
    if b.names[:k] != a.names:
        return None
    if any(alpha.images[j] != alpha.target.generator(j) for j in range(k)):
        return None
    return k


def _cells(b: RealizedAlgebra, prefix: int) -> Complex:
    """The attached generators with the part of d that is linear in them."""
    p = b.presentation
    basis: dict[int, list[int]] = {}
    for j in range(prefix, p.size):
        basis.setdefault(p.generators[j].degree, []).append(j)
    position = {j: k for js in basis.values() for k, j in enumerate(js)}
    mats = {}
    for n, js in basis.items():
        cols = []
        for j in js:
            col: Vector = {}
            for m, c in p.generators[j].differential.items():
                if m.arity == 1 and m.generators[0] >= prefix:
                    accumulate(col, position[m.generators[0]], c)
            cols.append(col)
        mats[n] = Matrix.from_columns(b.field, len(basis.get(n + 1, [])), cols)
    return Complex(b.field, {n: len(js) for n, js in basis.items()}, mats)


@log_performance("t_cof")
def t_cof(
    alpha: AlgebraMap, window: DegreeWindow, tangents: dict | None = None, limit: int = 200, seed: int = 0
) -> TangentSubalgebra:
    """``T_alpha = {d in T_B : d(A) in A}`` for a standard acyclic cofibration ``A -> A<M>``."""
    prefix = _prefix_inclusion(alpha)
    if prefix is None:
        raise ValidationError(
            f"{alpha.name} is not the inclusion of a generator prefix",
            field="map",
            expected_format="a standard cofibration A -> A<M>",
        )
    a, b = alpha.source, alpha.target
    cells = _cells(b, prefix)
    if not is_acyclic(cells, cells.support):
        raise VerificationError("The attached cells M are not contractible", identity="contractible-cells")
    ta, tb = _lie(a, window, tangents), _lie(b, window, tangents)
    one = b.field.one
    gens = b.presentation.generators

    def inside(m) -> bool:
        return all(g < prefix for g in m.generators)

    members: dict[int, list[Vector]] = {}
    index: dict[tuple[int, int], tuple[int, int]] = {}
    for n, cs in tb.derivations.basis.items():
        for i, (k, r) in enumerate(cs):
            if k >= prefix or inside(b.basis[gens[k].degree + n][r]):
                index[(k, r)] = (n, len(members.get(n, [])))
                members.setdefault(n, []).append({i: one})
    try:
        sub, kappa = subcomplex(tb.complex, members)
    except ChainComplexError as e:
        raise TruncationError(f"T_alpha is not closed under d at this weight cap: {e.message}") from e

    rho_cols = {}
    for n, vs in members.items():
        rho_cols[n] = []
        for v in vs:
            (i,) = v
            k, r = tb.derivations.basis[n][i]
            if k >= prefix:
                rho_cols[n].append({})
                continue
            _, pos = a.position[b.basis[gens[k].degree + n][r]]
            rho_cols[n].append(ta.derivations.vector(n, {(k, pos): one}))
    rho = _checked(ChainMap.from_columns(sub, ta.complex, rho_cols), "rho_alpha")

    sigma_cols = {}
    for n, cs in ta.derivations.basis.items():
        sigma_cols[n] = []
        for k, i in cs:
            r = b.position[a.basis[gens[k].degree + n][i]][1]
            _, pos = index[(k, r)]
            sigma_cols[n].append({pos: one})
    section = ChainMap(ta.complex, sub, {n: Matrix.from_columns(b.field, sub.dim(n), c) for n, c in sigma_cols.items()})

    cert = Certificate(
        f"T_alpha for the acyclic cofibration {alpha.name}",
        bounds={"window": [window.lo, window.hi], "cells": cells.total_dim},
    )
    trusted = min(ta.trusted_weight, tb.trusted_weight)
    cert.bounds["trusted_weight"] = trusted
    _certify(cert, window, trusted, ("rho", rho), ("kappa", kappa))
    if rho.compose(section) != ChainMap.identity(ta.complex):
        cert.fail("section", reason="rho o sigma is not the identity")
    cert.count("section")
    if not section.is_chain_map():
        cert.notices.append("extension by zero is not a chain map for these cells")

    bound = tb.exact_weight(2)

    def preserved(n: int, vec: Vector) -> bool:
        for i, c in vec.items():
            k, r = tb.derivations.basis[n][i]
            if c and k < prefix and not inside(b.basis[gens[k].degree + n][r]) and tb.value_weight(n, i) <= bound:
                return False
        return True

    _closure(cert, tb, members, preserved, limit, seed)
    logger.info(f"T_alpha of {alpha.name}: dims {dict(sorted((n, sub.dim(n)) for n in sub.support))}")
    return TangentSubalgebra("cofibration", tb, ta, tb, sub, members, rho, kappa, cert, section)


# -- transport on homology --------------------------------------------------------------------


@dataclass
class HomologyLieMap:
    """A map ``H(T_source) -> H(T_target)`` in the bases of chosen representatives."""

    source: DGLieAlgebra
    target: DGLieAlgebra
    matrices: dict[int, Matrix]
    certificate: Certificate
    zigzags: list[TangentSubalgebra] = field(default_factory=list)

    def matrix(self, n: int) -> Matrix:
        m = self.matrices.get(n)
        if m is not None:
            return m
        return Matrix.zero(self.source.field, self.target.homology()[n].betti, self.source.homology()[n].betti)

    def compose(self, other: HomologyLieMap) -> HomologyLieMap:
        """``self o other``."""
        if other.target is not self.source:
            raise ValidationError("Transported maps compose only through the same tangent algebra", field="map")
        matrices = {n: self.matrix(n) @ other.matrix(n) for n in other.matrices}
        cert = Certificate(f"{self.certificate.name} o {other.certificate.name}", passed=self.certificate.passed and other.certificate.passed)
        return HomologyLieMap(other.source, self.target, matrices, cert, other.zigzags + self.zigzags)

    def is_identity(self) -> bool:
        return all(m.rows == m.cols and m == Matrix.identity(m.field, m.rows) for m in self.matrices.values())

    def bracket_constants(self, lie: DGLieAlgebra) -> dict[str, dict[int, str]]:
        """``[h_a, h_b]`` in the homology basis, for classes in the trusted degrees."""
        h = lie.homology()
        degrees = [n for n in lie.window.trusted_degrees() if h[n].betti]
        out = {}
        for n1 in degrees:
            for n2 in degrees:
                if n1 + n2 not in h:
                    continue
                for a, ra in enumerate(h[n1].representatives):
                    for b, rb in enumerate(h[n2].representatives):
                        try:
                            coords = h[n1 + n2].coordinates(lie.bracket(n1, ra, n2, rb))
                        except ChainComplexError:
                            continue
                        if coords:
                            out[f"{n1}.{a},{n2}.{b}"] = {k: lie.field.format(c) for k, c in sorted(coords.items())}
        return out

    def to_dict(self) -> dict[str, Any]:
        f = self.source.field
        return {
            "source": self.source.name,
            "target": self.target.name,
            "matrices": {
                str(n): [[f.format(c) for c in row] for row in m.to_dense()] for n, m in sorted(self.matrices.items())
            },
            "certificate": self.certificate.to_dict(),
        }


def zigzag_map(z: TangentSubalgebra, window: DegreeWindow) -> HomologyLieMap:
    """``H(to_target) o H(to_source)^-1`` on the trusted degrees."""
    trusted = min(z.source.trusted_weight, z.target.trusted_weight)
    middle = homology(z.complex, window, trusted)
    back = induced_homology_map(z.to_source, middle, z.source.homology())
    forth = induced_homology_map(z.to_target, middle, z.target.homology())
    f = z.source.field
    cert = Certificate(f"transport through {z.certificate.name}", passed=z.certificate.passed)
    matrices = {}
    for n in window.trusted_degrees():
        leg = back.get(n)
        if leg is None or leg.rows != leg.cols or rank(leg) != leg.rows:
            raise VerificationError(
                f"The leg to {z.source.name} is not a quasi-isomorphism in degree {n}",
                identity="zig-zag",
                details={"degree": n},
            )
        matrices[n] = forth[n] @ inverse(leg) if leg.rows else Matrix.zero(f, z.target.homology()[n].betti, 0)
        cert.count("degree")
    return HomologyLieMap(z.source, z.target, matrices, cert, [z])


def check_brackets(t: HomologyLieMap) -> None:
    """``T[a, b] = [T a, T b]`` on pairs of homology classes."""
    src, tgt = t.source, t.target
    hs, ht = src.homology(), tgt.homology()
    degrees = [n for n in src.window.trusted_degrees() if hs[n].betti]
    cert = t.certificate
    for n1 in degrees:
        for n2 in degrees:
            n = n1 + n2
            if n not in t.matrices:
                continue
            for a, ra in enumerate(hs[n1].representatives):
                for b, rb in enumerate(hs[n2].representatives):
                    try:
                        lhs = t.matrix(n).apply(hs[n].coordinates(src.bracket(n1, ra, n2, rb)))
                        ta = _representative(ht[n1], t.matrix(n1).column(a))
                        tb = _representative(ht[n2], t.matrix(n2).column(b))
                        rhs = ht[n].coordinates(tgt.bracket(n1, ta, n2, tb))
                    except ChainComplexError:
                        cert.skipped += 1
                        continue
                    if lhs != rhs:
                        cert.fail("bracket-compatible", degrees=[n1, n2], classes=[a, b])
                        return
                    cert.count("bracket-compatible")


def _representative(h: HomologyGroup, coords: Mapping[int, Scalar]) -> Vector:
    out: Vector = {}
    for k, c in coords.items():
        axpy(out, c, h.representatives[k])
    return out


@log_performance("transport")
def transport(
    alpha: AlgebraMap,
    window: DegreeWindow,
    factorization: tuple[AlgebraMap, AlgebraMap] | None = None,
    tangents: dict | None = None,
) -> HomologyLieMap:
    """
    ``T(alpha): H(T_A) -> H(T_B)`` for a weak equivalence of cell algebras.

    A prefix inclusion goes through ``t_cof``, a surjection through ``t_fib``; any other map
    is factored as a standard acyclic cofibration followed by an acyclic fibration, unless a
    factorization ``(i, p)`` with ``p o i = alpha`` is supplied.
    """
    tangents = {} if tangents is None else tangents
    if factorization is not None:
        i, p = factorization
        steps = [t_cof(i, window, tangents), t_fib(p, window, tangents)]
    elif _prefix_inclusion(alpha) is not None:
        steps = [t_cof(alpha, window, tangents)]
    elif alpha.chain_map().is_surjective(alpha.target.complex.support):
        steps = [t_fib(alpha, window, tangents)]
    else:
        fac = factorize_fibration(alpha, window)
        steps = [t_cof(fac.cofibration, window, tangents), t_fib(fac.fibration, window, tangents)]
    result = zigzag_map(steps[0], window)
    for z in steps[1:]:
        result = zigzag_map(z, window).compose(result)
    result.certificate.name = f"transport along {alpha.name}"
    result.certificate.passed = result.certificate.passed and all(z.certificate.passed for z in steps)
    check_brackets(result)
    logger.info(f"transported {alpha.name} through {len(steps)} zig-zag(s)")
    return result


def transport_independence(alpha: AlgebraMap, window: DegreeWindow, tangents: dict | None = None) -> Certificate:
    """The direct route and the generic factorization transport ``alpha`` by the same matrices."""
    tangents = {} if tangents is None else tangents
    direct = transport(alpha, window, tangents=tangents)
    fac = factorize_fibration(alpha, window)
    other = transport(alpha, window, factorization=(fac.cofibration, fac.fibration), tangents=tangents)
    cert = Certificate(f"factorization independence for {alpha.name}", bounds={"window": [window.lo, window.hi]})
    for n in window.trusted_degrees():
        if direct.matrix(n) != other.matrix(n):
            cert.fail("factorization-independence", degree=n)
            return cert
        cert.count("degrees")
    return cert
