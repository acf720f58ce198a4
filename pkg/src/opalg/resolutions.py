"""
Factorizations and cofibrant resolutions of presented algebras.

Both constructions only ever append generators, so the results are standard cell
algebras by construction; what gets verified is the map to the target.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .algebras import (
    AlgebraMap,
    AlgebraPresentation,
    Monomial,
    Polynomial,
    RealizedAlgebra,
    realize,
)
from .complexes import ChainMap, Complex, DegreeWindow, HomologyGroup, cone, homology_in_degree
from .exactla import Scalar, axpy, scaled
from .exceptions import ChainMapError, SplittingError, TruncationError, ValidationError, VerificationError
from .logging_config import get_logger, log_performance
from .models import Certificate
from .symmetry import Permutation

logger = get_logger(__name__)


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


# -- CM5 (i) ------------------------------------------------------------------------------


@dataclass
class Factorization:
    """``A -> C -> B`` with the first map a standard acyclic cofibration."""

    presentation: AlgebraPresentation
    cofibration: AlgebraMap
    fibration: AlgebraMap
    certificate: Certificate
    cells: dict[str, str] = field(default_factory=dict)  # new generator -> basis element it covers


@log_performance("factorize")
def factorize_fibration(f: AlgebraMap, window: DegreeWindow, workers: int = 1) -> Factorization:
    """
    ``A -> A<T_b, S_b; dT_b = S_b> -> B`` with ``T_b -> b`` and ``S_b -> db``.

    One contractible pair is attached for every basis element b of B in the window, so the
    second map is onto every window degree.
    """
    a, b = f.source, f.target
    cert = Certificate(f"factorization of {f.name}", bounds={"window": [window.lo, window.hi]})
    c = a.presentation.copy(f"{a.name}<T,S>")
    images: dict[str, Polynomial] = {g.name: img for g, img in zip(a.presentation.generators, f.images, strict=True)}
    cells: dict[str, str] = {}
    k = 0
    for deg in window.degrees():
        for m in b.basis.get(deg, []):
            element = {m: b.field.one}
            de = b.d(element)
            if de and deg + 1 not in window:
                raise TruncationError(
                    f"d({b.render(element)}) lands in degree {deg + 1}, outside the window [{window.lo}, {window.hi}]",
                    suggestion="Widen the degree window by one at the top",
                )
            k += 1
            t_name, s_name = _fresh(c, f"T{k}"), _fresh(c, f"S{k}")
            s_index = c.add_generator(s_name, deg + 1)
            c.add_generator(t_name, deg, c.generator(s_index))
            images[t_name] = element
            images[s_name] = de
            cells[t_name] = b.render(element)
    realized = realize(c, workers=workers)
    p = AlgebraMap(realized, b, images, operad_map=f.operad_map, name="p")
    i = AlgebraMap(a, realized, {g.name: realized.generator(g.name) for g in a.presentation.generators}, name="i")
    p.chain_map()
    cert.count("chain-map")
    for g, img in zip(a.presentation.generators, f.images, strict=True):
        if p.apply(i.images[a.presentation.index(g.name)]) != img:
            raise VerificationError(f"p o i differs from f on {g.name}", identity="factorization")
        cert.count("p-o-i")
    degrees = [n for n in window.degrees() if b.complex.dim(n)]
    if not p.chain_map(check=False).is_surjective(degrees):
        cert.fail("surjective", degrees=degrees)
    cert.count("surjective", len(degrees))
    cert.bounds["pairs"] = k
    logger.info(f"factorized {f.name} through {k} contractible pairs")
    return Factorization(c, i, p, cert, cells)


def _fresh(p: AlgebraPresentation, name: str) -> str:
    taken = set(p.names)
    candidate, k = name, 1
    while candidate in taken:
        k += 1
        candidate = f"{name}_{k}"
    return candidate


# -- CM5 (ii) -----------------------------------------------------------------------------


@dataclass
class KilledClass:
    stage: int
    generator: str
    degree: int
    weight: int
    differential: str
    image: str


@dataclass
class Resolution:
    presentation: AlgebraPresentation
    algebra: RealizedAlgebra
    epsilon: AlgebraMap
    certificate: Certificate
    killed: list[KilledClass] = field(default_factory=list)
    unresolved: list[dict[str, Any]] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.unresolved


def leading_weight(x: Complex, n: int, vec: Mapping[int, Scalar]) -> int:
    weights = x.weights(n) or ()
    return min((weights[i] for i in vec if i < len(weights)), default=0)


def cone_classes(
    x: Complex, degrees: Sequence[int], trusted_weight: int, workers: int
) -> dict[int, HomologyGroup]:
    def one(n: int) -> tuple[int, HomologyGroup]:
        return n, homology_in_degree(x, n, trusted_weight)

    if workers > 1 and len(degrees) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return dict(pool.map(one, degrees))
    return dict(one(n) for n in degrees)


def _seed_under(under: AlgebraMap, b: RealizedAlgebra) -> tuple[AlgebraPresentation, dict[str, Polynomial]]:
    """Generators of the source of ``under`` followed by those of B, relations dropped."""
    q = under.source.presentation
    if q.operad is not b.operad:
        raise ValidationError("Relative resolutions need both algebras over the same operad", field="under")
    current = q.copy(f"C({b.name})", weight_cap=b.weight_cap)
    images: dict[str, Polynomial] = {g.name: img for g, img in zip(q.generators, under.images, strict=True)}
    offset = q.size
    for g in b.presentation.generators:
        diff = {Monomial(tuple(k + offset for k in m.generators), m.operation): c for m, c in g.differential.items()}
        name = _fresh(current, g.name)
        current.add_generator(name, g.degree, diff, g.weight)
        images[name] = b.generator(g.name)
    return current, images


@log_performance("resolve")
def resolve(
    b: RealizedAlgebra,
    degree_floor: int = -4,
    mode: str = "minimal",
    stage_cap: int = 8,
    workers: int = 1,
    prefix: str = "y",
    under: AlgebraMap | None = None,
) -> Resolution:
    """
    Cofibrant resolution ``C -> B`` by killing the homology of the cone of the augmentation.

    ``C_0`` is the free algebra on the generators of B. A class of the cone in degree n is
    a pair ``(c, b)`` with ``c`` a cycle of ``C`` in degree ``n + 1`` and ``f(c) = -db``; it is
    killed by a generator ``T`` of degree n with ``dT = c`` and ``T -> -b``. Minimal mode
    kills the classes of lowest leading weight in the highest degree, one stage at a time;
    full mode kills every class found in a stage. Classes are only looked for in degrees
    ``>= degree_floor`` and weights up to the trusted weight of the current stage.

    With ``under: Q -> B`` the resolution starts from the generators of Q followed by those
    of B, so that Q stays a generator prefix of the result.
    """
    if mode not in ("minimal", "full"):
        raise ValidationError(f"Unknown resolution mode '{mode}'", field="mode", value=mode, expected_format="minimal or full")
    if stage_cap < 1:
        raise ValidationError("Stage cap must be at least 1", field="stage_cap", value=str(stage_cap))
    if under is None:
        current = b.presentation.without_relations()
        current.name = f"C({b.name})"
        images: dict[str, Polynomial] = {g.name: b.generator(g.name) for g in current.generators}
    else:
        current, images = _seed_under(under, b)
    killed: list[KilledClass] = []
    cert = Certificate(
        f"resolution of {b.name}",
        bounds={"degree_floor": degree_floor, "stage_cap": stage_cap, "weight_cap": b.weight_cap, "mode": mode},
    )
    stage = 0
    while True:
        algebra = realize(current, workers=workers)
        epsilon = AlgebraMap(algebra, b, images, name="epsilon")
        try:
            chain = epsilon.chain_map()
        except ChainMapError as e:
            raise VerificationError(f"Augmentation of {current.name} is not a chain map", identity="resolution") from e
        x = cone(chain)
        trusted = min(algebra.trusted_weight, b.trusted_weight)
        top = max(x.support, default=degree_floor)
        degrees = list(range(top, degree_floor - 1, -1))
        groups = cone_classes(x, degrees, trusted, workers)
        pending = [(n, rep) for n in degrees for rep in groups[n].representatives]
        logger.debug(f"stage {stage}: {len(pending)} cone classes in degrees {degree_floor}..{top}, weight <= {trusted}")
        if not pending:
            break
        if stage >= stage_cap:
            unresolved = [
                {"degree": n, "weight": leading_weight(x, n, rep), "cycle": _describe_class(algebra, b, x, n, rep)}
                for n, rep in pending
            ]
            cert.fail("resolution", unresolved=unresolved)
            cert.count("stages", stage)
            cert.notices.append(f"stopped after {stage} stages with {len(unresolved)} classes left")
            logger.warning(f"resolution of {b.name} stopped at the stage cap with {len(unresolved)} classes left")
            return _finish(current, algebra, epsilon, b, x, cert, killed, degrees, trusted, unresolved)
        if mode == "minimal":
            n = pending[0][0]
            in_degree = [rep for m, rep in pending if m == n]
            low = min(leading_weight(x, n, rep) for rep in in_degree)
            chosen = [(n, rep) for rep in in_degree if leading_weight(x, n, rep) == low]
        else:
            chosen = pending
        stage += 1
        nxt = current.copy(current.name)
        for n, rep in chosen:
            c_vec, b_vec = split_cone_vector(algebra.complex, n, rep)
            c_poly = algebra.polynomial(n + 1, c_vec)
            b_poly = b.polynomial(n, b_vec)
            name = _fresh(nxt, f"{prefix}{len(killed) + 1}")
            weight = max(leading_weight(x, n, rep), 1)
            nxt.add_generator(name, n, c_poly, weight)
            images[name] = scaled(b_poly, -1)
            killed.append(KilledClass(stage, name, n, weight, nxt.render(c_poly), b.render(images[name])))
            logger.info(f"stage {stage}: {name} in degree {n} with d{name} = {nxt.render(c_poly)}")
        current = nxt
    cert.count("stages", stage)
    return _finish(current, algebra, epsilon, b, x, cert, killed, degrees, trusted, [])


def split_cone_vector(c: Complex, n: int, vec: Mapping[int, Scalar]) -> tuple[dict[int, Scalar], dict[int, Scalar]]:
    split = c.dim(n + 1)
    return {i: v for i, v in vec.items() if i < split}, {i - split: v for i, v in vec.items() if i >= split}


def _describe_class(algebra: RealizedAlgebra, b: RealizedAlgebra, x: Complex, n: int, rep) -> str:
    c_vec, b_vec = split_cone_vector(algebra.complex, n, rep)
    c_text = algebra.render(algebra.polynomial(n + 1, c_vec))
    if not b_vec:
        return c_text
    return f"{c_text} | {b.render(b.polynomial(n, b_vec))}"


def _finish(current, algebra, epsilon, b, x, cert, killed, degrees, trusted, unresolved) -> Resolution:
    trusted_degrees = [n for n in degrees if n > min(degrees)] if degrees else []
    chain = epsilon.chain_map(check=False)
    surjective = chain.is_surjective([n for n in trusted_degrees if b.complex.dim(n)])
    cert.count("surjective", len(trusted_degrees))
    if not surjective:
        cert.fail("surjective", degrees=trusted_degrees)
    if not unresolved:
        cert.count("cone-acyclic", len(degrees))
    cert.bounds.update(
        {
            "trusted_degrees": [min(trusted_degrees), max(trusted_degrees)] if trusted_degrees else None,
            "trusted_weight": trusted,
            "generators": len(current.generators),
        }
    )
    return Resolution(current, algebra, epsilon, cert, killed, unresolved)


# -- homotopy extension ---------------------------------------------------------------------


def presentation_on_complex(o, v: Complex, cap: int, name: str = "F(V)") -> AlgebraPresentation:
    """
    Free algebra on the basis of V with its linear differential.

    Basis labels become generator names; generators are added from the top degree down so
    that every differential only uses earlier generators.
    """
    p = AlgebraPresentation(o, cap, name)
    for deg in sorted(v.support, reverse=True):
        for i, label in enumerate(v.basis_labels(deg)):
            diff: Polynomial = {}
            for r, c in v.d(deg).column(i).items():
                axpy(diff, c, p.generator(str(v.basis_labels(deg + 1)[r])))
            p.add_generator(str(label), deg, diff)
    return p


class AlgebraHomotopyExtension:
    """
    ``H: F(V) -> F(V)`` of degree -1 with ``dH + Hd = id - F(alpha)``, from ``dh + hd = id - alpha``.

    On ``u (x) x_1..x_n`` the splitting rewrites u as ``sum w sigma`` so that the element
    becomes ``sum +- w (x) y`` with an ordered word y, and then
    ``H(w; y) = sum_i (-1)^{|w| + |y_<i|} w(alpha y_1, ..., alpha y_{i-1}, h y_i, y_{i+1}, ...)``.
    """

    def __init__(self, v: Complex, alpha: ChainMap, h: ChainMap, cap: int, operad, name: str = "H"):
        if operad.splitting is None:
            raise SplittingError(
                f"{operad.name} carries no Sigma-splitting",
                suggestion="Use an operad with a splitting (Ass, or Com/Lie in characteristic 0)",
            )
        alpha.check()
        if h.degree_shift != -1:
            raise ValidationError("h must have degree -1", field="h")
        if h.boundary() != ChainMap.identity(v) - alpha:
            raise VerificationError("dh + hd differs from id - alpha", identity="homotopy")
        self.v = v
        self.alpha = alpha
        self.h = h
        self.operad = operad
        self.name = name
        self.presentation = presentation_on_complex(operad, v, cap)
        self.algebra = realize(self.presentation)
        p = self.presentation
        slots = [(deg, i) for deg in sorted(v.support, reverse=True) for i in range(v.dim(deg))]
        self._alpha_images = [self._linear(alpha, deg, i) for deg, i in slots]
        self._h_images = [self._linear(h, deg, i) for deg, i in slots]
        self._memo: dict[Monomial, Polynomial] = {}

    def _linear(self, m: ChainMap, degree: int, i: int) -> Polynomial:
        out: Polynomial = {}
        for r, c in m.apply(degree, {i: self.v.field.one}).items():
            label = self.v.basis_labels(degree + m.degree_shift)[r]
            axpy(out, c, self.presentation.generator(str(label)))
        return out

    def apply_monomial(self, m: Monomial) -> Polynomial:
        hit = self._memo.get(m)
        if hit is not None:
            return hit
        p, o = self.presentation, self.operad
        n = m.arity
        size = math.factorial(n)
        degrees = [p.generators[g].degree for g in m.generators]
        singles = [p.generator(g) for g in m.generators]
        out: Polynomial = {}
        for index, c in o.splitting.apply(n, {m.operation: p.field.one}).items():
            w, r = divmod(index, size)
            sigma = Permutation.from_rank(n, r)
            exponent = sum(
                degrees[a] * degrees[b]
                for a in range(n)
                for b in range(a + 1, n)
                if sigma(a + 1) > sigma(b + 1)
            )
            order = [sigma.inverse()(j) - 1 for j in range(1, n + 1)]
            word = [m.generators[k] for k in order]
            prefix = o.degree(n, w)
            for i, g in enumerate(word):
                if self._h_images[g]:
                    inputs = (
                        [self._alpha_images[x] for x in word[:i]]
                        + [self._h_images[g]]
                        + [singles[order[j]] for j in range(i + 1, n)]
                    )
                    axpy(out, c * _sign(exponent + prefix), p.mu(n, {w: p.field.one}, inputs))
                prefix += p.generators[g].degree
        self._memo[m] = out
        return out

    def apply(self, poly: Mapping[Monomial, Scalar]) -> Polynomial:
        out: Polynomial = {}
        for m, c in poly.items():
            axpy(out, c, self.apply_monomial(m))
        return self.presentation.truncate(out)

    def free_alpha(self) -> AlgebraMap:
        images = {g.name: img for g, img in zip(self.presentation.generators, self._alpha_images, strict=True)}
        return AlgebraMap(self.algebra, self.algebra, images, name="F(alpha)")

    def chain_map(self) -> ChainMap:
        a = self.algebra
        cols = {}
        for deg, ms in a.basis.items():
            cols[deg] = [a.vector(self.apply_monomial(m))[1] for m in ms]
        return ChainMap.from_columns(a.complex, a.complex, cols, degree_shift=-1)

    def check(self) -> Certificate:
        """Assert ``dH + Hd = id - F(alpha)`` on every weight component up to the cap."""
        a = self.algebra
        cert = Certificate(f"homotopy extension {self.name}", bounds={"weight_cap": a.weight_cap})
        expected = ChainMap.identity(a.complex) - self.free_alpha().chain_map()
        got = self.chain_map().boundary()
        for deg in a.complex.support:
            if got.component(deg) != expected.component(deg):
                raise VerificationError(
                    f"dH + Hd differs from id - F(alpha) in degree {deg}", identity="homotopy-extension",
                    details={"degree": deg},
                )
            cert.count("dH", a.complex.dim(deg))
        return cert

    def preserves_ideal(self, relations: Sequence[Mapping[Monomial, Any]]) -> bool:
        """``H(J) ⊆ J`` for the dg ideal generated by ``relations`` inside the cap."""
        quotient = self.presentation.copy(f"{self.presentation.name}/J")
        for r in relations:
            quotient.add_relation(r)
        ideal = realize(quotient, leibniz_samples=0).ideal
        if ideal is None:
            return True
        return all(ideal.contains(self.apply(row)) for row in ideal.basis())


def homotopy_extension(v: Complex, alpha: ChainMap, h: ChainMap, operad, cap: int = 4) -> AlgebraHomotopyExtension:
    return AlgebraHomotopyExtension(v, alpha, h, cap, operad)
