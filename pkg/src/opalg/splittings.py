"""
Sigma-splittings of operads.

A splitting is a family of maps ``t(n): O(n) -> O(n) (x) k S_n`` with target basis index
``u * n! + rank(sigma)``. It must be equivariant (EQU), split the map
``pi(u (x) sigma) = u sigma`` (SPL) and commute with compositions (COM).
"""

from __future__ import annotations

import math
from collections.abc import Mapping

from .exactla import Matrix, Scalar, accumulate, axpy
from .exceptions import FieldArithmeticError, SplittingError, ValidationError
from .logging_config import get_logger, log_performance
from .models import Certificate
from .operads import Operad
from .symmetry import MonotoneInjection, Permutation, factorize

logger = get_logger(__name__)


class SigmaSplitting:
    """Per-arity flat matrices of ``t(n)``."""

    def __init__(self, operad: Operad, maps: Mapping[int, Matrix], name: str = ""):
        for n, m in maps.items():
            size = math.factorial(n)
            if (m.rows, m.cols) != (operad.dim(n) * size, operad.dim(n)):
                raise ValidationError(f"Splitting component in arity {n} has the wrong shape", field="splitting")
        self.operad = operad
        self.maps = dict(maps)
        self.name = name

    def apply(self, n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        m = self.maps.get(n)
        return m.apply(vec) if m is not None else {}

    def __repr__(self):
        return f"SigmaSplitting({self.name}, arities {sorted(self.maps)})"


def _split_index(n: int, u: int, sigma: Permutation) -> int:
    return u * math.factorial(n) + sigma.rank


def _unsplit(n: int, index: int) -> tuple[int, Permutation]:
    u, r = divmod(index, math.factorial(n))
    return u, Permutation.from_rank(n, r)


def averaging_splitting(o: Operad, max_arity: int | None = None) -> SigmaSplitting:
    """``t(u) = (1/n!) sum_sigma u sigma^-1 (x) sigma``; needs the characteristic not to divide n!."""
    max_arity = max_arity or o.max_arity
    f = o.field
    maps = {}
    for n in range(1, max_arity + 1):
        size = math.factorial(n)
        if f.divides_group_order(size):
            raise FieldArithmeticError(
                f"Averaging over S{n} divides by {size}, which is zero in {f.name}",
                characteristic=f.characteristic,
            )
        weight = f.inverse(f(size))
        perms = Permutation.all_permutations(n)
        cols = []
        for u in range(o.dim(n)):
            col: dict[int, Scalar] = {}
            for sigma in perms:
                for w, c in o.act(n, {u: f.one}, sigma.inverse()).items():
                    accumulate(col, _split_index(n, w, sigma), weight * c)
            cols.append(col)
        maps[n] = Matrix.from_columns(f, o.dim(n) * size, cols)
    return SigmaSplitting(o, maps, "averaging")


def canonical_splitting(o: Operad) -> SigmaSplitting:
    """For ``O = T^S``: ``t(u (x) sigma) = (u (x) e) (x) sigma``."""
    if getattr(o, "symmetrized_from", None) is None:
        raise SplittingError(
            f"{o.name} is not presented as a symmetrization", axiom="SPL",
            suggestion="Build the operad with symmetrize() or use the averaging splitting",
        )
    f = o.field
    maps = {}
    for n in range(1, o.max_arity + 1):
        size = math.factorial(n)
        cols = []
        for i in range(o.dim(n)):
            u, sigma = _unsplit(n, i)
            cols.append({_split_index(n, u * size, sigma): f.one})
        maps[n] = Matrix.from_columns(f, o.dim(n) * size, cols)
    return SigmaSplitting(o, maps, "canonical")


def perturbed_splitting(o: Operad, arity: int = 3, twist: Permutation | None = None) -> SigmaSplitting:
    """
    Canonical splitting altered in one arity: ``t(u (x) sigma) = (u (x) t0) (x) t0^-1 sigma``.

    It still satisfies EQU and SPL but not COM; used as a negative control.
    """
    twist = twist or Permutation.transposition(arity, 2, 3)
    base = canonical_splitting(o)
    f = o.field
    size = math.factorial(arity)
    cols = []
    for i in range(o.dim(arity)):
        u, sigma = _unsplit(arity, i)
        lifted = u * size + twist.rank
        cols.append({_split_index(arity, lifted, twist.inverse() * sigma): f.one})
    maps = dict(base.maps)
    maps[arity] = Matrix.from_columns(f, o.dim(arity) * size, cols)
    return SigmaSplitting(o, maps, f"perturbed({twist.images})")


def _rho_f_vector(
    o: Operad, n: int, vec: Mapping[int, Scalar], f_map: MonotoneInjection
) -> dict[int, Scalar]:
    """Apply ``rho_f`` to a vector of ``O(wrapped) (x) k S_n`` given in split indices."""
    out: dict[int, Scalar] = {}
    small = math.factorial(f_map.s)
    for index, c in vec.items():
        u, sigma = _unsplit(n, index)
        tau, rho = factorize(f_map, sigma)
        for w, a in o.act(n, {u: o.field.one}, tau).items():
            accumulate(out, w * small + rho.rank, c * a)
    return out


def _check_equ(o: Operad, t: SigmaSplitting, n: int, cert: Certificate) -> None:
    f = o.field
    for u in range(o.dim(n)):
        e = {u: f.one}
        image = t.apply(n, e)
        for j in range(1, n):
            s = Permutation.adjacent(n, j)
            lhs = t.apply(n, o.act(n, e, s))
            rhs: dict[int, Scalar] = {}
            for index, c in image.items():
                w, sigma = _unsplit(n, index)
                accumulate(rhs, _split_index(n, w, sigma * s), c)
            if lhs != rhs:
                raise SplittingError(f"t({n}) is not equivariant for s_{j}", axiom="EQU", arity=n, basis=u)
            cert.count("EQU")


def _check_spl(o: Operad, t: SigmaSplitting, n: int, cert: Certificate) -> None:
    f = o.field
    for u in range(o.dim(n)):
        back: dict[int, Scalar] = {}
        for index, c in t.apply(n, {u: f.one}).items():
            w, sigma = _unsplit(n, index)
            axpy(back, c, o.act(n, {w: f.one}, sigma))
        if back != {u: f.one}:
            raise SplittingError(f"pi o t({n}) is not the identity", axiom="SPL", arity=n, basis=u)
        cert.count("SPL")


def _check_chain(o: Operad, t: SigmaSplitting, n: int, cert: Certificate) -> None:
    f = o.field
    size = math.factorial(n)
    for u in range(o.dim(n)):
        e = {u: f.one}
        lhs = t.apply(n, o.d(n, e))
        rhs: dict[int, Scalar] = {}
        for index, c in t.apply(n, e).items():
            w, r = divmod(index, size)
            for w2, a in o.d(n, {w: f.one}).items():
                accumulate(rhs, w2 * size + r, c * a)
        if lhs != rhs:
            raise SplittingError(f"t({n}) does not commute with d", axiom="chain-map", arity=n, basis=u)
        cert.count("chain-map")


def _check_com(o: Operad, t: SigmaSplitting, n: int, m: int, k: int, cert: Certificate) -> None:
    f = o.field
    total = n + m - 1
    f_map = MonotoneInjection.omitting(n, [k])
    g_map = MonotoneInjection.omitting(total, range(k, k + m))
    small = math.factorial(n - 1)
    for a in range(o.dim(n)):
        ta = t.apply(n, {a: f.one})
        for b in range(o.dim(m)):
            if o.exceeds((n, [a]), (m, [b])):
                cert.skipped += 1
                continue
            eb = {b: f.one}
            left: dict[int, Scalar] = {}
            for index, c in _rho_f_vector(o, n, ta, f_map).items():
                u, r = divmod(index, small)
                for w, x in o.compose(n, k, {u: f.one}, m, eb).items():
                    accumulate(left, w * small + r, c * x)
            right = _rho_f_vector(o, total, t.apply(total, o.compose_basis(n, k, m, a, b)), g_map)
            if left != right:
                raise SplittingError(
                    f"COM fails for o_{k} in arities ({n}, {m})",
                    axiom="COM",
                    arity=total,
                    basis=(a, b),
                    details={"triple": (n, m, k)},
                )
            cert.count("COM")


@log_performance("sigma-splitting axioms")
def check_splitting(
    o: Operad, t: SigmaSplitting, max_arity: int | None = None, all_slots: bool = False
) -> Certificate:
    """
    Check EQU, SPL, COM and the chain-map property up to ``max_arity``.

    COM is checked for ``o_1`` only unless ``all_slots`` is set; the other slots follow
    through the symmetric group action.
    """
    if not o.symmetric:
        raise SplittingError("Splittings need a symmetric operad", axiom="EQU")
    max_arity = min(max_arity or o.max_arity, o.max_arity, max(t.maps))
    cert = Certificate(f"splitting {t.name} of {o.name}", bounds={"max_arity": max_arity})
    for n in range(1, max_arity + 1):
        _check_equ(o, t, n, cert)
        _check_spl(o, t, n, cert)
        _check_chain(o, t, n, cert)
    for n in range(1, max_arity + 1):
        for m in range(1, max_arity + 2 - n):
            for k in range(1, n + 1) if all_slots else (1,):
                _check_com(o, t, n, m, k, cert)
    logger.info(f"{cert.name}: EQU, SPL, COM hold up to arity {max_arity}")
    return cert
