"""
Permutations, monotone injections and the iota/rho factorization of symmetric groups.

Conventions: permutations are 1-based image tuples, composed as ``(s t)(i) = s(t(i))``,
and act on the right. On an operation ``p`` of arity n, ``(p s)(x_1, ..., x_n)`` places
``x_{s^-1(j)}`` in slot j.
"""

from __future__ import annotations

import itertools
import math
import threading
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cache
from typing import Any

from .complexes import ChainMap, Complex
from .exactla import Field, Matrix, Scalar, accumulate, axpy
from .exceptions import DimensionMismatchError, ValidationError, VerificationError


@dataclass(frozen=True, order=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValidationError(
                f"Not a permutation: {self.images}", field="permutation", value=str(self.images)
            )

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: Permutation) -> Permutation:
        if other.n != self.n:
            raise DimensionMismatchError(f"Cannot compose S{self.n} with S{other.n}")
        return Permutation(tuple(self.images[other.images[i] - 1] for i in range(self.n)))

    def inverse(self) -> Permutation:
        inv = [0] * self.n
        for i, v in enumerate(self.images, start=1):
            inv[v - 1] = i
        return Permutation(tuple(inv))

    def inversions(self) -> int:
        im = self.images
        return sum(1 for a in range(self.n) for b in range(a + 1, self.n) if im[a] > im[b])

    @property
    def sign(self) -> int:
        return -1 if self.inversions() % 2 else 1

    def is_identity(self) -> bool:
        return all(v == i for i, v in enumerate(self.images, start=1))

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return _identity(n)

    @classmethod
    def adjacent(cls, n: int, i: int) -> Permutation:
        """The transposition ``s_i`` swapping i and i+1."""
        if not 1 <= i < n:
            raise ValidationError(f"s_{i} does not exist in S{n}", field="permutation")
        images = list(range(1, n + 1))
        images[i - 1], images[i] = images[i], images[i - 1]
        return cls(tuple(images))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> Permutation:
        images = list(range(1, n + 1))
        images[a - 1], images[b - 1] = images[b - 1], images[a - 1]
        return cls(tuple(images))

    @classmethod
    def all_permutations(cls, n: int) -> list[Permutation]:
        """All of S_n in lexicographic order of image tuples."""
        return list(_all_permutations(n))

    @property
    def rank(self) -> int:
        """Lexicographic (Lehmer) rank in 0..n!-1."""
        r = 0
        remaining = list(range(1, self.n + 1))
        for k, v in enumerate(self.images):
            pos = remaining.index(v)
            r += pos * math.factorial(self.n - 1 - k)
            remaining.pop(pos)
        return r

    @classmethod
    def from_rank(cls, n: int, r: int) -> Permutation:
        return _all_permutations(n)[r]

    def reduced_word(self) -> tuple[int, ...]:
        """Indices ``i_1..i_k`` with ``self = s_{i_1} ... s_{i_k}`` and k = inversions."""
        return _reduced_word(self.images)

    def __repr__(self):
        return f"Permutation{self.images}"


@cache
def _identity(n: int) -> Permutation:
    return Permutation(tuple(range(1, n + 1)))


@cache
def _all_permutations(n: int) -> tuple[Permutation, ...]:
    return tuple(Permutation(p) for p in itertools.permutations(range(1, n + 1)))


@cache
def _reduced_word(images: tuple[int, ...]) -> tuple[int, ...]:
    current = list(images)
    recorded = []
    while True:
        descent = next((i for i in range(len(current) - 1) if current[i] > current[i + 1]), None)
        if descent is None:
            break
        # right multiplication by s_i swaps positions i, i+1
        current[descent], current[descent + 1] = current[descent + 1], current[descent]
        recorded.append(descent + 1)
    return tuple(reversed(recorded))


def block_permutation(sigma: Permutation, sizes: Sequence[int]) -> Permutation:
    """
    Permutation moving whole blocks: with ``sizes[v-1]`` inputs plugged into variable v of
    ``a sigma``, ``gamma(a sigma; b_1..b_n) = gamma(a; b_{s^-1(1)}, ..., b_{s^-1(n)}) * result``.
    """
    n = sigma.n
    if len(sizes) != n:
        raise DimensionMismatchError(f"{len(sizes)} block sizes for S{n}")
    inv = sigma.inverse()
    new_offsets = [0] * (n + 1)
    for v in range(1, n + 1):
        new_offsets[v] = new_offsets[v - 1] + sizes[v - 1]
    inverse_images = []
    for p in range(1, n + 1):
        v = inv(p)
        inverse_images.extend(new_offsets[v - 1] + t for t in range(1, sizes[v - 1] + 1))
    return Permutation(tuple(inverse_images)).inverse()


def block_sum(perms: Sequence[Permutation]) -> Permutation:
    """Direct sum ``t_1 + ... + t_n`` acting blockwise on consecutive ranges."""
    images: list[int] = []
    offset = 0
    for tau in perms:
        images.extend(offset + v for v in tau.images)
        offset += tau.n
    return Permutation(tuple(images))


def insert_block(tau: Permutation, n: int, position: int) -> Permutation:
    """``tau`` acting on the block ``position .. position + m - 1`` of ``n + m - 1`` slots."""
    parts = [Permutation.identity(1)] * n
    parts[position - 1] = tau
    return block_sum(parts)


@dataclass(frozen=True)
class MonotoneInjection:
    """Strictly increasing ``f: <s> -> <n>``."""

    s: int
    n: int
    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.values) != self.s or self.s > self.n:
            raise ValidationError(
                f"Injection <{self.s}> -> <{self.n}> needs {self.s} values",
                field="injection",
                value=str(self.values),
            )
        if any(not 1 <= v <= self.n for v in self.values) or any(
            a >= b for a, b in itertools.pairwise(self.values)
        ):
            raise ValidationError(
                f"Values {self.values} are not strictly increasing inside 1..{self.n}",
                field="injection",
                value=str(self.values),
            )

    def __call__(self, j: int) -> int:
        return self.values[j - 1]

    @classmethod
    def omitting(cls, n: int, omitted: Iterable[int]) -> MonotoneInjection:
        skip = set(omitted)
        values = tuple(v for v in range(1, n + 1) if v not in skip)
        return cls(len(values), n, values)

    @classmethod
    def identity(cls, n: int) -> MonotoneInjection:
        return cls(n, n, tuple(range(1, n + 1)))

    @classmethod
    def all_injections(cls, n: int) -> list[MonotoneInjection]:
        return [
            cls(s, n, values)
            for s in range(n + 1)
            for values in itertools.combinations(range(1, n + 1), s)
        ]


def iota_f(f: MonotoneInjection, rho: Permutation) -> Permutation:
    """Extend ``rho`` on the image of f by the identity: ``f(j) -> f(rho(j))``."""
    if rho.n != f.s:
        raise ValidationError(f"iota_f needs a permutation of {f.s}, got S{rho.n}", field="permutation")
    images = list(range(1, f.n + 1))
    for j in range(1, f.s + 1):
        images[f(j) - 1] = f(rho(j))
    return Permutation(tuple(images))


def rho_f(f: MonotoneInjection, sigma: Permutation) -> Permutation:
    """The unique rho with ``rho(i) < rho(j) <=> sigma(f(i)) < sigma(f(j))``."""
    if sigma.n != f.n:
        raise ValidationError(f"rho_f needs a permutation of {f.n}, got S{sigma.n}", field="permutation")
    values = [sigma(f(j)) for j in range(1, f.s + 1)]
    order = sorted(values)
    return Permutation(tuple(order.index(v) + 1 for v in values))


def is_monotone_after(tau: Permutation, f: MonotoneInjection) -> bool:
    return all(tau(f(j)) < tau(f(j + 1)) for j in range(1, f.s))


def factorize(f: MonotoneInjection, sigma: Permutation) -> tuple[Permutation, Permutation]:
    """The unique ``sigma = tau * iota_f(rho)`` with ``tau o f`` monotone."""
    rho = rho_f(f, sigma)
    tau = sigma * iota_f(f, rho).inverse()
    return tau, rho


def coset_representatives(f: MonotoneInjection) -> list[Permutation]:
    """T_f: permutations whose composite with f is monotone."""
    return [tau for tau in Permutation.all_permutations(f.n) if is_monotone_after(tau, f)]


@dataclass(frozen=True)
class GroupAlgebraElement:
    """Element of k S_n."""

    n: int
    terms: Mapping[Permutation, Scalar]

    @classmethod
    def of(cls, field: Field, sigma: Permutation, c: Any = 1) -> GroupAlgebraElement:
        return cls(sigma.n, {sigma: field(c)})

    def __add__(self, other: GroupAlgebraElement) -> GroupAlgebraElement:
        out = dict(self.terms)
        axpy(out, 1, other.terms)
        return GroupAlgebraElement(self.n, out)

    def __mul__(self, other: GroupAlgebraElement) -> GroupAlgebraElement:
        out: dict[Permutation, Scalar] = {}
        for s, a in self.terms.items():
            for t, b in other.terms.items():
                accumulate(out, s * t, a * b)
        return GroupAlgebraElement(self.n, out)

    def scale(self, c: Scalar) -> GroupAlgebraElement:
        return GroupAlgebraElement(self.n, {s: c * a for s, a in self.terms.items() if c * a})

    def by_rank(self) -> dict[int, Scalar]:
        return {s.rank: c for s, c in self.terms.items()}


class RightAction:
    """
    Right S_n action on a finite-dimensional space given by generator matrices.

    ``generators[i-1]`` is the matrix of ``s_i`` acting on column vectors. Matrices of
    other permutations are composed along reduced words and memoized under a lock.
    """

    def __init__(self, field: Field, n: int, dim: int, generators: Sequence[Matrix]):
        if len(generators) != max(n - 1, 0):
            raise DimensionMismatchError(f"S{n} needs {max(n - 1, 0)} generator matrices")
        for g in generators:
            if (g.rows, g.cols) != (dim, dim):
                raise DimensionMismatchError(f"Generator of shape {g.rows}x{g.cols}, expected {dim}")
        self.field = field
        self.n = n
        self.dim = dim
        self.generators = tuple(generators)
        self._matrices: dict[Permutation, Matrix] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_images(cls, field: Field, n: int, dim: int, image) -> RightAction:
        """Build from ``image(basis_index, s_i) -> vector``."""
        gens = []
        for i in range(1, n):
            s = Permutation.adjacent(n, i)
            gens.append(Matrix.from_columns(field, dim, [image(k, s) for k in range(dim)]))
        return cls(field, n, dim, gens)

    @classmethod
    def trivial(cls, field: Field, n: int, dim: int) -> RightAction:
        return cls(field, n, dim, [Matrix.identity(field, dim)] * max(n - 1, 0))

    @classmethod
    def sign(cls, field: Field, n: int, dim: int) -> RightAction:
        return cls(field, n, dim, [Matrix.identity(field, dim).scale(-1)] * max(n - 1, 0))

    @classmethod
    def regular(cls, field: Field, n: int, base_dim: int) -> RightAction:
        """Free action on ``base (x) k S_n``: index ``i * n! + rank(sigma)``, ``(m, s) t = (m, s t)``."""
        size = math.factorial(n)
        perms = Permutation.all_permutations(n)

        def image(k: int, s: Permutation):
            i, r = divmod(k, size)
            return {i * size + (perms[r] * s).rank: field.one}

        return cls.from_images(field, n, base_dim * size, image)

    def matrix(self, sigma: Permutation) -> Matrix:
        with self._lock:
            cached = self._matrices.get(sigma)
        if cached is not None:
            return cached
        m = Matrix.identity(self.field, self.dim)
        for i in sigma.reduced_word():
            m = self.generators[i - 1] @ m
        with self._lock:
            self._matrices.setdefault(sigma, m)
        return m

    def act(self, vec: Mapping[int, Scalar], sigma: Permutation) -> dict[int, Scalar]:
        if sigma.n != self.n:
            raise DimensionMismatchError(f"Acting by S{sigma.n} on an S{self.n} module")
        out = dict(vec)
        for i in sigma.reduced_word():
            out = self.generators[i - 1].apply(out)
        return out

    def check_relations(self) -> None:
        """Involution, braid and commutation relations of the generators."""
        ident = Matrix.identity(self.field, self.dim)
        g = self.generators
        for i, a in enumerate(g, start=1):
            if a @ a != ident:
                raise VerificationError(f"s_{i}^2 acts nontrivially", identity="action")
            if i < len(g):
                b = g[i]
                if a @ b @ a != b @ a @ b:
                    raise VerificationError(f"Braid relation fails for s_{i}, s_{i + 1}", identity="action")
            for j in range(i + 2, len(g) + 1):
                if a @ g[j - 1] != g[j - 1] @ a:
                    raise VerificationError(f"s_{i} and s_{j} do not commute", identity="action")


def group_tensor(carrier: Complex, n: int) -> Complex:
    """``carrier (x) k S_n`` with basis index ``i * n! + rank(sigma)`` per degree."""
    size = math.factorial(n)
    mats, labels = {}, {}
    for d in carrier.support:
        cols = []
        for i in range(carrier.dim(d)):
            col = carrier.d(d).column(i)
            for r in range(size):
                cols.append({row * size + r: c for row, c in col.items()})
        mats[d] = Matrix(carrier.field, carrier.dim(d + 1) * size, carrier.dim(d) * size, tuple(cols))
        labels[d] = [(lab, r) for lab in carrier.basis_labels(d) for r in range(size)]
    dims = {d: carrier.dim(d) * size for d in carrier.support}
    return Complex(carrier.field, dims, mats, labels)


def rho_f_module(
    f: MonotoneInjection, carrier: Complex, actions: Mapping[int, RightAction]
) -> ChainMap:
    """
    ``m (x) sigma -> m tau (x) rho_f(sigma)`` where ``sigma = tau iota_f(rho_f(sigma))``.

    ``actions`` maps each degree of ``carrier`` to the right S_n action on it.
    """
    n, s = f.n, f.s
    source, target = group_tensor(carrier, n), group_tensor(carrier, s)
    perms = Permutation.all_permutations(n)
    big, small = math.factorial(n), math.factorial(s)
    field = carrier.field
    for d in carrier.support:
        act = actions[d]
        if act.n != n or act.dim != carrier.dim(d):
            raise DimensionMismatchError(f"Action in degree {d} does not match the carrier")
        act.check_relations()
    images = {}
    for d in carrier.support:
        cols = []
        for i in range(carrier.dim(d)):
            for r in range(big):
                tau, rho = factorize(f, perms[r])
                m_tau = actions[d].act({i: field.one}, tau)
                cols.append({j * small + rho.rank: c for j, c in m_tau.items()})
        images[d] = cols
    phi = ChainMap.from_columns(source, target, images)
    phi.check()
    _check_rho_f_equivariance(f, phi, carrier)
    return phi


def _check_rho_f_equivariance(f: MonotoneInjection, phi: ChainMap, carrier: Complex) -> None:
    n, s = f.n, f.s
    perms_n, perms_s = Permutation.all_permutations(n), Permutation.all_permutations(s)
    big, small = math.factorial(n), math.factorial(s)
    for k in range(1, s):
        g = Permutation.adjacent(s, k)
        lifted = iota_f(f, g)
        for d in carrier.support:
            for i in range(carrier.dim(d)):
                for r in range(big):
                    moved = i * big + (perms_n[r] * lifted).rank
                    lhs = phi.apply(d, {moved: carrier.field.one})
                    rhs: dict[int, Scalar] = {}
                    for key, c in phi.apply(d, {i * big + r: carrier.field.one}).items():
                        j, rr = divmod(key, small)
                        accumulate(rhs, j * small + (perms_s[rr] * g).rank, c)
                    if lhs != rhs:
                        raise VerificationError(
                            f"rho_f map is not equivariant for s_{k} in degree {d}",
                            identity="rho_f-equivariance",
                        )
