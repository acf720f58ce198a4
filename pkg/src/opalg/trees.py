"""
Rooted trees and n-trees in canonical form.

An n-tree is stored as a nested code: a numbered leaf is its number (an ``int``), an
internal vertex is the tuple of its children's codes, and an unnumbered terminal vertex is
``()``. Children are sorted by their least numbered leaf; subtrees without numbered leaves
come last, ordered structurally. The trivial tree is the code ``1``.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cache
from typing import Any

from .exceptions import ValidationError
from .symmetry import Permutation

Code = Any  # int | tuple[Code, ...]


def _child_key(code: Code) -> tuple:
    low = min_leaf(code)
    return (0, low, ()) if low is not None else (1, 0, code)


def min_leaf(code: Code) -> int | None:
    if isinstance(code, int):
        return code
    lows = [m for m in (min_leaf(c) for c in code) if m is not None]
    return min(lows) if lows else None


def sort_children(children: Iterable[Code]) -> tuple:
    return tuple(sorted(children, key=_child_key))


def canonical_code(code: Code) -> Code:
    if isinstance(code, int):
        return code
    return sort_children(canonical_code(c) for c in code)


def leaves_of(code: Code) -> list[int]:
    """Numbered leaves in preorder."""
    if isinstance(code, int):
        return [code]
    return [leaf for c in code for leaf in leaves_of(c)]


def internal_count(code: Code) -> int:
    if isinstance(code, int):
        return 0
    return 1 + sum(internal_count(c) for c in code)


def relabel(code: Code, mapping) -> Code:
    if isinstance(code, int):
        return mapping(code)
    return tuple(relabel(c, mapping) for c in code)


# -- unlabeled trees -----------------------------------------------------------------------


@dataclass(frozen=True)
class Tree:
    """
    Finite rooted tree as a parent map on vertices ``0..V-1``.

    Vertex 0 is the root after canonicalization and vertices are numbered in preorder.
    """

    parent: tuple[int | None, ...]

    @classmethod
    def from_edges(cls, vertices: Iterable[Any], edges: Mapping[Any, Any]) -> Tree:
        """Build from arbitrary hashable vertices and a child -> parent map."""
        verts = list(vertices)
        index = {v: i for i, v in enumerate(verts)}
        if len(index) != len(verts):
            raise ValidationError("Duplicate vertices", field="tree")
        for child, par in edges.items():
            if child not in index or par not in index:
                raise ValidationError(f"Edge {child}->{par} uses an unknown vertex", field="tree")
        roots = [v for v in verts if v not in edges]
        if len(roots) != 1:
            raise ValidationError(
                f"A tree needs exactly one initial vertex, found {len(roots)}", field="tree"
            )
        parent = tuple(index[edges[v]] if v in edges else None for v in verts)
        tree = cls(parent)
        tree._check_acyclic()
        return tree

    def _check_acyclic(self) -> None:
        for v in range(len(self.parent)):
            seen = set()
            while v is not None:
                if v in seen:
                    raise ValidationError("Parent map contains a cycle", field="tree")
                seen.add(v)
                v = self.parent[v]

    @property
    def root(self) -> int:
        return self.parent.index(None)

    @property
    def size(self) -> int:
        return len(self.parent)

    def children(self, v: int) -> list[int]:
        return [c for c, p in enumerate(self.parent) if p == v]

    def terminal_vertices(self) -> list[int]:
        return [v for v in range(self.size) if not self.children(v)]

    def shape(self, v: int | None = None) -> tuple:
        """Isomorphism-invariant nested code with sorted children."""
        v = self.root if v is None else v
        return tuple(sorted(self.shape(c) for c in self.children(v)))

    @classmethod
    def from_shape(cls, shape: tuple) -> Tree:
        parent: list[int | None] = []

        def build(node: tuple, par: int | None) -> None:
            me = len(parent)
            parent.append(par)
            for child in node:
                build(child, me)

        build(shape, None)
        return cls(tuple(parent))


def canonicalize(t: Tree) -> Tree:
    """Canonical representative of the isomorphism class of ``t``."""
    t._check_acyclic()
    return Tree.from_shape(t.shape())


# -- n-trees --------------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeShape:
    out_degrees: tuple[int, ...]
    terminal_count: int
    internal_count: int


@dataclass(frozen=True)
class NTree:
    """Tree with terminal vertices numbered ``1..n`` and possibly some unnumbered ones."""

    code: Code

    def __post_init__(self):
        leaves = leaves_of(self.code)
        if sorted(leaves) != list(range(1, len(leaves) + 1)):
            raise ValidationError(
                f"Leaves {leaves} are not numbered 1..n", field="tree", value=str(self.code)
            )
        if canonical_code(self.code) != self.code:
            object.__setattr__(self, "code", canonical_code(self.code))

    @property
    def n(self) -> int:
        return len(leaves_of(self.code))

    @classmethod
    def trivial(cls) -> NTree:
        return cls(1)

    @classmethod
    def corolla(cls, n: int) -> NTree:
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_parent_map(
        cls, vertices: Iterable[Any], edges: Mapping[Any, Any], numbering: Mapping[Any, int]
    ) -> NTree:
        """Canonical n-tree from a raw graph and a numbering of some terminal vertices."""
        verts = list(vertices)
        tree = Tree.from_edges(verts, edges)
        index = {v: i for i, v in enumerate(verts)}
        terminals = set(tree.terminal_vertices())
        for v in numbering:
            if index.get(v) not in terminals:
                raise ValidationError(f"Numbered vertex {v} is not terminal", field="tree")
        if len(set(numbering.values())) != len(numbering):
            raise ValidationError("Numbering is not injective", field="tree")
        by_index = {index[v]: k for v, k in numbering.items()}

        def build(v: int) -> Code:
            kids = tree.children(v)
            if not kids:
                return by_index.get(v, ())
            return tuple(build(c) for c in kids)

        return cls(build(tree.root))

    def tree(self) -> Tree:
        return Tree.from_shape(_strip(self.code))

    def summary(self) -> TreeShape:
        degrees: list[int] = []
        terminals = 0

        def walk(code: Code) -> None:
            nonlocal terminals
            if isinstance(code, int) or code == ():
                terminals += 1
                if code == ():
                    degrees.append(0)
                return
            degrees.append(len(code))
            for c in code:
                walk(c)

        walk(self.code)
        return TreeShape(tuple(degrees), terminals, internal_count(self.code))

    @property
    def irr_count(self) -> int:
        return self.summary().out_degrees.count(0)

    def sigma_act(self, sigma: Permutation) -> NTree:
        """Right action: the leaf numbered l becomes ``sigma^-1(l)``."""
        if sigma.n != self.n:
            raise ValidationError(f"Cannot act by S{sigma.n} on a {self.n}-tree", field="permutation")
        inv = sigma.inverse()
        return NTree(relabel(self.code, inv))

    def __mul__(self, sigma: Permutation) -> NTree:
        return self.sigma_act(sigma)


def _strip(code: Code) -> tuple:
    if isinstance(code, int):
        return ()
    return tuple(sorted(_strip(c) for c in code))


def graft(base: NTree, subs: Sequence[NTree]) -> NTree:
    """Plug ``subs[i-1]`` into leaf i, renumbering its leaves after those of earlier subs."""
    if len(subs) != base.n:
        raise ValidationError(
            f"Grafting {len(subs)} trees into a {base.n}-tree", field="tree", value=str(base.code)
        )
    offsets = list(itertools.accumulate((s.n for s in subs), initial=0))

    def substitute(code: Code) -> Code:
        if isinstance(code, int):
            off = offsets[code - 1]
            return relabel(subs[code - 1].code, lambda l: l + off)
        return tuple(substitute(c) for c in code)

    return NTree(substitute(base.code))


def graft_at(a: NTree, i: int, b: NTree) -> NTree:
    """``a o_i b``."""
    if not 1 <= i <= a.n:
        raise ValidationError(f"No leaf {i} in a {a.n}-tree", field="tree")
    subs = [NTree.trivial()] * a.n
    subs[i - 1] = b
    return graft(a, subs)


# -- enumeration ----------------------------------------------------------------------------


def set_partitions(items: Sequence[int], blocks: int) -> list[list[tuple[int, ...]]]:
    """Unordered partitions into nonempty blocks, blocks ordered by least element."""
    if blocks == 0:
        return [[]] if not items else []
    if len(items) < blocks:
        return []
    first, rest = items[0], items[1:]
    out = []
    for size in range(len(rest) + 1):
        for companions in itertools.combinations(rest, size):
            remaining = [x for x in rest if x not in companions]
            for tail in set_partitions(remaining, blocks - 1):
                out.append([(first, *companions), *tail])
    return out


@cache
def _trees_on(n: int, budget: int, degrees: frozenset[int]) -> tuple[tuple[Code, int], ...]:
    """Canonical codes with leaves 1..n (n may be 0) and at most ``budget`` internal vertices."""
    found: list[tuple[Code, int]] = []
    if n == 1:
        found.append((1, 0))
    if budget >= 1:
        for k in sorted(degrees):
            if k == 0:
                if n == 0:
                    found.append(((), 1))
                continue
            for labeled in range(min(k, n) + 1):
                irr = k - labeled
                if irr and 0 not in degrees:
                    continue
                if labeled == 0 and n > 0:
                    continue
                found.extend(_corollas_with(n, budget - 1, degrees, labeled, irr))
    return tuple(dict.fromkeys(found))


def _corollas_with(n, budget, degrees, labeled, irr):
    irr_trees = [t for t in _trees_on(0, budget, degrees)]
    for blocks in set_partitions(list(range(1, n + 1)), labeled):
        options = []
        for block in blocks:
            mapping = dict(enumerate(block, start=1))
            options.append(
                [(relabel(code, mapping.__getitem__), cnt) for code, cnt in _trees_on(len(block), budget, degrees)]
            )
        for choice in itertools.product(*options):
            used = sum(cnt for _, cnt in choice)
            if used > budget:
                continue
            for extra in itertools.combinations_with_replacement(irr_trees, irr):
                total = used + sum(cnt for _, cnt in extra)
                if total > budget:
                    continue
                children = [code for code, _ in choice] + [code for code, _ in extra]
                yield sort_children(children), total + 1


def enumerate_ntrees(
    n: int, max_internal: int, out_degrees: Iterable[int] = (2,)
) -> list[NTree]:
    """All canonical n-trees with at most ``max_internal`` internal vertices."""
    degrees = frozenset(out_degrees)
    return [NTree(code) for code, _ in _trees_on(n, max_internal, degrees)]


def enumerate_shapes(n: int, max_internal: int, out_degrees: Iterable[int] = (2,)) -> list[tuple]:
    """Distinct underlying trees (numbering forgotten) among the n-trees."""
    return sorted({_strip(t.code) for t in enumerate_ntrees(n, max_internal, out_degrees)})
