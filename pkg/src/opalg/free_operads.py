"""
Free operads, free products with cells, and their homotopy extensions.

Elements of ``O v F(V)`` are combinations of normal-form trees. A tree is either a leaf
(its variable number) or ``(label, children)`` with label ``("g", n, i)`` for the i-th basis
element of ``V(n)`` or ``("o", n, i)`` for a basis element of ``O(n)`` other than the unit.
In normal form no ``o``-vertex has an ``o``-child and children are sorted by least leaf.
A tree denotes the composite of its labels written in preorder; all signs follow the
Koszul rule for that written order.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from typing import Any

from .complexes import ChainMap, Complex
from .exactla import Field, Matrix, Scalar, accumulate, axpy, scaled
from .exceptions import ChainMapError, FieldArithmeticError, ValidationError, VerificationError
from .logging_config import get_logger, log_performance
from .models import Certificate
from .operads import Collection, Ideal, Operad, OperadMorphism, quotient
from .symmetry import Permutation, RightAction
from .trees import set_partitions

logger = get_logger(__name__)

Label = tuple[str, int, int]
Node = Any  # int | tuple[Label, tuple[Node, ...]]


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def min_leaf(node: Node) -> int:
    if isinstance(node, int):
        return node
    return min(min_leaf(k) for k in node[1])


def leaves(node: Node) -> list[int]:
    if isinstance(node, int):
        return [node]
    return [leaf for k in node[1] for leaf in leaves(k)]


def preorder_labels(node: Node) -> list[Label]:
    if isinstance(node, int):
        return []
    return [node[0]] + [lab for k in node[1] for lab in preorder_labels(k)]


def relabel_leaves(node: Node, mapping) -> Node:
    if isinstance(node, int):
        return mapping(node)
    return (node[0], tuple(relabel_leaves(k, mapping) for k in node[1]))


def initial_operad(field: Field) -> Operad:
    """The operad with only the unit."""
    return Operad(
        Collection(field, {1: [0]}, None, {1: RightAction.trivial(field, 1, 1)}, {1: ["1"]}),
        {0: field.one},
        lambda n, k, m, i, j: {0: 1},
        1,
        name="I",
    )


class TreeCalculus:
    """
    Normal forms, grafting, differential and symmetric action on trees of ``O v F(V)``.

    Args:
        base: the operad ``O`` (its unit must be a basis vector)
        generators: the collection ``V``
        alpha: ``(n, i) -> vector in O(n)``, the part of ``d(e_i)`` landing in ``O``
        cap: maximal number of generator vertices; larger trees are zero
        max_arity: largest arity represented
    """

    def __init__(
        self,
        base: Operad,
        generators: Collection,
        alpha: Mapping[tuple[int, int], Mapping[int, Scalar]] | None,
        cap: int,
        max_arity: int,
    ):
        self.base = base
        self.generators = generators
        self.field = base.field
        self.alpha = {k: dict(v) for k, v in (alpha or {}).items() if v}
        self.cap = cap
        self.max_arity = max_arity
        unit = base.unit
        if len(unit) != 1 or next(iter(unit.values())) != base.field.one:
            raise ValidationError(
                f"The unit of {base.name} must be a basis vector", field="operad", value=str(unit)
            )
        self.unit_index = next(iter(unit))
        self._shapes: dict[tuple[int, int, bool], list[tuple[Node, int]]] = {}

    # -- bookkeeping ------------------------------------------------------------------------

    def label_degree(self, label: Label) -> int:
        kind, n, i = label
        return self.generators.degree(n, i) if kind == "g" else self.base.degree(n, i)

    def degree(self, node: Node) -> int:
        return sum(self.label_degree(lab) for lab in preorder_labels(node))

    def g_count(self, node: Node) -> int:
        return sum(1 for lab in preorder_labels(node) if lab[0] == "g")

    def render(self, node: Node) -> str:
        if isinstance(node, int):
            return str(node)
        kind, n, i = node[0]
        names = self.generators.labels(n) if kind == "g" else self.base.labels(n)
        return f"{names[i]}({','.join(self.render(k) for k in node[1])})"

    # -- normal forms -----------------------------------------------------------------------

    def normalize(self, node: Node) -> dict[Node, Scalar]:
        if isinstance(node, int):
            return {node: self.field.one}
        label, kids = node
        forms = [list(self.normalize(k).items()) for k in kids]
        out: dict[Node, Scalar] = {}
        for choice in itertools.product(*forms):
            coeff = self.field.one
            for _, c in choice:
                coeff = coeff * c
            for tree, c in self._settle(label, [t for t, _ in choice]).items():
                accumulate(out, tree, coeff * c)
        return out

    def _settle(self, label: Label, kids: list[Node]) -> dict[Node, Scalar]:
        kind, n, idx = label
        if kind == "g":
            return self._sort("g", n, {idx: self.field.one}, kids)
        vec: dict[int, Scalar] = {idx: self.field.one}
        arity = n
        for j in reversed(range(len(kids))):
            kid = kids[j]
            if isinstance(kid, int) or kid[0][0] != "o":
                continue
            (_, m, y), grand = kid
            before = sum(self.degree(k) for k in kids[:j])
            vec = scaled(
                self.base.compose(arity, j + 1, vec, m, {y: self.field.one}),
                _sign(self.base.degree(m, y) * before),
            )
            kids = kids[:j] + list(grand) + kids[j + 1 :]
            arity += m - 1
        if arity == 1 and self.unit_index in vec:
            c = vec.pop(self.unit_index)
            out = {kids[0]: c}
            for tree, a in self._sort("o", 1, vec, kids).items():
                accumulate(out, tree, a)
            return out
        return self._sort("o", arity, vec, kids)

    def _sort(self, kind: str, n: int, vec: Mapping[int, Scalar], kids: list[Node]) -> dict[Node, Scalar]:
        if not vec:
            return {}
        order = sorted(range(len(kids)), key=lambda p: min_leaf(kids[p]))
        sorted_kids = tuple(kids[p] for p in order)
        if order == list(range(len(kids))):
            return {((kind, n, i), sorted_kids): c for i, c in vec.items()}
        degrees = [self.degree(k) for k in kids]
        exponent = sum(
            degrees[order[p]] * degrees[order[q]]
            for p in range(len(order))
            for q in range(p + 1, len(order))
            if order[p] > order[q]
        )
        sigma = Permutation(tuple(p + 1 for p in order))
        acting = self.generators if kind == "g" else self.base
        moved: dict[int, Scalar] = {}
        for i, c in vec.items():
            axpy(moved, c, acting.act(n, {i: self.field.one}, sigma))
        sign = _sign(exponent)
        return {((kind, n, i), sorted_kids): sign * c for i, c in moved.items()}

    # -- operations -------------------------------------------------------------------------

    def graft(self, a: Node, i: int, b: Node) -> dict[Node, Scalar]:
        """``a o_i b`` in normal form; zero past the generator cap."""
        if self.g_count(a) + self.g_count(b) > self.cap:
            return {}
        m = len(leaves(b))
        shifted = relabel_leaves(b, lambda l: l + i - 1)
        after = 0
        seen_leaf = False

        def walk(node: Node) -> Node:
            nonlocal after, seen_leaf
            if isinstance(node, int):
                if node == i:
                    seen_leaf = True
                    return shifted
                return node if node < i else node + m - 1
            if seen_leaf:
                after += self.label_degree(node[0])
            return (node[0], tuple(walk(k) for k in node[1]))

        raw = walk(a)
        sign = _sign(self.degree(b) * after)
        return {t: sign * c for t, c in self.normalize(raw).items()}

    def replace_labels(self, node: Node, images: Sequence[Mapping[Label, Scalar]]) -> dict[Node, Scalar]:
        """Substitute, in preorder, each label by a combination of labels, then normalize."""
        position = 0

        def expand(n: Node) -> list[tuple[Node, Scalar]]:
            nonlocal position
            if isinstance(n, int):
                return [(n, self.field.one)]
            here = images[position]
            position += 1
            kid_forms = [expand(k) for k in n[1]]
            out = []
            for lab, c in here.items():
                for choice in itertools.product(*kid_forms):
                    coeff = c
                    for _, a in choice:
                        coeff = coeff * a
                    out.append(((lab, tuple(t for t, _ in choice)), coeff))
            return out

        result: dict[Node, Scalar] = {}
        for raw, c in expand(node):
            for t, a in self.normalize(raw).items():
                accumulate(result, t, c * a)
        return result

    def label_differential(self, label: Label) -> dict[Label, Scalar]:
        kind, n, i = label
        out: dict[Label, Scalar] = {}
        if kind == "g":
            for r, c in self.generators.d(n, {i: self.field.one}).items():
                out[("g", n, r)] = c
            for r, c in self.alpha.get((n, i), {}).items():
                accumulate(out, ("o", n, r), c)
        else:
            for r, c in self.base.d(n, {i: self.field.one}).items():
                out[("o", n, r)] = c
        return out

    def d(self, node: Node) -> dict[Node, Scalar]:
        labels = preorder_labels(node)
        out: dict[Node, Scalar] = {}
        before = 0
        for pos, lab in enumerate(labels):
            dl = self.label_differential(lab)
            if dl:
                images = [{x: self.field.one} for x in labels]
                images[pos] = dl
                axpy(out, _sign(before), self.replace_labels(node, images))
            before += self.label_degree(lab)
        return out

    def act(self, node: Node, sigma: Permutation) -> dict[Node, Scalar]:
        inv = sigma.inverse()
        return self.normalize(relabel_leaves(node, inv))

    # -- bases ------------------------------------------------------------------------------

    def _shapes_on(self, k: int, budget: int, allow_o: bool) -> list[tuple[Node, int]]:
        key = (k, budget, allow_o)
        if key in self._shapes:
            return self._shapes[key]
        out: list[tuple[Node, int]] = []
        if k == 1:
            out.append((1, 0))
        if budget >= 1:
            for r in self.generators.arities:
                if r > k:
                    continue
                for kids, used in self._kid_choices(k, r, budget - 1, True):
                    for idx in range(self.generators.dim(r)):
                        out.append(((("g", r, idx), kids), used + 1))
        if allow_o:
            for r in range(1, k + 1):
                labels = [u for u in range(self.base.dim(r)) if not (r == 1 and u == self.unit_index)]
                if not labels:
                    continue
                for kids, used in self._kid_choices(k, r, budget, False):
                    for idx in labels:
                        out.append(((("o", r, idx), kids), used))
        self._shapes[key] = out
        return out

    def _kid_choices(self, k: int, r: int, budget: int, allow_o: bool):
        for blocks in set_partitions(list(range(1, k + 1)), r):
            options = []
            for block in blocks:
                mapping = dict(enumerate(block, start=1))
                options.append(
                    [
                        (relabel_leaves(t, mapping.__getitem__), used)
                        for t, used in self._shapes_on(len(block), budget, allow_o)
                    ]
                )
            for choice in itertools.product(*options):
                used = sum(u for _, u in choice)
                if used <= budget:
                    yield tuple(t for t, _ in choice), used

    def basis(self, n: int) -> list[Node]:
        return [t for t, _ in self._shapes_on(n, self.cap, True)]

    # -- assembly ---------------------------------------------------------------------------

    def embed_base(self, n: int, vec: Mapping[int, Scalar]) -> dict[Node, Scalar]:
        out: dict[Node, Scalar] = {}
        for u, c in vec.items():
            tree = 1 if (n == 1 and u == self.unit_index) else (("o", n, u), tuple(range(1, n + 1)))
            accumulate(out, tree, c)
        return out

    def build(self, name: str, symbols: Mapping[str, tuple[int, Label]] | None = None) -> Operad:
        f = self.field
        trees = {n: self.basis(n) for n in range(1, self.max_arity + 1)}
        index = {n: {t: i for i, t in enumerate(ts)} for n, ts in trees.items()}

        def to_vec(n: int, combo: Mapping[Node, Scalar]) -> dict[int, Scalar]:
            out = {}
            for t, c in combo.items():
                if t not in index[n]:
                    raise VerificationError(
                        f"Tree {self.render(t)} is outside the basis of arity {n}", identity="normal-form"
                    )
                out[index[n][t]] = c
            return out

        degrees, diffs, actions, labels, filtration = {}, {}, {}, {}, {}
        for n, ts in trees.items():
            degrees[n] = [self.degree(t) for t in ts]
            labels[n] = [self.render(t) for t in ts]
            filtration[n] = [self.g_count(t) for t in ts]
            diffs[n] = Matrix.from_columns(f, len(ts), [to_vec(n, self.d(t)) for t in ts])
            actions[n] = RightAction.from_images(
                f, n, len(ts), lambda q, s, n=n: to_vec(n, self.act(trees[n][q], s))
            )

        def composer(n: int, k: int, m: int, i: int, j: int) -> dict[int, Scalar]:
            return to_vec(n + m - 1, self.graft(trees[n][i], k, trees[m][j]))

        named = {}
        for sym, (n, vec) in self.base.symbols.items():
            if n <= self.max_arity:
                named[sym] = (n, to_vec(n, self.embed_base(n, vec)))
        for sym, (n, label) in (symbols or {}).items():
            named[sym] = (n, to_vec(n, {(label, tuple(range(1, n + 1))): f.one}))
        if 1 not in index or 1 not in index[1]:
            raise ValidationError("Arity 1 must contain the unit", field="operad")
        o = Operad(
            Collection(f, degrees, diffs, actions, labels),
            {index[1][1]: f.one},
            composer,
            self.max_arity,
            name=name,
            symbols=named,
            filtration=filtration,
            filtration_cap=self.cap,
            notices=[f"compositions with more than {self.cap} generator vertices are set to zero"],
        )
        o.calculus = self
        o.trees = trees
        o.tree_index = index
        logger.debug(f"{name}: dims {o.dims()} at generator cap {self.cap}")
        return o


def _default_cap(generators: Collection, max_arity: int) -> int:
    if 1 in generators.arities:
        return max_arity
    return max_arity - 1


def free_operad(
    v: Collection, max_arity: int, max_internal: int | None = None, name: str = "F(V)"
) -> Operad:
    """
    Free operad on a collection, truncated to ``max_arity`` and ``max_internal`` vertices.

    Generator basis elements become symbols under their collection labels.
    """
    cap = _default_cap(v, max_arity) if max_internal is None else max_internal
    calc = TreeCalculus(initial_operad(v.field), v, None, cap, max_arity)
    symbols = {}
    for n in v.arities:
        for i, lab in enumerate(v.labels(n)):
            if isinstance(lab, str):
                symbols[lab] = (n, ("g", n, i))
    return calc.build(name, symbols)


def lie(field: Field, max_arity: int = 5) -> Operad:
    """Free operad on an antisymmetric bracket ``b`` modulo the Jacobi identity."""
    v = Collection.single(field, 2, [0], None, "sign", ["b"])
    free = free_operad(v, max_arity, max_arity - 1, name="F(b)")
    if max_arity < 3:
        free.name = "Lie"
        return free
    _, jacobi = free.evaluate(("b", (("b", (1, 2)), 3)))
    for term in (("b", (("b", (2, 3)), 1)), ("b", (("b", (3, 1)), 2))):
        axpy(jacobi, 1, free.evaluate(term)[1])
    return quotient(free, [(3, jacobi)], name="Lie")


def lie_to_ass(lie_operad: Operad, ass: Operad) -> OperadMorphism:
    """``b -> mu (x) e - mu (x) s``."""
    f = ass.field
    image = {0: f.one, 1: -f.one}
    return morphism_from_generators(lie_operad, ass, {("g", 2, 0): image}, name="Lie->Ass")


def _tree_value(calc: TreeCalculus, target: Operad, node: Node, images, base_map) -> tuple[dict, tuple]:
    if isinstance(node, int):
        return dict(target.unit), (node,)
    (kind, n, i), kids = node
    head = images[(kind, n, i)] if kind == "g" else base_map(n, {i: calc.field.one})
    parts, variables = [], ()
    for kid in kids:
        vec, vars_ = _tree_value(calc, target, kid, images, base_map)
        parts.append((len(vars_), vec))
        variables += vars_
    _, value = target.gamma(n, head, parts)
    return value, variables


def morphism_from_generators(
    source: Operad,
    target: Operad,
    images: Mapping[Label, Mapping[int, Any]],
    base_map: OperadMorphism | None = None,
    name: str = "",
) -> OperadMorphism:
    """
    Extend generator images to an operad morphism out of a tree-built operad or its quotient.

    On a quotient every ideal element must map to zero; the result is checked.
    """
    ambient = getattr(source, "ambient", None)
    free = ambient if ambient is not None else source
    calc: TreeCalculus = free.calculus
    f = target.field
    images = {lab: {r: f(c) for r, c in v.items() if c} for lab, v in images.items()}
    if base_map is None:
        if calc.base.max_arity > 1 or calc.base.dim(1) > 1:
            raise ValidationError("A morphism on the base operad is required", field="morphism")
        base_map_fn = lambda n, vec: {}  # noqa: E731
    else:
        base_map_fn = base_map.apply

    def tree_image(n: int, t: Node) -> dict[int, Scalar]:
        value, variables = _tree_value(calc, target, t, images, base_map_fn)
        sigma = Permutation(tuple(variables)).inverse()
        return target.act(n, value, sigma) if target.symmetric else value

    def ambient_image(n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        out: dict[int, Scalar] = {}
        for i, c in vec.items():
            axpy(out, c, tree_image(n, free.trees[n][i]))
        return out

    if ambient is not None:
        for n, space in source.ideal.spaces.items():
            for row in space.basis():
                if ambient_image(n, row):
                    raise VerificationError(
                        f"A relation in arity {n} does not map to zero", identity="relations"
                    )
    maps = {}
    for n in range(1, min(source.max_arity, target.max_arity) + 1):
        cols = []
        for i in range(source.dim(n)):
            vec = source.lift(n, {i: f.one}) if ambient is not None else {i: f.one}
            cols.append(ambient_image(n, vec))
        maps[n] = Matrix.from_columns(f, target.dim(n), cols)
    phi = OperadMorphism(source, target, maps, name=name)
    phi.check()
    return phi


# -- cells ----------------------------------------------------------------------------------


def _flat_alpha(o: Operad, n: int, alpha: ChainMap) -> dict[int, dict[int, Scalar]]:
    """Images of the basis of ``alpha.source`` as flat vectors of ``O(n)``, keyed by flat index."""
    to_flat = o.collection.to_flat(n)
    out = {}
    src = alpha.source
    flat = 0
    for deg in src.support:
        for i in range(src.dim(deg)):
            image = alpha.apply(deg, {i: o.field.one})
            out[flat] = {to_flat[(deg, r)]: c for r, c in image.items()}
            flat += 1
    return out


@log_performance("cell attachment")
def attach_cell_operad(
    o: Operad,
    m: Complex,
    n: int,
    alpha: ChainMap,
    names: Sequence[str] = (),
    cap: int | None = None,
    name: str | None = None,
) -> Operad:
    """
    ``O<M, n, alpha>``: adjoin ``T_m`` of degree ``|m| - 1`` in arity n with free S_n action and
    ``d T_m = alpha(m) - T_{dm}``.

    ``names`` become symbols for ``T_m`` (identity permutation) in the order of the basis of M.
    """
    if m.total_dim == 0:
        return o
    if alpha.source is not m and alpha.source.support != m.support:
        raise ValidationError("alpha must be defined on M", field="alpha")
    if alpha.degree_shift:
        raise ChainMapError("alpha must be a degree 0 map")
    alpha.check()
    size = math.factorial(n)
    shifted = Complex(
        m.field,
        {deg - 1: m.dim(deg) for deg in m.support},
        {deg - 1: m.d(deg).scale(-1) for deg in m.support},
    )
    v, _ = Collection.from_complex(shifted, n, "regular")
    perms = Permutation.all_permutations(n)
    cell_names = [names[k] if k < len(names) else f"T{k}" for k in range(m.total_dim)]
    v = Collection(
        v.field,
        v.degrees,
        v.differentials,
        v.actions,
        {n: [nm if p.is_identity() else f"{nm}{list(p.images)}" for nm in cell_names for p in perms]},
    )
    images = _flat_alpha(o, n, alpha)
    alpha_v = {}
    for base_flat, vec in images.items():
        for sigma in perms:
            if vec:
                alpha_v[(n, base_flat * size + sigma.rank)] = o.act(n, vec, sigma)
    cap = cap if cap is not None else (o.max_arity if n == 1 else max(o.max_arity - 1, 1))
    calc = TreeCalculus(o, v, alpha_v, cap, o.max_arity)
    symbols = {nm: (n, ("g", n, k * size)) for k, nm in enumerate(names)}
    result = calc.build(name or f"{o.name}<T>", symbols)
    result.cell_arity = n
    result.base_operad = o
    result.cells = m
    result.cell_images = images
    return result


def include_base(result: Operad) -> dict[int, ChainMap]:
    """Per-arity inclusion ``O(n) -> O<M>(n)`` as chain maps of components."""
    o: Operad = result.base_operad
    calc: TreeCalculus = result.calculus
    maps = {}
    for n in range(1, o.max_arity + 1):
        src, tgt = o.component(n), result.component(n)
        src_pos = o.collection.positions(n)
        tgt_pos = result.collection.positions(n)
        images: dict[int, list] = {deg: [None] * src.dim(deg) for deg in src.support}
        for u in range(o.dim(n)):
            deg, local = src_pos[u]
            vec = {}
            for t, c in calc.embed_base(n, {u: o.field.one}).items():
                vec[tgt_pos[result.tree_index[n][t]][1]] = c
            images[deg][local] = vec
        maps[n] = ChainMap.from_columns(src, tgt, images)
    return maps


def inclusion_morphism(result: Operad, name: str = "incl") -> OperadMorphism:
    """``O -> O<M>`` as an operad morphism on flat bases."""
    o: Operad = result.base_operad
    calc: TreeCalculus = result.calculus
    maps = {}
    for n in range(1, o.max_arity + 1):
        cols = []
        for u in range(o.dim(n)):
            cols.append({result.tree_index[n][t]: c for t, c in calc.embed_base(n, {u: o.field.one}).items()})
        maps[n] = Matrix.from_columns(o.field, result.dim(n), cols)
    return OperadMorphism(o, result, maps, name=name)


def cell_operation(result: Operad, k: int, sigma: Permutation | None = None) -> dict[int, Scalar]:
    """Flat vector of ``T_k sigma`` in ``O<M>(n)``, k the position of the cell in the basis of M."""
    n = result.cell_arity
    size = math.factorial(n)
    rank = sigma.rank if sigma is not None else 0
    tree = (("g", n, k * size + rank), tuple(range(1, n + 1)))
    return {result.tree_index[n][tree]: result.field.one}


@log_performance("equivariant cell")
def attach_equivariant(
    o: Operad,
    n: int,
    z: Mapping[int, Any],
    group: Sequence[Permutation],
    character: Mapping[Permutation, Any],
    name: str = "e",
    cap: int | None = None,
) -> Operad:
    """
    ``O<e; de = z> / (e g - chi(g) e)`` for a cycle ``z`` with ``z g = chi(g) z``.

    The retraction ``e -> (1/|G|) sum chi(g^-1) e g`` is built and checked to split the
    projection; it is stored as ``result.retraction``.
    """
    f = o.field
    z = {i: f(c) for i, c in z.items() if c}
    group = list(dict.fromkeys(group))
    chi = {g: f(c) for g, c in character.items()}
    if Permutation.identity(n) not in group:
        raise ValidationError("The subgroup must contain the identity", field="group")
    for g in group:
        if g.n != n or g not in chi:
            raise ValidationError(f"Character undefined on {g.images}", field="character")
        for h in group:
            if g * h not in group:
                raise ValidationError("The permutations do not form a subgroup", field="group")
            if chi[g * h] != chi[g] * chi[h]:
                raise ValidationError("The character is not multiplicative", field="character")
    if f.divides_group_order(len(group)):
        raise FieldArithmeticError(
            f"The characteristic divides |G| = {len(group)}", characteristic=f.characteristic
        )
    if o.d(n, z):
        raise VerificationError("z is not a cycle", identity="cycle")
    for g in group:
        if o.act(n, z, g) != scaled(z, chi[g]):
            raise VerificationError(
                f"z g != chi(g) z for g = {g.images}", identity="character",
                suggestion="Choose z in the chi-isotypic part of O(n)",
            )
    deg = o.collection.vector_degree(n, z)
    m = Complex.point(f, deg, name)
    target = o.component(n)
    pos = o.collection.positions(n)
    local = {pos[i][1]: c for i, c in z.items()}
    alpha = ChainMap.from_columns(m, target, {deg: [local]})
    attached = attach_cell_operad(o, m, n, alpha, [name], cap=cap, name=f"{o.name}<{name}>")
    e = attached.symbols[name][1]
    relations = []
    for g in group:
        rel = attached.act(n, e, g)
        axpy(rel, -chi[g], e)
        if rel:
            relations.append((n, rel))
    result = quotient(attached, relations, name=f"{o.name}<{name}>/G")
    average: dict[int, Scalar] = {}
    weight = f.inverse(f(len(group)))
    for g in group:
        axpy(average, weight * chi[g.inverse()], attached.act(n, e, g))
    if result.reduce(n, average) != result.reduce(n, e):
        raise VerificationError("The retraction does not split the projection", identity="retraction")
    result.retraction = {name: average}
    result.cell_arity = n
    result.base_operad = o
    logger.info(f"{result.name}: new part in arity {n} has dimension {result.dim(n) - o.dim(n)}")
    return result


# -- homotopy extension ---------------------------------------------------------------------


class HomotopyExtension:
    """
    Degree -1 map ``H`` on a free operad with ``dH + Hd = id - F(alpha)``.

    For a tree with labels ``x_1..x_k`` in preorder,
    ``H = sum_j (-1)^(|x_1|+..+|x_{j-1}|) alpha(x_1)..alpha(x_{j-1}) h(x_j) x_{j+1}..x_k``.
    """

    def __init__(self, free: Operad, alpha: Mapping[int, Matrix], h: Mapping[int, Matrix]):
        self.free = free
        self.calc: TreeCalculus = free.calculus
        self.alpha = dict(alpha)
        self.h = dict(h)
        self._check_generators()
        self.H: dict[int, Matrix] = {}
        self.F: dict[int, Matrix] = {}
        for n in range(1, free.max_arity + 1):
            self.H[n], self.F[n] = self._extend(n)

    def _label_image(self, maps: Mapping[int, Matrix], label: Label) -> dict[Label, Scalar]:
        _, n, i = label
        mat = maps.get(n)
        if mat is None:
            return {}
        return {("g", n, r): c for r, c in mat.column(i).items()}

    def _check_generators(self) -> None:
        v = self.calc.generators
        f = v.field
        for n in v.arities:
            for i in range(v.dim(n)):
                e = {i: f.one}
                h_e = self.h[n].apply(e) if n in self.h else {}
                lhs = v.d(n, h_e)
                axpy(lhs, 1, self.h[n].apply(v.d(n, e)) if n in self.h else {})
                rhs = dict(e)
                axpy(rhs, -1, self.alpha[n].apply(e) if n in self.alpha else {})
                if lhs != rhs:
                    raise VerificationError(
                        f"dh + hd != id - alpha on generator {i} of arity {n}", identity="homotopy"
                    )

    def _extend(self, n: int) -> tuple[Matrix, Matrix]:
        calc, free, f = self.calc, self.free, self.free.field
        h_cols, f_cols = [], []
        for t in free.trees[n]:
            labels = preorder_labels(t)
            h_vec: dict[Any, Scalar] = {}
            before = 0
            for j, lab in enumerate(labels):
                images = [self._label_image(self.alpha, x) for x in labels[:j]]
                images.append(self._label_image(self.h, lab))
                images += [{x: f.one} for x in labels[j + 1 :]]
                if all(images):
                    axpy(h_vec, _sign(before), calc.replace_labels(t, images))
                before += calc.label_degree(lab)
            f_images = [self._label_image(self.alpha, x) for x in labels]
            f_vec = calc.replace_labels(t, f_images) if all(f_images) else {}
            if not labels:
                f_vec = {t: f.one}
            h_cols.append({free.tree_index[n][x]: c for x, c in h_vec.items()})
            f_cols.append({free.tree_index[n][x]: c for x, c in f_vec.items()})
        size = free.dim(n)
        return Matrix.from_columns(f, size, h_cols), Matrix.from_columns(f, size, f_cols)

    def check(self) -> Certificate:
        """``dH + Hd = id - F(alpha)`` on every truncated component."""
        free = self.free
        cert = Certificate("homotopy extension", bounds={"max_arity": free.max_arity, "cap": self.calc.cap})
        for n in range(1, free.max_arity + 1):
            d = free.collection.differentials.get(n) or Matrix.zero(free.field, free.dim(n), free.dim(n))
            lhs = d @ self.H[n] + self.H[n] @ d
            rhs = Matrix.identity(free.field, free.dim(n)) - self.F[n]
            if lhs != rhs:
                raise VerificationError(f"dH + Hd != id - F(alpha) in arity {n}", identity="homotopy-extension")
            cert.count("dH+Hd", free.dim(n))
        return cert

    def apply(self, n: int, vec: Mapping[int, Scalar]) -> dict[int, Scalar]:
        return self.H[n].apply(vec)


def homotopy_extension_operad(
    free: Operad, alpha: Mapping[int, Matrix], h: Mapping[int, Matrix]
) -> HomotopyExtension:
    """Build ``H`` on a free operad from ``alpha`` and ``h`` on its generators and verify it."""
    ext = HomotopyExtension(free, alpha, h)
    ext.check()
    return ext


def ideal_is_invariant(ext: HomotopyExtension, gens: Sequence[tuple[int, Mapping[int, Any]]]) -> bool:
    """Saturate the ideal generated by ``gens`` and test ``H(I) in I`` on its basis."""
    free = ext.free
    f = free.field
    ideal = Ideal(free)
    ideal.saturate([(n, {i: f(c) for i, c in v.items() if c}) for n, v in gens])
    for n, space in ideal.spaces.items():
        for row in space.basis():
            if not space.contains(ext.apply(n, row)):
                return False
    return True
