"""
Workspace files: operads, algebras, maps and tasks in one plain-text document.

    format-version 1
    field q

    operad C = builtin Com arity 7
    operad L = free arity 4 {
        operation b arity 2 degree 0 action sign
        relation b(b(1, 2), 3) + b(b(2, 3), 1) + b(b(3, 1), 2)
    }

    algebra A over C cap 6 {
        generator x degree 0
        relation mu2(x, x)
    }
    algebra F over C cap 4 {
        generator x degree 0
        generator y degree -1 d = mu2(x, x)
    }
    map f : F -> A {
        x -> x
        y -> 0
    }

    task resolve A window = -4..1 mode = minimal

Polynomials are sums of terms ``[c *] expr`` with rational ``c``; an expression is a
generator name (variable number inside operad blocks) or ``symbol(expr, ...)``.
Whitespace is insignificant and ``#`` starts a comment.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from arpeggio import EOF, NoMatch, OneOrMore, Optional, ParserPython, PTNodeVisitor, ZeroOrMore, visit_parse_tree
from arpeggio import RegExMatch as _

from .algebras import AlgebraMap, AlgebraPresentation, Polynomial, RealizedAlgebra, realize
from .exactla import Field, accumulate, axpy
from .exceptions import OpalgError, WorkspaceParseError
from .logging_config import get_logger, log_function_call
from .operads import Collection, Operad, builtin, quotient
from .symmetry import RightAction

logger = get_logger(__name__)

FORMAT_VERSION = 1

Expr = Any  # str | int | tuple[str, tuple[Expr, ...]]
RawPolynomial = list[tuple[Fraction, Expr]]


# -- grammar --------------------------------------------------------------------------------


def comment():
    return _(r"#.*")


def name():
    return _(r"[A-Za-z_][A-Za-z0-9_']*")


def integer():
    return _(r"[+-]?\d+")


def ratio():
    return _(r"\d+(/\d+)?")


def sign():
    return _(r"[+-]")


def application():
    return name, "(", expr, ZeroOrMore(",", expr), ")"


def expr():
    return [application, integer, name]


def term():
    return Optional(ratio, "*"), expr


def polynomial():
    return Optional(sign), term, ZeroOrMore(sign, term)


def version():
    return "format-version", integer


def field_decl():
    return "field", name


def arity_clause():
    return "arity", integer


def action_clause():
    return "action", name


def operation_decl():
    return "operation", name, arity_clause, "degree", integer, Optional(action_clause)


def relation_decl():
    return "relation", polynomial


def builtin_operad():
    return "builtin", name, Optional(arity_clause)


def free_operad():
    return "free", arity_clause, "{", ZeroOrMore([operation_decl, relation_decl]), "}"


def operad_block():
    return "operad", name, "=", [builtin_operad, free_operad]


def weight_clause():
    return "weight", integer


def differential_clause():
    return "d", "=", polynomial


def generator_decl():
    return "generator", name, "degree", integer, Optional(weight_clause), Optional(differential_clause)


def cap_clause():
    return "cap", integer


def algebra_block():
    return "algebra", name, "over", name, Optional(cap_clause), "{", ZeroOrMore([generator_decl, relation_decl]), "}"


def assignment():
    return name, "->", polynomial


def map_block():
    return "map", name, ":", name, "->", name, "{", ZeroOrMore(assignment), "}"


def command():
    return _(r"[a-z][a-z-]*")


def degree_range():
    return integer, "..", integer


def integer_list():
    return integer, OneOrMore(",", integer)


def option():
    return name, "=", [degree_range, integer_list, integer, name]


def task():
    return "task", command, name, ZeroOrMore(option)


def workspace():
    return version, Optional(field_decl), ZeroOrMore([operad_block, algebra_block, map_block, task]), EOF


# -- document model -------------------------------------------------------------------------


@dataclass
class OperationSpec:
    name: str
    arity: int
    degree: int
    action: str = "trivial"


@dataclass
class OperadSpec:
    name: str
    kind: str  # builtin | free
    base: str | None = None
    arity: int = 5
    operations: list[OperationSpec] = field(default_factory=list)
    relations: list[RawPolynomial] = field(default_factory=list)
    line: int | None = None


@dataclass
class GeneratorSpec:
    name: str
    degree: int
    weight: int = 1
    differential: RawPolynomial | None = None
    line: int | None = None


@dataclass
class AlgebraSpec:
    name: str
    operad: str
    cap: int | None = None
    generators: list[GeneratorSpec] = field(default_factory=list)
    relations: list[RawPolynomial] = field(default_factory=list)
    line: int | None = None


@dataclass
class MapSpec:
    name: str
    source: str
    target: str
    images: dict[str, RawPolynomial] = field(default_factory=dict)
    line: int | None = None


@dataclass
class TaskSpec:
    command: str
    target: str
    options: dict[str, Any] = field(default_factory=dict)
    line: int | None = None


@dataclass
class WorkspaceFile:
    format_version: int
    field: str | None
    operads: dict[str, OperadSpec] = field(default_factory=dict)
    algebras: dict[str, AlgebraSpec] = field(default_factory=dict)
    maps: dict[str, MapSpec] = field(default_factory=dict)
    tasks: list[TaskSpec] = field(default_factory=list)
    digest: str = ""
    path: str | None = None


class _Clause(tuple):
    """Tagged optional part of a declaration."""


def _clause(tag: str, *values: Any) -> _Clause:
    return _Clause((tag, *values))


class WorkspaceVisitor(PTNodeVisitor):
    """Semantic actions building the document model."""

    def __init__(self, parser: ParserPython, **kwargs):
        super().__init__(**kwargs)
        self.parser = parser

    def _line(self, node) -> int:
        return self.parser.pos_to_linecol(node.position)[0]

    def visit_name(self, node, children):
        return str(node.value)

    def visit_command(self, node, children):
        return _clause("command", str(node.value))

    def visit_integer(self, node, children):
        return int(node.value)

    def visit_ratio(self, node, children):
        return Fraction(str(node.value))

    def visit_sign(self, node, children):
        return _clause("sign", str(node.value))

    def visit_application(self, node, children):
        return (children[0], tuple(children[1:]))

    def visit_expr(self, node, children):
        return children[0]

    def visit_term(self, node, children):
        if len(children) == 2:
            return _clause("term", children[0], children[1])
        return _clause("term", Fraction(1), children[0])

    def visit_polynomial(self, node, children):
        out: RawPolynomial = []
        s = 1
        for child in children:
            if child[0] == "sign":
                s = -1 if child[1] == "-" else 1
            else:
                out.append((s * child[1], child[2]))
                s = 1
        return _clause("polynomial", out)

    def visit_version(self, node, children):
        return _clause("version", children[0])

    def visit_field_decl(self, node, children):
        return _clause("field", children[0])

    def visit_arity_clause(self, node, children):
        return _clause("arity", children[0])

    def visit_action_clause(self, node, children):
        return _clause("action", children[0])

    def visit_weight_clause(self, node, children):
        return _clause("weight", children[0])

    def visit_cap_clause(self, node, children):
        return _clause("cap", children[0])

    def visit_differential_clause(self, node, children):
        return _clause("d", children[0][1])

    def visit_relation_decl(self, node, children):
        return _clause("relation", children[0][1])

    def visit_operation_decl(self, node, children):
        opts = {c[0]: c[1] for c in children[1:] if isinstance(c, _Clause)}
        degree = next(c for c in children[1:] if isinstance(c, int))
        return _clause("operation", OperationSpec(children[0], opts["arity"], degree, opts.get("action", "trivial")))

    def visit_builtin_operad(self, node, children):
        opts = {c[0]: c[1] for c in children[1:] if isinstance(c, _Clause)}
        return OperadSpec("", "builtin", base=children[0], arity=opts.get("arity", 5))

    def visit_free_operad(self, node, children):
        spec = OperadSpec("", "free", arity=children[0][1])
        for c in children[1:]:
            if c[0] == "operation":
                spec.operations.append(c[1])
            else:
                spec.relations.append(c[1])
        return spec

    def visit_operad_block(self, node, children):
        spec = children[1]
        spec.name = children[0]
        spec.line = self._line(node)
        return _clause("operad", spec)

    def visit_generator_decl(self, node, children):
        opts = {c[0]: c[1] for c in children[2:] if isinstance(c, _Clause)}
        return _clause(
            "generator",
            GeneratorSpec(children[0], children[1], opts.get("weight", 1), opts.get("d"), self._line(node)),
        )

    def visit_algebra_block(self, node, children):
        spec = AlgebraSpec(children[0], children[1], line=self._line(node))
        for c in children[2:]:
            if c[0] == "cap":
                spec.cap = c[1]
            elif c[0] == "generator":
                spec.generators.append(c[1])
            else:
                spec.relations.append(c[1])
        return _clause("algebra", spec)

    def visit_assignment(self, node, children):
        return _clause("assignment", children[0], children[1][1])

    def visit_map_block(self, node, children):
        spec = MapSpec(children[0], children[1], children[2], line=self._line(node))
        for c in children[3:]:
            if c[1] in spec.images:
                line, col = self.parser.pos_to_linecol(node.position)
                raise WorkspaceParseError(f"Generator '{c[1]}' is assigned twice in map '{spec.name}'", line, col)
            spec.images[c[1]] = c[2]
        return _clause("map", spec)

    def visit_degree_range(self, node, children):
        return _clause("range", children[0], children[1])

    def visit_integer_list(self, node, children):
        return _clause("list", *children)

    def visit_option(self, node, children):
        value = children[1]
        if isinstance(value, _Clause):
            value = (value[1], value[2]) if value[0] == "range" else list(value[1:])
        return _clause("option", children[0], value)

    def visit_task(self, node, children):
        options = {}
        for c in children[2:]:
            if c[1] in options:
                line, col = self.parser.pos_to_linecol(node.position)
                raise WorkspaceParseError(f"Option '{c[1]}' given twice", line, col)
            options[c[1]] = c[2]
        return _clause("task", TaskSpec(children[0][1], children[1], options, self._line(node)))

    def visit_workspace(self, node, children):
        doc = WorkspaceFile(children[0][1], None)
        tables = {"operad": doc.operads, "algebra": doc.algebras, "map": doc.maps}
        for c in children[1:]:
            tag, value = c[0], c[1]
            if tag == "field":
                doc.field = value
            elif tag == "task":
                doc.tasks.append(value)
            else:
                if value.name in tables[tag]:
                    raise WorkspaceParseError(f"Duplicate {tag} '{value.name}'", value.line)
                tables[tag][value.name] = value
        return doc


_parser: ParserPython | None = None


def _get_parser() -> ParserPython:
    global _parser
    if _parser is None:
        _parser = ParserPython(workspace, comment)
    return _parser


def parse_workspace(text: str, path: str | None = None) -> WorkspaceFile:
    """Parse a workspace document; syntax errors carry line and column."""
    parser = _get_parser()
    try:
        tree = parser.parse(text)
    except NoMatch as e:
        line, col = parser.pos_to_linecol(e.position)
        raise WorkspaceParseError(f"Syntax error: expected {_expected(e)}", line, col) from e
    doc = visit_parse_tree(tree, WorkspaceVisitor(parser))
    if doc.format_version != FORMAT_VERSION:
        raise WorkspaceParseError(
            f"Unsupported format-version {doc.format_version}",
            1,
            1,
            suggestion=f"This engine reads format-version {FORMAT_VERSION}",
        )
    doc.digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    doc.path = path
    _check_references(doc)
    logger.debug(
        f"parsed workspace: {len(doc.operads)} operads, {len(doc.algebras)} algebras, "
        f"{len(doc.maps)} maps, {len(doc.tasks)} tasks"
    )
    return doc


def _expected(e: NoMatch) -> str:
    rules = sorted({str(r) for r in getattr(e, "rules", [])})
    return " or ".join(rules) if rules else "valid input"


@log_function_call
def load_workspace(path: str | Path) -> WorkspaceFile:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise WorkspaceParseError(f"Cannot read workspace {p}: {e.strerror}") from e
    return parse_workspace(text, str(p))


def _check_references(doc: WorkspaceFile) -> None:
    for spec in doc.algebras.values():
        if spec.operad not in doc.operads:
            raise WorkspaceParseError(f"Algebra '{spec.name}' refers to unknown operad '{spec.operad}'", spec.line)
        if spec.cap is not None and spec.cap < 1:
            raise WorkspaceParseError(f"Algebra '{spec.name}' has a weight cap below 1", spec.line)
    for spec in doc.maps.values():
        for end in (spec.source, spec.target):
            if end not in doc.algebras:
                raise WorkspaceParseError(f"Map '{spec.name}' refers to unknown algebra '{end}'", spec.line)
    known = set(doc.operads) | set(doc.algebras) | set(doc.maps)
    for t in doc.tasks:
        if t.target not in known:
            raise WorkspaceParseError(f"Task '{t.command}' refers to unknown object '{t.target}'", t.line)


# -- building -------------------------------------------------------------------------------


class WorkspaceBuilder:
    """
    Turns a parsed document into operads, presentations and maps, on demand and once.

    Semantic errors (bad symbols, non-triangular differentials, missing images) surface
    as the engine errors they are, re-raised with the line of the offending block.
    """

    def __init__(self, doc: WorkspaceFile, field: Field, default_cap: int = 4, workers: int = 1):
        self.doc = doc
        self.field = field
        self.default_cap = default_cap
        self.workers = workers
        self._operads: dict[str, Operad] = {}
        self._presentations: dict[str, AlgebraPresentation] = {}
        self._algebras: dict[str, RealizedAlgebra] = {}
        self._maps: dict[str, AlgebraMap] = {}

    def _located(self, e: OpalgError, line: int | None) -> WorkspaceParseError:
        return WorkspaceParseError(e.message, line, suggestion=e.suggestion)

    def operad(self, name: str) -> Operad:
        if name not in self._operads:
            spec = self.doc.operads[name]
            try:
                self._operads[name] = self._build_operad(spec)
            except WorkspaceParseError:
                raise
            except OpalgError as e:
                raise self._located(e, spec.line) from e
        return self._operads[name]

    def _build_operad(self, spec: OperadSpec) -> Operad:
        if spec.kind == "builtin":
            return builtin(spec.base, self.field, spec.arity)
        from .free_operads import free_operad

        f = self.field
        by_arity: dict[int, list[OperationSpec]] = {}
        for op in spec.operations:
            by_arity.setdefault(op.arity, []).append(op)
        degrees, actions, labels = {}, {}, {}
        for n, ops in by_arity.items():
            kinds = {op.action for op in ops}
            if len(kinds) != 1 or not kinds <= {"trivial", "sign"}:
                raise WorkspaceParseError(
                    f"Operations of arity {n} in '{spec.name}' need one common action, trivial or sign", spec.line
                )
            kind = kinds.pop()
            degrees[n] = [op.degree for op in ops]
            labels[n] = [op.name for op in ops]
            actions[n] = (RightAction.trivial if kind == "trivial" else RightAction.sign)(f, n, len(ops))
        free = free_operad(Collection(f, degrees, None, actions, labels), spec.arity, name=f"F({spec.name})")
        if not spec.relations:
            free.name = spec.name
            return free
        gens = [self._operad_element(free, raw) for raw in spec.relations]
        return quotient(free, gens, name=spec.name)

    def _operad_element(self, o: Operad, raw: RawPolynomial) -> tuple[int, dict]:
        arity, out = None, {}
        for c, e in raw:
            n, vec = o.evaluate(e)
            if arity is not None and n != arity:
                raise WorkspaceParseError(f"Relation of {o.name} mixes arities {arity} and {n}")
            arity = n
            axpy(out, self.field(c), vec)
        return arity, out

    def polynomial(self, p: AlgebraPresentation, raw: RawPolynomial) -> Polynomial:
        out: Polynomial = {}
        for c, e in raw:
            if isinstance(e, int):
                if e != 0:
                    raise WorkspaceParseError(f"Variable {e} outside an operad block")
                continue
            for m, v in p.evaluate(e).items():
                accumulate(out, m, self.field(c) * v)
        return out

    def presentation(self, name: str) -> AlgebraPresentation:
        if name not in self._presentations:
            spec = self.doc.algebras[name]
            o = self.operad(spec.operad)
            try:
                p = AlgebraPresentation(o, spec.cap or self.default_cap, spec.name)
                for g in spec.generators:
                    diff = self.polynomial(p, g.differential) if g.differential else None
                    p.add_generator(g.name, g.degree, diff, g.weight)
                for raw in spec.relations:
                    p.add_relation(self.polynomial(p, raw))
            except WorkspaceParseError:
                raise
            except OpalgError as e:
                raise self._located(e, spec.line) from e
            self._presentations[name] = p
        return self._presentations[name]

    def algebra(self, name: str, leibniz_samples: int = 24) -> RealizedAlgebra:
        if name not in self._algebras:
            self._algebras[name] = realize(self.presentation(name), self.workers, leibniz_samples)
        return self._algebras[name]

    def algebra_map(self, name: str) -> AlgebraMap:
        if name not in self._maps:
            spec = self.doc.maps[name]
            src, tgt = self.algebra(spec.source), self.algebra(spec.target)
            missing = [g for g in src.presentation.names if g not in spec.images]
            if missing:
                raise WorkspaceParseError(f"Map '{name}' gives no image for {', '.join(missing)}", spec.line)
            extra = [g for g in spec.images if g not in src.presentation.names]
            if extra:
                raise WorkspaceParseError(f"Map '{name}' assigns unknown generators {', '.join(extra)}", spec.line)
            try:
                images = {g: self.polynomial(tgt.presentation, raw) for g, raw in spec.images.items()}
                f = AlgebraMap(src, tgt, images, name=name)
                f.chain_map()
            except WorkspaceParseError:
                raise
            except OpalgError as e:
                raise self._located(e, spec.line) from e
            self._maps[name] = f
        return self._maps[name]
