"""Unit tests for the workspace grammar and builder."""

import math
import textwrap
from fractions import Fraction

import pytest

from opalg import workspace
from opalg.cli import TASK_OPTIONS
from opalg.exactla import Field
from opalg.exceptions import WorkspaceParseError
from opalg.workspace import WorkspaceBuilder, load_workspace, parse_workspace

Q = Field(0)

DOCUMENT = """\
format-version 1
field q

operad C = builtin Com arity 5
operad L = free arity 4 {
    operation b arity 2 degree 0 action sign
    relation b(b(1, 2), 3) + b(b(2, 3), 1) + b(b(3, 1), 2)
}

# dual numbers and their Koszul model
algebra A over C cap 4 {
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
task ses F prefixes = 0,1
task envelope F
"""


def _doc(body: str) -> str:
    return "format-version 1\noperad C = builtin Com\n" + body


@pytest.fixture
def doc():
    return parse_workspace(DOCUMENT)


@pytest.fixture
def builder(doc):
    return WorkspaceBuilder(doc, Q)


class TestParsing:
    def test_blocks(self, doc):
        assert doc.format_version == 1
        assert doc.field == "q"
        assert set(doc.operads) == {"C", "L"}
        assert set(doc.algebras) == {"A", "F"}
        assert set(doc.maps) == {"f"}
        assert [t.command for t in doc.tasks] == ["resolve", "ses", "envelope"]

    def test_operad_blocks(self, doc):
        c, lie = doc.operads["C"], doc.operads["L"]
        assert (c.kind, c.base, c.arity) == ("builtin", "Com", 5)
        assert lie.kind == "free"
        assert [(op.name, op.arity, op.degree, op.action) for op in lie.operations] == [("b", 2, 0, "sign")]
        assert len(lie.relations) == 1
        assert [c for c, _ in lie.relations[0]] == [1, 1, 1]

    def test_generators(self, doc):
        gens = doc.algebras["F"].generators
        assert [(g.name, g.degree, g.weight) for g in gens] == [("x", 0, 1), ("y", -1, 1)]
        assert gens[0].differential is None
        assert gens[1].differential == [(1, ("mu2", ("x", "x")))]
        assert doc.algebras["F"].cap == 4

    def test_map_images(self, doc):
        f = doc.maps["f"]
        assert (f.source, f.target) == ("F", "A")
        assert f.images == {"x": [(1, "x")], "y": [(1, 0)]}

    def test_task_options(self, doc):
        resolve, ses, envelope = doc.tasks
        assert resolve.target == "A"
        assert resolve.options == {"window": (-4, 1), "mode": "minimal"}
        assert ses.options == {"prefixes": [0, 1]}
        assert envelope.options == {}
        assert resolve.line == 24

    def test_keywords_do_not_reach_the_model(self):
        doc = parse_workspace("format-version 1\nfield q\noperad C = builtin Com arity 5\ntask check-operad C\n")
        assert doc.field == "q"
        assert (doc.operads["C"].name, doc.operads["C"].base, doc.operads["C"].arity) == ("C", "Com", 5)
        assert doc.operads["C"].line == 3
        assert [(t.command, t.target) for t in doc.tasks] == [("check-operad", "C")]

    def test_module_example(self):
        text = workspace.__doc__.split("document.\n", 1)[1].split("\nPolynomials", 1)[0]
        doc = parse_workspace(textwrap.dedent(text).strip() + "\n")
        assert set(doc.operads) == {"C", "L"}
        assert doc.algebras["A"].cap == 6
        assert doc.maps["f"].images["y"] == [(1, 0)]
        assert doc.tasks[0].options == {"window": (-4, 1), "mode": "minimal"}

    @pytest.mark.parametrize(
        "line",
        [
            "task check-operad C arity = 3",
            "task check-splitting C arity = 3 splitting = averaging slots = yes",
            "task free F",
            "task resolve A window = -4..1 mode = full",
            "task envelope F cap = 3 coequalizer = yes colimit = no",
            "task omega F over = 1",
            "task ses F prefixes = 0,1",
            "task cotangent A window = -1..0 mode = minimal over = f invariance = yes",
            "task cohomology A window = -1..2 over = f",
            "task tangent F window = -1..1",
            "task transport f window = -1..1 independence = yes",
            "task homology F window = -2..0 of = tor",
        ],
    )
    def test_every_task_command(self, line):
        (task,) = parse_workspace(DOCUMENT.split("task ", 1)[0] + line + "\n").tasks
        command, target = line.split()[1:3]
        assert (task.command, task.target) == (command, target)
        assert set(task.options) <= TASK_OPTIONS[command]
        assert len(task.options) == line.count("=")

    def test_coefficients_and_signs(self):
        doc = parse_workspace(_doc("algebra A over C {\n generator x degree 0\n relation -x + 3/2 * mu2(x, x)\n}\n"))
        (relation,) = doc.algebras["A"].relations
        assert [c for c, _ in relation] == [Fraction(-1), Fraction(3, 2)]

    def test_digest_is_stable(self):
        assert parse_workspace(DOCUMENT).digest == parse_workspace(DOCUMENT).digest
        assert parse_workspace(DOCUMENT).digest != parse_workspace(DOCUMENT + "\n").digest

    def test_generator_weight(self):
        doc = parse_workspace(_doc("algebra A over C {\n generator x degree 1 weight 2\n}\n"))
        assert doc.algebras["A"].generators[0].weight == 2

    def test_load_from_path(self, tmp_path):
        path = tmp_path / "example.opw"
        path.write_text(DOCUMENT, encoding="utf-8")
        doc = load_workspace(path)
        assert doc.path == str(path)
        assert set(doc.algebras) == {"A", "F"}

    def test_missing_file(self, tmp_path):
        with pytest.raises(WorkspaceParseError):
            load_workspace(tmp_path / "missing.opw")


class TestParseErrors:
    def test_syntax_error_location(self):
        with pytest.raises(WorkspaceParseError) as exc:
            parse_workspace("format-version 1\noperad C = builtin Com\nalgebra A over C {\n  generatr x\n}\n")
        assert exc.value.line == 4
        assert exc.value.column == 3

    def test_unsupported_version(self):
        with pytest.raises(WorkspaceParseError) as exc:
            parse_workspace("format-version 2\n")
        assert "format-version 1" in exc.value.suggestion

    def test_unknown_operad(self):
        with pytest.raises(WorkspaceParseError, match="unknown operad"):
            parse_workspace("format-version 1\nalgebra A over C {\n}\n")

    def test_unknown_task_target(self):
        with pytest.raises(WorkspaceParseError, match="unknown object"):
            parse_workspace(_doc("task resolve B\n"))

    def test_unknown_map_end(self):
        with pytest.raises(WorkspaceParseError, match="unknown algebra"):
            parse_workspace(_doc("algebra A over C {\n}\nmap g : A -> B {\n}\n"))

    def test_zero_cap(self):
        with pytest.raises(WorkspaceParseError):
            parse_workspace(_doc("algebra A over C cap 0 {\n}\n"))

    def test_duplicate_algebra(self):
        with pytest.raises(WorkspaceParseError, match="Duplicate algebra"):
            parse_workspace(_doc("algebra A over C {\n}\nalgebra A over C {\n}\n"))

    def test_duplicate_assignment(self):
        text = _doc("algebra A over C {\n generator x degree 0\n}\nmap g : A -> A {\n x -> x\n x -> 0\n}\n")
        with pytest.raises(WorkspaceParseError, match="assigned twice"):
            parse_workspace(text)

    def test_duplicate_option(self):
        with pytest.raises(WorkspaceParseError, match="given twice"):
            parse_workspace(_doc("algebra A over C {\n}\ntask resolve A mode = full mode = minimal\n"))


class TestBuilder:
    def test_builtin_operad(self, builder):
        assert builder.operad("C").dims() == {n: 1 for n in range(1, 6)}

    def test_free_operad_with_relations(self, builder):
        assert builder.operad("L").dims() == {n: math.factorial(n - 1) for n in range(1, 5)}

    def test_presentation(self, builder):
        p = builder.presentation("A")
        assert p.names == ["x"]
        assert len(p.relations) == 1
        assert builder.presentation("A") is p

    def test_realized_algebra(self, builder):
        a = builder.algebra("A")
        assert a.reduce(a.evaluate(("mu2", ("x", "x")))) == {}

    def test_map(self, builder):
        f = builder.algebra_map("f")
        assert f.name == "f"
        assert f.chain_map() is not None

    def test_default_cap(self):
        doc = parse_workspace(_doc("algebra A over C {\n generator x degree 0\n}\n"))
        assert WorkspaceBuilder(doc, Q, default_cap=3).presentation("A").weight_cap == 3

    def test_missing_image(self):
        text = _doc(
            "algebra A over C {\n generator x degree 0\n generator z degree 0\n}\n"
            "map g : A -> A {\n x -> x\n}\n"
        )
        builder = WorkspaceBuilder(parse_workspace(text), Q)
        with pytest.raises(WorkspaceParseError, match="no image for z"):
            builder.algebra_map("g")

    def test_unknown_symbol_located(self):
        text = _doc("algebra A over C {\n generator x degree 0\n relation nu2(x, x)\n}\n")
        builder = WorkspaceBuilder(parse_workspace(text), Q)
        with pytest.raises(WorkspaceParseError) as exc:
            builder.presentation("A")
        assert exc.value.line == 3

    def test_map_must_commute_with_differentials(self):
        text = _doc(
            "algebra F over C {\n generator x degree 0\n generator y degree -1 d = mu2(x, x)\n}\n"
            "algebra K over C {\n generator x degree 0\n generator y degree -1\n}\n"
            "map g : F -> K {\n x -> x\n y -> y\n}\n"
        )
        builder = WorkspaceBuilder(parse_workspace(text), Q)
        with pytest.raises(WorkspaceParseError):
            builder.algebra_map("g")

    def test_mixed_actions_rejected(self):
        text = (
            "format-version 1\noperad P = free arity 3 {\n"
            " operation a arity 2 degree 0\n operation b arity 2 degree 0 action sign\n}\n"
        )
        builder = WorkspaceBuilder(parse_workspace(text), Q)
        with pytest.raises(WorkspaceParseError, match="common action"):
            builder.operad("P")
