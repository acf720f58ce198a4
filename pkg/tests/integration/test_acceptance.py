"""Desk-scale acceptance checks across the whole engine."""

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opalg.algebras import AlgebraMap, check_unit_qi, free_algebra, free_presentation, realize
from opalg.cli import main
from opalg.complexes import ChainMap, Complex, DegreeWindow, betti_numbers
from opalg.differentials import adjunction_check, cohomology, cotangent, cotangent_invariance, relative_ses
from opalg.enveloping import EnvelopingAlgebra, EnvelopingMap, enveloping, env_of_attached_operad, regular_module
from opalg.exactla import Field, Matrix
from opalg.exceptions import AxiomError, SplittingError, VerificationError
from opalg.free_operads import (
    attach_cell_operad,
    free_operad,
    homotopy_extension_operad,
    ideal_is_invariant,
    inclusion_morphism,
    lie,
)
from opalg.operads import Collection, associative, builtin, check_operad, commutative, mutate
from opalg.resolutions import homotopy_extension, resolve
from opalg.splittings import averaging_splitting, canonical_splitting, check_splitting, perturbed_splitting
from opalg.symmetry import MonotoneInjection, Permutation, factorize, is_monotone_after
from opalg.tangent import t_cof, t_fib, tangent, transport

from tests.test_helpers import cell_presentations, write_workspace

pytestmark = pytest.mark.integration

Q = Field(0)
F2 = Field(2)
COM5 = commutative(Q, 5)

MUTATIONS = [
    (1, 1, 2),
    (1, 1, 3),
    (2, 1, 1),
    (2, 2, 1),
    (2, 1, 2),
    (2, 2, 2),
    (3, 1, 2),
    (3, 2, 2),
    (3, 3, 2),
    (2, 1, 3),
]


def _koszul(com, cap: int):
    """F_Com(x, y; dy = x^2)."""
    p = free_presentation(com, [("x", 0)], cap, name="K")
    p.add_generator("y", -1, p.product("mu2", "x", "x"))
    return p


def _dual_numbers(com, cap: int = 4):
    p = free_presentation(com, [("x", 0)], cap, name="D")
    p.add_relation(p.product("mu2", "x", "x"))
    return realize(p)


class TestOperadAxioms:
    @pytest.mark.slow
    @pytest.mark.parametrize("build", [commutative, associative, lie], ids=["Com", "Ass", "Lie"])
    def test_builtins_pass_to_arity_five(self, build):
        o = build(Q, 5)
        assert check_operad(o, 5).passed

    def test_dimensions(self):
        assert associative(Q, 5).dims() == {n: math.factorial(n) for n in range(1, 6)}
        assert lie(Q, 5).dims() == {n: math.factorial(n - 1) for n in range(1, 6)}

    @pytest.mark.parametrize("triple", MUTATIONS)
    def test_single_mutation_fails(self, triple):
        com = commutative(Q, 5)
        broken = mutate(com, *triple, 0, 0, {0: 2})
        with pytest.raises(AxiomError):
            check_operad(broken, 5)


class TestFactorizationLemma:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, pytest.param(6, marks=pytest.mark.slow)])
    def test_exhaustive(self, n):
        perms = Permutation.all_permutations(n)
        for f in MonotoneInjection.all_injections(n):
            seen = set()
            for sigma in perms:
                tau, rho = factorize(f, sigma)
                assert is_monotone_after(tau, f)
                assert factorize(f, tau)[0] == tau
                seen.add(tau)
            assert len(seen) == math.factorial(n) // math.factorial(f.s)


class TestSplittings:
    @pytest.mark.parametrize("build", [commutative, associative, lie], ids=["Com", "Ass", "Lie"])
    def test_averaging_over_rationals(self, build):
        o = build(Q, 4)
        assert check_splitting(o, averaging_splitting(o), 4).passed

    def test_canonical_for_ass_over_f2(self):
        a = associative(F2, 4)
        assert check_splitting(a, canonical_splitting(a), 4).passed

    def test_perturbed_splitting_fails(self):
        a = associative(Q, 4)
        with pytest.raises(SplittingError):
            check_splitting(a, perturbed_splitting(a), 4, all_slots=True)


def _with_contractible(field: Field, kept: int, low: int) -> tuple[Complex, ChainMap, ChainMap]:
    """``x`` in degree ``kept`` plus ``u -> v`` from degree ``low``; alpha keeps x, h sends v to u."""
    labels: dict[int, list[str]] = {}
    for name, deg in (("x", kept), ("u", low), ("v", low + 1)):
        labels.setdefault(deg, []).append(name)
    one = field.one
    mats = {}
    for n, names in labels.items():
        above = labels.get(n + 1, [])
        cols = [{above.index("v"): one} if name == "u" else {} for name in names]
        mats[n] = Matrix.from_columns(field, len(above), cols)
    v = Complex(field, {n: len(names) for n, names in labels.items()}, mats, labels)
    alpha = ChainMap.from_columns(
        v, v, {kept: [{labels[kept].index("x"): one} if name == "x" else {} for name in labels[kept]]}
    )
    h = ChainMap.from_columns(
        v,
        v,
        {low + 1: [{labels[low].index("u"): one} if name == "v" else {} for name in labels[low + 1]]},
        degree_shift=-1,
    )
    return v, alpha, h


class TestHomotopyExtension:
    @pytest.mark.slow
    @settings(max_examples=10, deadline=None)
    @given(
        st.sampled_from([("Com", Q), ("Ass", F2)]),
        st.integers(-1, 1),
        st.integers(-2, 0),
    )
    def test_free_algebras(self, operad, kept, low):
        o = builtin(operad[0], operad[1], 4)
        ext = homotopy_extension(*_with_contractible(operad[1], kept, low), o, cap=4)
        cert = ext.check()
        assert cert.passed
        assert cert.checks["dH"] == ext.algebra.complex.total_dim
        p = ext.presentation
        assert ext.preserves_ideal([p.generator("u")])
        assert ext.preserves_ideal([p.generator("x")])
        assert not ext.preserves_ideal([p.generator("v")])

    @staticmethod
    def _generators(kept: int, low: int) -> Collection:
        """Binary m of degree ``kept`` and a contractible pair u -> v of degrees low, low + 1."""
        d = Matrix.from_dense(Q, [[0, 0, 0], [0, 0, 0], [0, 1, 0]])
        return Collection.single(Q, 2, [kept, low, low + 1], d, "trivial", ["m", "u", "v"])

    @settings(max_examples=8, deadline=None)
    @given(st.integers(-1, 0), st.integers(-2, 0))
    def test_free_operad(self, kept, low):
        free = free_operad(self._generators(kept, low), 3)
        alpha = Matrix.from_columns(Q, 3, [{0: Q(1)}, {}, {}])
        h = Matrix.from_columns(Q, 3, [{}, {}, {1: Q(1)}])
        ext = homotopy_extension_operad(free, {2: alpha}, {2: h})
        assert ext.check().passed
        m, u, v = (free.symbol(name) for name in ("m", "u", "v"))
        assert ideal_is_invariant(ext, [u])
        assert ideal_is_invariant(ext, [m])
        assert not ideal_is_invariant(ext, [v])

    @pytest.mark.slow
    def test_free_operad_to_four_internal_vertices(self):
        free = free_operad(self._generators(0, -1), 5)
        alpha = Matrix.from_columns(Q, 3, [{0: Q(1)}, {}, {}])
        h = Matrix.from_columns(Q, 3, [{}, {}, {1: Q(1)}])
        cert = homotopy_extension_operad(free, {2: alpha}, {2: h}).check()
        assert cert.passed
        assert cert.checks["dH+Hd"] == sum(free.dims().values())


class TestResolution:
    @pytest.fixture(scope="class")
    def com(self):
        return commutative(Q, 6)

    def _truncated_polynomials(self, com, power: int):
        p = free_presentation(com, [("x", 0)], 6, name=f"k[x]/x^{power}")
        p.add_relation(p.product(f"mu{power}", *["x"] * power))
        return realize(p)

    def test_dual_numbers(self, com):
        res = resolve(self._truncated_polynomials(com, 2), -4)
        assert res.complete
        assert res.certificate.passed
        assert res.presentation.names == ["x", "y1"]
        assert [(k.degree, k.differential) for k in res.killed] == [(-1, "+1/1 mu2(x,x)")]

    def test_koszul_model_homology(self, com):
        """Direct homology of F(x, y; dy = x^2) matches k[x]/x^2 below the trusted weight."""
        c = realize(_koszul(com, 6))
        window = DegreeWindow(-4, 1)
        betti = betti_numbers(c.complex, window, c.trusted_weight)
        assert betti[0] == 1
        assert all(betti[n] == 0 for n in (-3, -2, -1))

    def test_cube_relation_first_stage(self, com):
        res = resolve(self._truncated_polynomials(com, 3), -4, stage_cap=1)
        first = res.killed[0]
        assert (first.stage, first.degree, first.weight) == (1, -1, 3)
        assert first.differential == "+1/1 mu3(x,x,x)"


class TestEnvelopingAlgebras:
    def test_com(self):
        u = enveloping(free_presentation(commutative(Q, 6), [("x", 0)], 5))
        assert u.weight_dims() == {w: 1 for w in range(6)}

    @pytest.mark.slow
    def test_ass(self):
        u = enveloping(free_presentation(associative(Q, 6), [("x", 0)], 5))
        assert u.weight_dims() == {w: w + 1 for w in range(6)}

    def test_without_cells_the_comparison_is_the_identity(self):
        com = commutative(Q, 4)
        result = env_of_attached_operad(com, free_presentation(com, [("x", 0)], 3))
        assert result.certificate.passed
        assert result.extension.weight_dims() == result.enveloping.weight_dims() == {w: 1 for w in range(4)}

    @pytest.mark.slow
    def test_cell_comparison_to_weight_three(self):
        base = commutative(Q, 4)
        m = Complex.point(Q, 0)
        alpha = ChainMap.from_columns(m, base.component(2), {0: [{0: Q(1)}]})
        attached = attach_cell_operad(base, m, 2, alpha, ["t"])
        result = env_of_attached_operad(attached, free_presentation(attached, [("x", 0)], 3))
        cert = result.certificate
        assert cert.passed
        assert cert.bounds["weight_cap"] == 3
        assert cert.checks["commutes-with-d"] > 0
        assert cert.checks["bijection"] > 0
        assert cert.checks["product"] > 0

    @settings(max_examples=6, deadline=None)
    @given(st.booleans(), st.integers(-2, 0))
    def test_contractible_extension_is_a_quasi_iso(self, koszul, low):
        small = _koszul(COM5, 3) if koszul else free_presentation(COM5, [("x", 0)], 3)
        big = small.copy("B")
        big.add_generator("v", low)
        big.add_generator("u", low - 1, big.generator("v"))
        phi = EnvelopingMap.inclusion(EnvelopingAlgebra(small), EnvelopingAlgebra(big))
        assert phi.chain_map().is_injective()
        assert phi.is_quasi_iso(DegreeWindow(-4, 1))


class TestDifferentials:
    @pytest.fixture(scope="class")
    def koszul(self):
        return _koszul(commutative(Q, 6), 5)

    @pytest.mark.slow
    @pytest.mark.parametrize("base", [None, 1], ids=["absolute", "over-x"])
    def test_adjunction_to_weight_five(self, koszul, base):
        u = EnvelopingAlgebra(koszul)
        cert = adjunction_check(koszul, base, regular_module(u, realize(koszul)))
        assert cert.passed
        assert cert.bounds["weight_cap"] == 5
        assert cert.checks["inverse"] == 2

    @pytest.mark.slow
    def test_relative_sequence_to_weight_five(self, koszul):
        ses = relative_ses(koszul, 0, 1)
        assert ses.certificate.passed
        assert ses.ranks == (1, 2, 1)
        assert ses.projection.compose(ses.inclusion).is_zero()

    @settings(max_examples=10, deadline=None)
    @given(cell_presentations(COM5), st.sampled_from([None, 1]))
    def test_adjunction_on_cell_algebras(self, p, base):
        u = EnvelopingAlgebra(p)
        assert adjunction_check(p, base, regular_module(u, realize(p)), limit=200).passed

    @settings(max_examples=10, deadline=None)
    @given(cell_presentations(COM5))
    def test_relative_sequence_on_cell_algebras(self, p):
        ses = relative_ses(p, 0, 1)
        assert ses.certificate.passed
        assert ses.ranks == (1, p.size, p.size - 1)


class TestCotangentCohomology:
    @pytest.fixture(scope="class")
    def dual_numbers(self):
        return _dual_numbers(COM5)

    def test_two_routes_agree(self, dual_numbers):
        window = DegreeWindow(-1, 2)
        h = cohomology(cotangent(dual_numbers, window), window)
        assert h.certificate.passed
        compared = h.certificate.bounds["compared_degrees"]
        assert compared
        assert h.derivation_betti == {n: h.betti[n] for n in compared}
        assert h.certificate.checks["two-routes"] == len(compared)

    @pytest.mark.slow
    def test_two_resolutions_agree(self, dual_numbers):
        cert = cotangent_invariance(dual_numbers, DegreeWindow(-2, 0))
        assert cert.passed
        assert cert.bounds["betti"]["minimal"] == cert.bounds["betti"]["full"]


@pytest.mark.slow
class TestTangentTower:
    """Transport along a three-level tower of fibrations composes."""

    WINDOW = DegreeWindow(-1, 1)

    @pytest.fixture(scope="class")
    def tower(self):
        com = commutative(Q, 4)
        small = free_algebra(com, [("x", 0)], 2)
        p = free_presentation(com, [("x", 0), ("u", 0)], 2, name="B")
        p.add_generator("v", -1, p.generator("u"))
        mid = realize(p)
        q = p.copy("T")
        q.add_generator("s", 0)
        q.add_generator("t", -1, q.generator("s"))
        top = realize(q)
        upper = AlgebraMap(
            top, mid, {"x": mid.generator("x"), "u": mid.generator("u"), "v": mid.generator("v")}, name="p1"
        )
        lower = AlgebraMap(mid, small, {"x": small.generator("x")}, name="p2")
        return upper, lower

    def test_lie_axioms(self):
        com = commutative(Q, 5)
        for a in (free_algebra(com, [("x", 0)], 3), realize(_koszul(com, 3))):
            cert = tangent(a, DegreeWindow(-2, 1)).check_axioms()
            assert cert.passed
            assert {"antisymmetry", "jacobi", "d-derivation"} <= set(cert.checks)

    def test_fibration_legs(self, tower):
        _, lower = tower
        z = t_fib(lower, self.WINDOW)
        assert z.certificate.passed
        assert {"surjective", "acyclic-kernel", "injective"} <= set(z.certificate.checks)
        assert z.certificate.checks["quasi-iso"] == 2

    def test_cofibration_legs(self, tower):
        _, lower = tower
        small, mid = lower.target, lower.source
        z = t_cof(AlgebraMap(small, mid, {"x": mid.generator("x")}, name="i"), self.WINDOW)
        assert z.certificate.passed
        assert z.certificate.checks["quasi-iso"] == 2

    def test_composition(self, tower):
        upper, lower = tower
        tangents = {}
        composite = transport(lower.compose(upper, name="p"), self.WINDOW, tangents=tangents)
        stepwise = transport(lower, self.WINDOW, tangents=tangents).compose(
            transport(upper, self.WINDOW, tangents=tangents)
        )
        for n in self.WINDOW.degrees():
            assert composite.matrix(n) == stepwise.matrix(n)


class TestBaseChangeUnit:
    WINDOW = DegreeWindow(-2, 1)

    @settings(max_examples=3, deadline=None)
    @given(st.integers(-1, 1))
    def test_contractible_cell_gives_a_quasi_iso(self, low):
        com = commutative(Q, 4)
        m = Complex(Q, {low: 1, low + 1: 1}, {low: Matrix.identity(Q, 1)})
        attached = attach_cell_operad(com, m, 2, ChainMap.zero(m, com.component(2)), ["t"])
        cert = check_unit_qi(inclusion_morphism(attached), free_presentation(com, [("x", 0)], 3), self.WINDOW)
        assert cert.passed
        assert cert.checks["operad-qi"] == 3
        assert cert.checks["unit-qi"] == 1

    def test_killing_the_product_is_not_a_quasi_iso(self):
        com = commutative(Q, 4)
        m = Complex.point(Q, 0)
        alpha = ChainMap.from_columns(m, com.component(2), {0: [{0: Q(1)}]})
        attached = attach_cell_operad(com, m, 2, alpha, ["t"])
        with pytest.raises(VerificationError, match="arity 2") as exc:
            check_unit_qi(inclusion_morphism(attached), free_presentation(com, [("x", 0)], 3), self.WINDOW)
        assert exc.value.identity == "operad-qi"


DESK_SUITE = """\
format-version 1
field q

operad A = builtin Ass arity 4
operad C = builtin Com arity 5

algebra F over A cap 3 {
    generator x degree 0
}
algebra D over C cap 4 {
    generator x degree 0
    relation mu2(x, x)
}

task check-operad A
task check-splitting A arity = 4 splitting = canonical
task free F
task envelope F
task resolve D window = -3..1
task cohomology D window = -1..2
"""


@pytest.mark.slow
class TestDeterminism:
    def _run(self, tmp_path, name: str, *extra: str) -> tuple[int, bytes]:
        path = write_workspace(tmp_path, "", body=DESK_SUITE, name="desk.opw")
        report = tmp_path / f"{name}.json"
        with pytest.raises(SystemExit) as exc:
            main(["run", str(path), "--report", str(report), "-C", "-F", *extra])
        return exc.value.code, report.read_bytes()

    def test_runs_are_byte_identical(self, tmp_path):
        code, first = self._run(tmp_path, "first", "--no-cache")
        again, second = self._run(tmp_path, "second", "--no-cache", "--parallel", "-j", "2")
        assert code == again == 0
        assert first == second
        data = json.loads(first)
        assert data["field"] == "q"
        assert [t["status"] for t in data["tasks"]] == ["ok"] * 6
