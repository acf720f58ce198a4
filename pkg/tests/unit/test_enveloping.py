"""Unit tests for enveloping algebras, their modules and derived tensor products."""

import pytest

from opalg.algebras import AlgebraMap, free_algebra, free_presentation, realize
from opalg.complexes import ChainMap, Complex, DegreeWindow
from opalg.enveloping import (
    EnvelopingAlgebra,
    EnvelopingMap,
    ModuleGenerator,
    SemifreeModule,
    base_change_module,
    check_coequalizer,
    check_prefix_colimit,
    derived_tensor,
    enveloping,
    env_of_attached_operad,
    free_module,
    graded_formula_dims,
    regular_module,
    restrict_module,
    semifree_resolve,
    trivial_module,
)
from opalg.exactla import Field
from opalg.exceptions import PresentationError, TruncationError, ValidationError
from opalg.free_operads import attach_cell_operad
from opalg.operads import associative, commutative

Q = Field(0)


@pytest.fixture(scope="module")
def com():
    return commutative(Q, 5)


@pytest.fixture(scope="module")
def ass():
    return associative(Q, 5)


@pytest.fixture
def polynomial_ring(com):
    """U(Com, F(x)) truncated at weight 2."""
    return enveloping(free_presentation(com, [("x", 0)], 2))


class TestEnvelopingAlgebra:
    def test_com_on_one_generator(self, com):
        u = enveloping(free_presentation(com, [("x", 0)], 4))
        assert u.weight_dims() == {0: 1, 1: 1, 2: 1, 3: 1, 4: 1}

    def test_ass_on_one_generator(self, ass):
        u = enveloping(free_presentation(ass, [("x", 0)], 4))
        assert u.weight_dims() == {0: 1, 1: 2, 2: 3, 3: 4, 4: 5}

    @pytest.mark.parametrize("gens", [[("x", 0)], [("x", 0), ("y", 1)], [("x", -1), ("y", 0)]])
    def test_graded_formula_agrees(self, com, ass, gens):
        for o in (com, ass):
            p = free_presentation(o, gens, 3)
            assert graded_formula_dims(p) == EnvelopingAlgebra(p).weight_dims()

    def test_graded_formula_needs_free_presentation(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_relation(p.product("mu2", "x", "x"))
        with pytest.raises(ValidationError):
            graded_formula_dims(p)

    def test_relations_enter_hole_linearly(self, com):
        p = free_presentation(com, [("x", 0)], 4)
        p.add_relation(p.product("mu2", "x", "x"))
        u = enveloping(p)
        assert u.weight_dims() == {0: 1, 1: 1, 2: 0, 3: 0, 4: 0}

    def test_unit_is_the_hole(self, polynomial_ring):
        u = polynomial_ring
        assert u.render(u.one) == "+1/1 1"
        x = u.left_multiplier("mu2", "x")
        assert u.multiply(u.one, x) == x == u.multiply(x, u.one)

    def test_product_plugs_into_hole(self, polynomial_ring):
        u = polynomial_ring
        x = u.left_multiplier("mu2", "x")
        assert u.multiply(x, x) == u.left_multiplier("mu3", "x", "x")

    def test_opposite(self, ass):
        u = EnvelopingAlgebra(free_presentation(ass, [("x", 0)], 3))
        left = u.left_multiplier("mu2", "x")
        right = u.element(("mu2", ("_", "x")))
        op = u.opposite()
        assert op.multiply(left, right) == u.multiply(right, left)
        assert op.opposite() is u

    def test_element_needs_one_hole(self, polynomial_ring):
        with pytest.raises(ValidationError):
            polynomial_ring.element(("mu2", ("x", "x")))

    def test_differential_and_filtration(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_generator("y", -1, p.product("mu2", "x", "x"))
        u = enveloping(p)
        assert u.check_filtration().passed
        dy = u.d(u.left_multiplier("mu2", "y"))
        assert dy == u.left_multiplier("mu3", "x", "x")

    def test_arity_needed(self):
        with pytest.raises(TruncationError):
            EnvelopingAlgebra(free_presentation(commutative(Q, 3), [("x", 0)], 3))

    def test_weight_zero_generator_rejected(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_generator("z", 0, weight=0)
        with pytest.raises(PresentationError):
            EnvelopingAlgebra(p)

    def test_threaded_build_matches(self, com):
        p = free_presentation(com, [("x", 0), ("y", -1)], 3)
        serial = EnvelopingAlgebra(p)
        threaded = EnvelopingAlgebra(p, workers=4)
        assert serial.basis == threaded.basis
        assert all(serial.complex.d(n) == threaded.complex.d(n) for n in serial.complex.support)


class TestEnvelopingMaps:
    def test_quotient_map(self, com):
        src = free_presentation(com, [("x", 0)], 3)
        tgt = src.copy("D")
        tgt.add_relation(tgt.product("mu2", "x", "x"))
        a, b = realize(src), realize(tgt)
        f = AlgebraMap(a, b, {"x": b.generator("x")}, name="q")
        phi = EnvelopingMap.from_algebra_map(f, EnvelopingAlgebra(src), EnvelopingAlgebra(tgt))
        assert phi.chain_map().is_surjective()
        assert phi.check_multiplicative() > 0

    def test_presentation_mismatch(self, com):
        a = free_algebra(com, [("x", 0)], 3)
        u = EnvelopingAlgebra(free_presentation(com, [("y", 0)], 3))
        f = AlgebraMap(a, a, {"x": a.generator("x")})
        with pytest.raises(ValidationError):
            EnvelopingMap.from_algebra_map(f, u, u)

    def test_prefix_colimit(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_generator("y", -1, p.product("mu2", "x", "x"))
        cert = check_prefix_colimit(p)
        assert cert.passed
        assert cert.checks["prefix-injective"] == 2

    def test_coequalizer(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_relation(p.product("mu2", "x", "x"))
        assert check_coequalizer(p).passed

    def test_quasi_iso_of_contractible_extension(self, com):
        small = free_presentation(com, [("x", 0)], 2)
        big = free_presentation(com, [("x", 0), ("v", 0)], 2)
        big.add_generator("u", -1, big.generator("v"))
        phi = EnvelopingMap.inclusion(EnvelopingAlgebra(small), EnvelopingAlgebra(big))
        assert phi.is_quasi_iso(DegreeWindow(-2, 0))


class TestModules:
    def test_trivial_module(self, polynomial_ring):
        k = trivial_module(polynomial_ring)
        assert k.check().passed
        assert k.complex.total_dim == 1

    def test_regular_module(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        u = EnvelopingAlgebra(p)
        m = regular_module(u, realize(p))
        cert = m.check()
        assert cert.passed
        assert cert.checks["associativity"] > 0

    def test_free_module(self, polynomial_ring):
        f = free_module(polynomial_ring, [0, -1])
        assert f.rank == 2
        assert f.complex.total_dim == 2 * polynomial_ring.complex.total_dim
        assert f.check().passed

    def test_semifree_generator_checked(self, polynomial_ring):
        u = polynomial_ring
        e0 = ModuleGenerator("e0", 0)
        bad = ModuleGenerator("e1", 0, 0, {(u.unit_monomial, 0): Q(1)})
        with pytest.raises(PresentationError):
            SemifreeModule(u, [e0, bad])

    def test_resolve_trivial_module(self, polynomial_ring):
        res = semifree_resolve(trivial_module(polynomial_ring))
        assert res.complete
        assert res.certificate.passed
        assert res.stages == [[0], [-1]]
        assert res.module.generator_log()[1]["d"].endswith(".e0")

    def test_resolve_bad_mode(self, polynomial_ring):
        with pytest.raises(ValidationError):
            semifree_resolve(trivial_module(polynomial_ring), mode="greedy")


class TestDerivedTensor:
    @pytest.mark.parametrize("side", ["right", "left"])
    def test_tor_of_ground_field(self, polynomial_ring, side):
        u = polynomial_ring
        right, left = trivial_module(u.opposite()), trivial_module(u)
        tor = derived_tensor(right, left, DegreeWindow(-2, 0), resolve=side)
        assert tor.betti == {-2: 0, -1: 1, 0: 1}

    def test_sides_checked(self, polynomial_ring):
        k = trivial_module(polynomial_ring)
        with pytest.raises(ValidationError):
            derived_tensor(k, k, DegreeWindow(-1, 0))

    def test_unknown_side(self, polynomial_ring):
        u = polynomial_ring
        with pytest.raises(ValidationError):
            derived_tensor(trivial_module(u.opposite()), trivial_module(u), DegreeWindow(-1, 0), resolve="both")


class TestBaseChange:
    @pytest.fixture
    def inclusion(self, com):
        small = EnvelopingAlgebra(free_presentation(com, [("x", 0)], 2))
        big = EnvelopingAlgebra(free_presentation(com, [("x", 0), ("y", 0)], 2))
        return EnvelopingMap.inclusion(small, big)

    def test_direct_image(self, inclusion):
        k = trivial_module(inclusion.target)
        restricted = base_change_module(inclusion, k, "direct")
        assert restricted.algebra is inclusion.source
        assert restricted.check().passed

    def test_restrict_needs_target_module(self, inclusion):
        with pytest.raises(ValidationError):
            restrict_module(inclusion, trivial_module(inclusion.source))

    def test_inverse_image_resolves_first(self, inclusion):
        pushed = base_change_module(inclusion, trivial_module(inclusion.source))
        assert pushed.algebra is inclusion.target
        assert [g.degree for g in pushed.generators] == [0, -1]

    def test_unknown_direction(self, inclusion):
        with pytest.raises(ValidationError):
            base_change_module(inclusion, trivial_module(inclusion.source), "sideways")


@pytest.mark.slow
class TestCellComparison:
    def test_killed_product(self):
        base = commutative(Q, 3)
        m = Complex.point(Q, 0)
        alpha = ChainMap.from_columns(m, base.component(2), {0: [{0: Q(1)}]})
        attached = attach_cell_operad(base, m, 2, alpha, ["t"])
        p = free_presentation(attached, [("x", 0)], 2)
        result = env_of_attached_operad(attached, p)
        assert result.certificate.passed
        assert result.extension.weight_dims() == result.enveloping.weight_dims()
