"""Unit tests for modules of differentials, derivations and the cotangent complex."""

import pytest
from hypothesis import given, settings

from opalg.algebras import AlgebraMap, free_algebra, free_presentation, realize
from opalg.complexes import DegreeWindow, betti_numbers
from opalg.differentials import (
    DerivationComplex,
    HomComplex,
    adjunction_check,
    cohomology,
    cotangent,
    cotangent_invariance,
    omega,
    relative_ses,
)
from opalg.enveloping import EnvelopingAlgebra, regular_module, trivial_module
from opalg.exactla import Field
from opalg.exceptions import ValidationError
from opalg.operads import commutative

from tests.test_helpers import cell_presentations

Q = Field(0)
COM = commutative(Q, 5)


@pytest.fixture(scope="module")
def com():
    return COM


@pytest.fixture
def koszul(com):
    """F_Com(x, y; dy = x^2) with y in degree -1."""
    p = free_presentation(com, [("x", 0)], 3, name="K")
    p.add_generator("y", -1, p.product("mu2", "x", "x"))
    return p


@pytest.fixture
def dual_numbers(com):
    p = free_presentation(com, [("x", 0)], 4, name="D")
    p.add_relation(p.product("mu2", "x", "x"))
    return realize(p)


class TestOmega:
    def test_generators(self, koszul):
        om = omega(koszul)
        assert [g["name"] for g in om.generator_log()] == ["dx", "dy"]
        assert om.module.rank == 2

    def test_differential_of_dy(self, koszul):
        om = omega(koszul)
        x_times = om.algebra.left_multiplier("mu2", "x")
        assert om.module.generators[1].differential == {(w, 0): 2 * c for w, c in x_times.items()}
        assert om.module.generators[0].differential == {}

    def test_module_laws(self, koszul):
        assert omega(koszul).module.check().passed

    def test_relative_to_prefix(self, koszul):
        om = omega(koszul, 1)
        assert [g["name"] for g in om.generator_log()] == ["dy"]
        assert om.module.generators[0].differential == {}

    def test_prefix_by_presentation(self, koszul):
        assert omega(koszul, koszul.prefix(1)).prefix == 1

    def test_non_prefix_rejected(self, com, koszul):
        with pytest.raises(ValidationError):
            omega(koszul, free_presentation(com, [("y", 0)], 3))

    def test_relations_rejected(self, dual_numbers):
        with pytest.raises(ValidationError):
            omega(dual_numbers.presentation)

    def test_universal_derivation(self, koszul):
        om = omega(koszul)
        xx = koszul.product("mu2", "x", "x")
        assert om.universal(xx) == om.module.generators[1].differential


class TestDerivations:
    def test_adjunction(self, koszul):
        u = EnvelopingAlgebra(koszul)
        m = regular_module(u, realize(koszul))
        cert = adjunction_check(koszul, None, m)
        assert cert.passed
        assert cert.checks["inverse"] == 2
        assert cert.checks["universal-derivation"] > 0

    def test_relative_adjunction(self, koszul):
        u = EnvelopingAlgebra(koszul)
        assert adjunction_check(koszul, 1, trivial_module(u)).passed

    def test_trivial_coefficients(self, koszul):
        u = EnvelopingAlgebra(koszul)
        der = DerivationComplex(koszul, None, trivial_module(u))
        assert der.complex.dim(0) == 1
        assert der.complex.dim(1) == 1

    def test_boundary_keeps_every_generator(self, com):
        p = free_presentation(com, [("x", 0), ("u", 0)], 2, name="B")
        p.add_generator("v", -1, p.generator("u"))
        a = realize(p)
        der = DerivationComplex(p, None, regular_module(EnvelopingAlgebra(p), a))
        (u,) = a.vector(a.generator("u"))[1]
        (v,) = a.vector(a.generator("v"))[1]
        # phi(u) = v in degree -1: D phi = d(v) on u and phi(dv) on v
        d = der.boundary(-1, {(1, v): Q(1)})
        assert d == {(1, u): 1, (2, v): 1}
        assert len(der.vector(0, d)) == 2

    @settings(max_examples=25, deadline=None)
    @given(cell_presentations(COM))
    def test_differential_squares_to_zero(self, p):
        u = EnvelopingAlgebra(p)
        m = regular_module(u, realize(p))
        one = Q(1)
        for x in (DerivationComplex(p, None, m), HomComplex(omega(p, u=u).module, m)):
            for n, cs in x.basis.items():
                for c in cs:
                    assert not any(x.boundary(n + 1, x.boundary(n, {c: one})).values())

    def test_hom_needs_same_algebra(self, com, koszul):
        u = EnvelopingAlgebra(koszul)
        other = EnvelopingAlgebra(free_presentation(com, [("x", 0)], 3))
        with pytest.raises(ValidationError):
            HomComplex(omega(koszul, u=u).module, trivial_module(other))


class TestRelativeSequence:
    def test_ranks_and_exactness(self, koszul):
        ses = relative_ses(koszul, 0, 1)
        assert ses.ranks == (1, 2, 1)
        assert ses.certificate.passed
        assert ses.projection.compose(ses.inclusion).is_zero()

    def test_three_generators(self, com):
        p = free_presentation(com, [("x", 0), ("z", 0)], 2)
        p.add_generator("y", -1, p.product("mu2", "x", "z"))
        ses = relative_ses(p, 1, 2)
        assert ses.ranks == (1, 2, 1)
        assert ses.certificate.passed

    def test_prefix_order(self, koszul):
        with pytest.raises(ValidationError):
            relative_ses(koszul, 2, 1)


class TestCotangent:
    def test_dual_numbers(self, dual_numbers):
        window = DegreeWindow(-1, 0)
        cot = cotangent(dual_numbers, window)
        assert cot.resolution.complete
        assert [g["name"] for g in cot.differentials.generator_log()] == ["dx", "dy1"]
        assert betti_numbers(cot.indecomposables(), window) == {-1: 1, 0: 1}
        assert cot.provenance["complete"]

    def test_free_algebra_is_its_own_resolution(self, com):
        a = free_algebra(com, [("x", 0), ("y", 1)], 3)
        cot = cotangent(a, DegreeWindow(-1, 1))
        assert cot.resolution.killed == []
        assert cot.module.rank == 2

    def test_over_a_base(self, com, dual_numbers):
        base = free_algebra(com, [("x", 0)], 4)
        f = AlgebraMap(base, dual_numbers, {"x": dual_numbers.generator("x")}, name="q")
        cot = cotangent(dual_numbers, DegreeWindow(-1, 0), over=f)
        assert cot.base is not None
        assert cot.differentials.prefix == 1
        names = [g["name"] for g in cot.differentials.generator_log()]
        assert names[0] == "dx_2"
        assert "dx" not in names

    def test_base_must_land_in_algebra(self, com, dual_numbers):
        base = free_algebra(com, [("x", 0)], 4)
        f = AlgebraMap(base, base, {"x": base.generator("x")})
        with pytest.raises(ValidationError):
            cotangent(dual_numbers, DegreeWindow(-1, 0), over=f)

    def test_invariance_on_free_algebra(self, com):
        cert = cotangent_invariance(free_algebra(com, [("x", 0)], 3), DegreeWindow(-1, 0))
        assert cert.passed
        assert cert.checks["resolutions"] == 2

    @pytest.mark.slow
    def test_invariance_on_dual_numbers(self, dual_numbers):
        cert = cotangent_invariance(dual_numbers, DegreeWindow(-2, 0))
        assert cert.passed
        assert cert.bounds["betti"]["minimal"] == {-2: 0, -1: 1, 0: 1}


class TestCohomology:
    def test_dual_numbers(self, dual_numbers):
        window = DegreeWindow(-1, 2)
        h = cohomology(cotangent(dual_numbers, window), window)
        assert h.betti == {-1: 0, 0: 1, 1: 1, 2: 0}
        assert h.derivation_betti == {0: 1, 1: 1, 2: 0}
        assert h.certificate.passed
        assert h.certificate.bounds["compared_degrees"] == [0, 1, 2]

    def test_second_route_differentiates_the_resolution(self, dual_numbers):
        window = DegreeWindow(-1, 2)
        h = cohomology(cotangent(dual_numbers, window), window)
        # Der(P, P) has x -> x^k and y -> x^k y in degree 0, CHom(L, A) only dx -> x
        assert h.derivation_complex.dim(0) > h.complex.dim(0)
        assert h.certificate.notices

    def test_explicit_coefficients(self, dual_numbers):
        window = DegreeWindow(-1, 1)
        cot = cotangent(dual_numbers, window)
        h = cohomology(cot, window, trivial_module(cot.algebra))
        assert h.certificate.passed
        assert h.derivation_betti == h.betti
