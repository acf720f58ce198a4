"""Unit tests for presented algebras over operads and their maps."""

import pytest

from opalg.algebras import (
    AlgebraMap,
    AlgebraPresentation,
    Monomial,
    attach_cells,
    check_unit_qi,
    contractible_cells,
    free_algebra,
    free_presentation,
    identity_map,
    inverse_image,
    kill_cycle,
    multisets,
    realize,
)
from opalg.complexes import ChainMap, DegreeWindow, betti_numbers
from opalg.exactla import Field, Matrix
from opalg.exceptions import (
    ChainMapError,
    PresentationError,
    TruncationError,
    ValidationError,
    VerificationError,
)
from opalg.operads import OperadMorphism, adjunction_counit, associative, commutative

Q = Field(0)


@pytest.fixture(scope="module")
def com():
    return commutative(Q, 4)


@pytest.fixture(scope="module")
def ass():
    return associative(Q, 4)


@pytest.fixture
def dual_numbers(com):
    """k[x]/(x^2) with x in degree 0."""
    p = free_presentation(com, [("x", 0)], 4, name="D")
    p.add_relation(p.product("mu2", "x", "x"))
    return p


def test_multisets():
    assert multisets([1, 1], 2, 2) == [(), (0,), (0, 0), (0, 1), (1,), (1, 1)]
    assert multisets([2, 1], 2, 3) == [(), (0,), (1,), (1, 1)]


class TestPresentation:
    def test_duplicate_generator(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        with pytest.raises(PresentationError):
            p.add_generator("x", 1)

    def test_differential_must_be_triangular(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        with pytest.raises(PresentationError, match="triangular"):
            p.add_generator("y", -1, {Monomial((1,), 0): 1})

    def test_wrong_degree_rolls_back(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        with pytest.raises(PresentationError):
            p.add_generator("y", 0, p.product("mu2", "x", "x"))
        assert p.names == ["x"]
        p.add_generator("y", -1, p.product("mu2", "x", "x"))
        assert p.names == ["x", "y"]

    def test_weight_cap_positive(self, com):
        with pytest.raises(ValidationError):
            AlgebraPresentation(com, 0)

    def test_odd_square_vanishes(self, com):
        p = free_presentation(com, [("x", 1)], 3)
        assert p.product("mu2", "x", "x") == {}

    def test_even_square_survives(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        sq = p.product("mu2", "x", "x")
        assert len(sq) == 1
        assert p.degree_of(sq) == 0

    def test_leibniz_on_quadratic_differential(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_generator("y", -1, p.product("mu2", "x", "x"))
        assert p.weight_jump == 1
        assert p.trusted_weight == 2
        xy = p.product("mu2", "x", "y")
        assert p.d(xy) == p.product("mu2", "x", p.product("mu2", "x", "x"))

    def test_unknown_generator(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        with pytest.raises(ValidationError):
            p.generator("z")

    def test_prefix_and_copy(self, dual_numbers):
        assert dual_numbers.prefix(1).relations == []
        copied = dual_numbers.copy(weight_cap=2)
        assert copied.weight_cap == 2
        assert len(copied.relations) == 1

    def test_render_and_log(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_generator("y", -1, p.product("mu2", "x", "x"))
        log = p.generator_log()
        assert log[0] == {"name": "x", "degree": 0, "d": "0"}
        assert log[1]["d"] == "+1/1 mu2(x,x)"


class TestRealization:
    def test_free_com_on_one_generator(self, com):
        a = free_algebra(com, [("x", 0)], 4)
        assert a.weight_dims() == {1: 1, 2: 1, 3: 1, 4: 1}

    def test_free_ass_on_two_generators(self, ass):
        a = free_algebra(ass, [("x", 0), ("y", 0)], 3)
        assert a.weight_dims() == {1: 2, 2: 4, 3: 8}

    def test_free_com_on_two_generators(self, com):
        a = free_algebra(com, [("x", 0), ("y", 0)], 3)
        assert a.weight_dims() == {1: 2, 2: 3, 3: 4}

    def test_odd_generator_in_com(self, com):
        a = free_algebra(com, [("x", 1)], 3)
        assert a.weight_dims() == {1: 1, 2: 0, 3: 0}

    def test_relation(self, dual_numbers):
        a = realize(dual_numbers)
        assert a.weight_dims() == {1: 1, 2: 0, 3: 0, 4: 0}
        assert a.product("mu2", "x", "x") == {}

    def test_differential_and_homology(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_generator("y", -1, p.generator("x"))
        a = realize(p)
        assert a.leibniz_checks > 0
        betti = betti_numbers(a.complex, DegreeWindow(-4, 1), a.trusted_weight)
        assert all(b == 0 for b in betti.values())

    def test_d_squared_detected(self, com):
        p = free_presentation(com, [("x", 0)], 2)
        p.add_generator("y", -1, p.generator("x"))
        p.add_generator("w", -2, p.generator("y"))
        with pytest.raises(PresentationError, match="d\\^2"):
            realize(p)

    def test_cap_needs_arity(self):
        with pytest.raises(TruncationError):
            free_algebra(commutative(Q, 2), [("x", 0)], 3)

    def test_needs_symmetric_operad(self, ass):
        with pytest.raises(ValidationError):
            AlgebraPresentation(ass.asymmetric(), 2)

    def test_parallel_build_matches(self, com):
        p = free_presentation(com, [("x", 0), ("y", 1)], 3)
        serial = realize(p, workers=1)
        threaded = realize(p, workers=4)
        assert serial.basis == threaded.basis
        assert all(serial.complex.d(n) == threaded.complex.d(n) for n in serial.complex.support)

    def test_vector_round_trip(self, com):
        a = free_algebra(com, [("x", 0), ("y", 0)], 3)
        xy = a.product("mu2", "x", "y")
        deg, vec = a.vector(xy)
        assert a.polynomial(deg, vec) == xy


class TestMaps:
    def test_identity(self, com):
        a = free_algebra(com, [("x", 0)], 3)
        chain = identity_map(a).chain_map()
        assert chain == ChainMap.identity(a.complex)

    def test_quotient_map(self, com, dual_numbers):
        src = free_algebra(com, [("x", 0)], 4)
        tgt = realize(dual_numbers)
        f = AlgebraMap(src, tgt, {"x": tgt.generator("x")})
        chain = f.chain_map()
        assert chain.is_surjective()
        assert f.apply(src.product("mu2", "x", "x")) == {}

    def test_relations_respected(self, com, dual_numbers):
        a = realize(dual_numbers)
        assert identity_map(a).respects_relations()

    def test_degree_checked(self, com):
        src = free_algebra(com, [("x", 0)], 2)
        tgt = free_algebra(com, [("y", 1)], 2)
        with pytest.raises(ValidationError):
            AlgebraMap(src, tgt, {"x": tgt.generator("y")})

    def test_non_chain_map(self, com):
        p = free_presentation(com, [("x", 0)], 2)
        p.add_generator("y", -1, p.product("mu2", "x", "x"))
        src = realize(p)
        tgt = free_algebra(com, [("x", 0), ("y", -1)], 2)
        f = AlgebraMap(src, tgt, {"x": tgt.generator("x"), "y": tgt.generator("y")})
        with pytest.raises(ChainMapError):
            f.chain_map()

    def test_compose(self, com, dual_numbers):
        src = free_algebra(com, [("x", 0)], 4)
        tgt = realize(dual_numbers)
        f = AlgebraMap(src, tgt, {"x": tgt.generator("x")})
        g = identity_map(tgt).compose(f)
        assert g.chain_map() == f.chain_map()


class TestCells:
    def test_kill_cycle(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        killed = kill_cycle(p, p.generator("x"))
        assert killed.names == ["x", "T"]
        assert killed.generators[1].degree == -1

    def test_kill_non_cycle(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        p.add_generator("y", -1, p.generator("x"))
        with pytest.raises(PresentationError):
            kill_cycle(p, p.generator("y"))

    def test_attach_contractible_cells(self, com):
        p = free_presentation(com, [("x", 0)], 3)
        a = realize(p)
        m = contractible_cells(Q, -1)
        alpha = ChainMap.zero(m, a.complex)
        b = attach_cells(p, m, alpha)
        assert b.names == ["x", "v", "u"]
        assert b.generators[2].degree == -2
        assert b.generators[2].differential == {m_: -c for m_, c in b.generator("v").items()}


class TestUnitMap:
    def test_identity_operad_map(self, com):
        ident = OperadMorphism(com, com, {n: Matrix.identity(Q, com.dim(n)) for n in range(1, 5)}, "id")
        p = free_presentation(com, [("x", 0)], 3)
        cert = check_unit_qi(ident, p, DegreeWindow(-2, 2))
        assert cert.passed
        assert cert.checks["direct-image"] > 0

    def test_non_quasi_iso_operad_map(self):
        small = commutative(Q, 3)
        pi = adjunction_counit(small)
        p = free_presentation(pi.source, [("x", 0)], 2)
        with pytest.raises(VerificationError):
            check_unit_qi(pi, p, DegreeWindow(-2, 2))

    def test_inverse_image_keeps_generators(self, com, dual_numbers):
        ident = OperadMorphism(com, com, {n: Matrix.identity(Q, com.dim(n)) for n in range(1, 5)}, "id")
        pulled = inverse_image(ident, dual_numbers)
        assert pulled.names == dual_numbers.names
        assert pulled.relations == dual_numbers.relations
        assert realize(pulled).weight_dims() == realize(dual_numbers).weight_dims()

    def test_inverse_image_checks_operad(self, ass, dual_numbers):
        ident = OperadMorphism(ass, ass, {n: Matrix.identity(Q, ass.dim(n)) for n in range(1, 5)}, "id")
        with pytest.raises(ValidationError):
            inverse_image(ident, dual_numbers)
