"""Unit tests for free operads, cell attachments and homotopy extensions."""

import pytest

from opalg.complexes import ChainMap, Complex, DegreeWindow, betti_numbers
from opalg.exactla import Field, Matrix, rank
from opalg.exceptions import FieldArithmeticError, VerificationError
from opalg.free_operads import (
    attach_cell_operad,
    attach_equivariant,
    cell_operation,
    free_operad,
    homotopy_extension_operad,
    ideal_is_invariant,
    include_base,
    inclusion_morphism,
    lie,
    lie_to_ass,
)
from opalg.operads import Collection, associative, check_operad, commutative
from opalg.symmetry import Permutation

Q = Field(0)


@pytest.fixture
def contractible_generators():
    """u of degree -1 and v of degree 0 in arity 2 with du = v."""
    d = Matrix.from_dense(Q, [[0, 0], [1, 0]])
    return Collection.single(Q, 2, [-1, 0], d, "trivial", ["u", "v"])


class TestFreeOperad:
    @pytest.mark.parametrize("action,dims", [("trivial", [1, 1, 3]), ("sign", [1, 1, 3]), ("regular", [1, 2, 12])])
    def test_binary_generator(self, action, dims):
        v = Collection.single(Q, 2, [0], None, action, ["m"] if action != "regular" else None)
        o = free_operad(v, 3)
        assert [o.dim(n) for n in (1, 2, 3)] == dims
        assert check_operad(o).passed

    def test_commutative_magma_arity_four(self):
        v = Collection.single(Q, 2, [0], None, "trivial", ["m"])
        assert free_operad(v, 4).dim(4) == 15

    def test_generator_symbols(self, contractible_generators):
        o = free_operad(contractible_generators, 3)
        n, u = o.symbol("u")
        assert n == 2
        _, v = o.symbol("v")
        assert o.d(2, u) == v

    def test_cap_recorded_as_notice(self, contractible_generators):
        o = free_operad(contractible_generators, 3)
        assert o.filtration_cap == 2
        assert any("generator vertices" in note for note in o.notices)


class TestLie:
    def test_axioms(self):
        assert check_operad(lie(Q, 4)).passed

    def test_embeds_into_ass(self):
        lie4, ass4 = lie(Q, 4), associative(Q, 4)
        phi = lie_to_ass(lie4, ass4)
        for n in range(1, 5):
            assert rank(phi.maps[n]) == lie4.dim(n)


class TestCells:
    @pytest.fixture
    def killed_product(self):
        com = commutative(Q, 3)
        m = Complex.point(Q, 0)
        alpha = ChainMap.from_columns(m, com.component(2), {0: [{0: Q(1)}]})
        return attach_cell_operad(com, m, 2, alpha, ["t"])

    def test_attached_cell_dimensions(self, killed_product):
        assert killed_product.dim(2) == 3
        assert check_operad(killed_product).passed

    def test_cell_bounds_the_product(self, killed_product):
        t = cell_operation(killed_product, 0)
        dt = killed_product.d(2, t)
        assert dt
        assert killed_product.collection.vector_degree(2, dt) == 0

    def test_homology_of_arity_two(self, killed_product):
        comp = killed_product.component(2)
        assert betti_numbers(comp, DegreeWindow(-2, 1)) == {-2: 0, -1: 1, 0: 0, 1: 0}

    def test_inclusion(self, killed_product):
        for f in include_base(killed_product).values():
            assert f.is_chain_map()
            assert f.is_injective()
        assert inclusion_morphism(killed_product).check().passed

    def test_cell_twisted_by_permutation(self, killed_product):
        s = Permutation((2, 1))
        assert cell_operation(killed_product, 0, s) == killed_product.act(2, cell_operation(killed_product, 0), s)


class TestEquivariantCells:
    def test_invariant_cell(self):
        com = commutative(Q, 3)
        group = Permutation.all_permutations(2)
        result = attach_equivariant(com, 2, {0: 1}, group, {g: 1 for g in group})
        assert result.dim(2) - com.dim(2) == 1
        assert "e" in result.retraction

    def test_characteristic_divides_group_order(self):
        f2 = Field(2)
        com = commutative(f2, 3)
        group = Permutation.all_permutations(2)
        with pytest.raises(FieldArithmeticError):
            attach_equivariant(com, 2, {0: 1}, group, {g: 1 for g in group})

    def test_character_must_match(self):
        com = commutative(Q, 3)
        group = Permutation.all_permutations(2)
        with pytest.raises(VerificationError):
            attach_equivariant(com, 2, {0: 1}, group, {g: g.sign for g in group})


class TestHomotopyExtension:
    @pytest.fixture
    def extension(self, contractible_generators):
        free = free_operad(contractible_generators, 3)
        h = Matrix.from_columns(Q, 2, [{}, {0: Q(1)}])
        return free, homotopy_extension_operad(free, {}, {2: h})

    def test_contracts_to_unit(self, extension):
        free, ext = extension
        cert = ext.check()
        assert cert.passed
        assert cert.checks["dH+Hd"] == sum(free.dims().values())

    def test_bad_generator_homotopy(self, contractible_generators):
        free = free_operad(contractible_generators, 3)
        with pytest.raises(VerificationError):
            homotopy_extension_operad(free, {}, {2: Matrix.zero(Q, 2, 2)})

    def test_ideal_invariance(self, extension):
        free, ext = extension
        _, u = free.symbol("u")
        _, v = free.symbol("v")
        assert not ideal_is_invariant(ext, [(2, v)])
        assert ideal_is_invariant(ext, [(2, u), (2, v)])
