"""Unit tests for cochain complexes, chain maps and homology."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opalg.complexes import (
    ChainMap,
    Complex,
    DegreeWindow,
    betti_numbers,
    chom,
    cone,
    direct_sum,
    euler_characteristic,
    find_homotopy,
    homology,
    homology_in_degree,
    induced_homology_map,
    is_acyclic,
    is_quasi_iso,
    shift,
    subcomplex,
    symmetry_map,
    tensor,
)
from opalg.exactla import Field, Matrix
from opalg.exceptions import ChainComplexError, ChainMapError, DimensionMismatchError, ValidationError

Q = Field(0)


@pytest.fixture
def line():
    """k -> k^2 with H^0 = 0 and H^1 = 1."""
    return Complex.from_matrices(Q, {0: 1, 1: 2}, {0: [[1], [0]]})


@pytest.fixture
def contractible():
    return Complex.two_term(Q, 0)


def two_degree_complexes():
    shape = st.tuples(st.integers(1, 3), st.integers(1, 3))
    return shape.flatmap(
        lambda ab: st.lists(
            st.lists(st.integers(-2, 2), min_size=ab[0], max_size=ab[0]), min_size=ab[1], max_size=ab[1]
        ).map(lambda data: Complex(Q, {0: ab[0], 1: ab[1]}, {0: Matrix.from_dense(Q, data)}))
    )


class TestDegreeWindow:
    def test_trusted_excludes_edges(self):
        w = DegreeWindow(-2, 2)
        assert w.trusted == (-1, 1)
        assert list(w.trusted_degrees()) == [-1, 0, 1]
        assert list(w.degrees()) == [-2, -1, 0, 1, 2]

    def test_narrow_window_has_nothing_trusted(self):
        w = DegreeWindow(0, 1)
        assert w.trusted is None
        assert list(w.trusted_degrees()) == []

    def test_empty_window_rejected(self):
        with pytest.raises(ValidationError):
            DegreeWindow(3, 1)

    def test_covering(self, line):
        w = DegreeWindow.covering(line)
        assert w == DegreeWindow(-1, 2)
        assert set(line.support) <= set(w.trusted_degrees())


class TestComplex:
    def test_d_squared_must_vanish(self):
        d0 = Matrix.identity(Q, 1)
        with pytest.raises(ChainComplexError):
            Complex(Q, {0: 1, 1: 1, 2: 1}, {0: d0, 1: d0})

    def test_wrong_shape_rejected(self):
        with pytest.raises(ChainComplexError):
            Complex(Q, {0: 1, 1: 2}, {0: Matrix.identity(Q, 1)})

    def test_label_count_must_match(self):
        with pytest.raises(DimensionMismatchError):
            Complex(Q, {0: 2}, labels={0: ["a"]})

    def test_zero_dimensions_dropped(self):
        x = Complex(Q, {0: 0, 1: 1})
        assert x.support == [1]
        assert x.d(0).rows == 1 and x.d(0).cols == 0

    def test_labels_and_index(self):
        x = Complex.point(Q, 2, label="x", weight=1)
        assert x.basis_labels(2) == ("x",)
        assert x.label_index(2, "x") == 0
        assert x.weights(2) == (1,)

    def test_restrict_weights_drops_high_part(self):
        x = Complex(Q, {0: 1, 1: 1}, {0: Matrix.identity(Q, 1)}, weights={0: [1], 1: [3]})
        low = x.restrict_weights(2)
        assert low.support == [0]
        assert betti_numbers(low, DegreeWindow(-1, 1)) == {-1: 0, 0: 1, 1: 0}


class TestChainMap:
    def test_non_commuting_map_rejected(self, contractible):
        pt = Complex.point(Q, 0)
        f = ChainMap.from_columns(pt, contractible, {0: [{0: 1}]})
        assert not f.is_chain_map()
        with pytest.raises(ChainMapError):
            f.check()

    def test_component_shape_checked(self, line):
        with pytest.raises(DimensionMismatchError):
            ChainMap(line, line, {0: Matrix.identity(Q, 2)})

    def test_identity_composes(self, line):
        idx = ChainMap.identity(line)
        assert idx.compose(idx) == idx
        assert (idx - idx).is_zero()
        assert idx.scaled(2) == idx + idx

    def test_ranks_and_injectivity(self, line):
        idx = ChainMap.identity(line)
        assert idx.ranks() == {0: 1, 1: 2}
        assert idx.is_injective()
        assert idx.is_surjective()
        assert not ChainMap.zero(line, line).is_surjective()


class TestConstructions:
    def test_cone_of_identity_is_acyclic(self, line):
        c = cone(ChainMap.identity(line))
        assert is_acyclic(c, DegreeWindow.covering(c).degrees())

    def test_cone_needs_degree_zero(self, line):
        with pytest.raises(ChainMapError):
            cone(ChainMap.zero(line, line, 1))

    def test_direct_sum_adds_betti(self, line):
        w = DegreeWindow(-1, 2)
        total = betti_numbers(direct_sum(line, line), w)
        assert total[1] == 2
        assert total[0] == 0

    def test_shift_moves_homology(self, line):
        shifted = shift(line, 1)
        assert betti_numbers(shifted, DegreeWindow(-1, 1))[0] == 1

    def test_tensor_with_contractible_is_acyclic(self, line, contractible):
        t = tensor(line, contractible)
        assert is_acyclic(t, DegreeWindow.covering(t).degrees())

    def test_tensor_of_points(self):
        t = tensor(Complex.point(Q, 1), Complex.point(Q, -3))
        assert t.support == [-2]

    def test_symmetry_map_commutes_with_d(self, contractible):
        y = shift(contractible, 1)
        s = symmetry_map(contractible, y)
        assert s.is_chain_map()

    def test_hom_into_contractible_is_acyclic(self, line, contractible):
        h = chom(line, contractible)
        assert is_acyclic(h, DegreeWindow.covering(h).degrees())

    def test_subcomplex_must_be_closed(self, contractible):
        with pytest.raises(ChainComplexError):
            subcomplex(contractible, {0: [{0: Q(1)}]})
        sub, inc = subcomplex(contractible, {1: [{0: Q(1)}]})
        assert sub.support == [1]
        assert inc.is_chain_map()


class TestHomology:
    def test_betti_numbers(self, line):
        assert betti_numbers(line, DegreeWindow(-1, 2)) == {-1: 0, 0: 0, 1: 1, 2: 0}

    def test_coordinates_of_representative(self, line):
        h1 = homology_in_degree(line, 1)
        rep = h1.representatives[0]
        assert h1.coordinates(rep) == {0: Q(1)}
        assert h1.coordinates({0: Q(1)}) == {}

    def test_non_cycle_has_no_coordinates(self):
        x = Complex.two_term(Q, 0)
        with pytest.raises(ChainComplexError):
            homology_in_degree(x, 0).coordinates({0: Q(1)})

    def test_trusted_weight_discards_high_classes(self):
        x = Complex.point(Q, 0, weight=5)
        w = DegreeWindow(-1, 1)
        assert betti_numbers(x, w)[0] == 1
        assert betti_numbers(x, w, trusted_weight=3)[0] == 0

    def test_euler_characteristic_matches_betti(self, line):
        w = DegreeWindow(-1, 2)
        betti = betti_numbers(line, w)
        assert euler_characteristic(line) == sum((-1) ** (n % 2) * b for n, b in betti.items()) == -1

    def test_induced_map_of_identity(self, line):
        w = DegreeWindow(-1, 2)
        h = homology(line, w)
        mats = induced_homology_map(ChainMap.identity(line), h, h)
        assert mats[1] == Matrix.identity(Q, 1)


class TestQuasiIsomorphism:
    def test_identity_is_quasi_iso(self, line):
        cert = is_quasi_iso(ChainMap.identity(line), DegreeWindow(-2, 3))
        assert cert
        assert cert.trusted == (-1, 2)
        assert not cert.vacuous
        assert cert.to_dict()["failing_degrees"] == []

    def test_zero_map_fails_where_homology_lives(self, line):
        cert = is_quasi_iso(ChainMap.zero(line, line), DegreeWindow(-2, 3))
        assert not cert
        assert cert.failing_degrees

    def test_narrow_window_is_vacuous(self, line):
        cert = is_quasi_iso(ChainMap.zero(line, line), DegreeWindow(0, 1))
        assert cert.vacuous
        assert cert.to_dict()["trusted_degrees"] is None

    def test_contraction_found(self, contractible):
        idx = ChainMap.identity(contractible)
        h = find_homotopy(idx, ChainMap.zero(contractible, contractible))
        assert h is not None
        assert h.degree_shift == -1
        assert h.boundary() == idx

    def test_no_homotopy_on_a_point(self):
        pt = Complex.point(Q, 0)
        assert find_homotopy(ChainMap.identity(pt), ChainMap.zero(pt, pt)) is None

    @settings(max_examples=40, deadline=None)
    @given(two_degree_complexes())
    def test_euler_characteristic_property(self, x):
        w = DegreeWindow(-1, 2)
        betti = betti_numbers(x, w)
        assert sum((-1) ** (n % 2) * b for n, b in betti.items()) == euler_characteristic(x)

    @settings(max_examples=40, deadline=None)
    @given(two_degree_complexes())
    def test_cone_of_identity_property(self, x):
        assert is_quasi_iso(ChainMap.identity(x), DegreeWindow(-2, 3))
        assert is_acyclic(cone(ChainMap.identity(x)), range(-2, 3))
