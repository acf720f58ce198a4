"""Unit tests for operads given by structure constants."""

import math

import pytest

from opalg.exactla import Field, Matrix
from opalg.exceptions import (
    AxiomError,
    DimensionMismatchError,
    TruncationError,
    ValidationError,
    VerificationError,
)
from opalg.operads import (
    Collection,
    adjunction_counit,
    associative,
    builtin,
    check_operad,
    commutative,
    mutate,
    quotient,
    symmetrize,
)

Q = Field(0)


@pytest.fixture(scope="module")
def com():
    return commutative(Q, 4)


@pytest.fixture(scope="module")
def ass():
    return associative(Q, 4)


class TestCollection:
    def test_reduced(self):
        with pytest.raises(ValidationError):
            Collection(Q, {0: [0]})

    def test_regular_single(self):
        v = Collection.single(Q, 3, [0], action="regular")
        assert v.dim(3) == 6
        assert v.symmetric

    def test_unknown_action(self):
        with pytest.raises(ValidationError):
            Collection.single(Q, 2, [0], action="cyclic")

    def test_differential_must_raise_degree(self):
        d = Matrix.from_dense(Q, [[0, 0], [1, 0]])
        with pytest.raises(ValidationError):
            Collection(Q, {2: [0, 0]}, {2: d}).validate()

    def test_component_is_graded(self):
        d = Matrix.from_dense(Q, [[0, 0], [1, 0]])
        v = Collection.single(Q, 2, [-1, 0], d, "trivial", ["u", "v"])
        v.validate()
        comp = v.component(2)
        assert comp.support == [-1, 0]
        assert comp.basis_labels(-1) == ("u",)

    def test_inhomogeneous_vector(self):
        v = Collection.single(Q, 2, [-1, 0])
        with pytest.raises(ValidationError):
            v.vector_degree(2, {0: Q(1), 1: Q(1)})


class TestBuiltinOperads:
    def test_com_dimensions(self, com):
        assert com.dims() == {1: 1, 2: 1, 3: 1, 4: 1}

    def test_ass_dimensions(self, ass):
        assert ass.dims() == {n: math.factorial(n) for n in range(1, 5)}

    def test_lie_dimensions(self):
        lie = builtin("Lie", Q, 4)
        assert lie.dims() == {n: math.factorial(n - 1) for n in range(1, 5)}

    def test_com_satisfies_axioms(self, com):
        cert = check_operad(com)
        assert cert.passed
        assert {"unit", "associativity", "equivariance", "chain-map"} <= set(cert.checks)
        assert cert.bounds["max_arity"] == 4

    def test_ass_satisfies_axioms(self, ass):
        assert check_operad(ass, 4).passed

    def test_unknown_builtin(self):
        with pytest.raises(ValidationError):
            builtin("Pois", Q)

    def test_splitting_attached_when_possible(self):
        assert builtin("Com", Q, 3).splitting is not None
        assert builtin("Com", Field(2), 3).splitting is None
        assert builtin("ass", Field(2), 3).splitting.name == "canonical"

    def test_symmetrized_com_is_ass(self, com):
        assert symmetrize(com.asymmetric()).dims() == associative(Q, 4).dims()


class TestCompositions:
    def test_gamma(self, com):
        arity, vec = com.gamma(2, {0: Q(1)}, [(2, {0: Q(1)}), (1, {0: Q(1)})])
        assert arity == 3
        assert vec == {0: Q(1)}

    def test_gamma_input_count(self, com):
        with pytest.raises(DimensionMismatchError, match="gamma needs 2 inputs"):
            com.gamma(2, {0: Q(1)}, [(1, {0: Q(1)})])

    def test_arity_bound(self):
        with pytest.raises(TruncationError):
            commutative(Q, 3).compose_basis(3, 1, 2, 0, 0)

    def test_slot_range(self, com):
        with pytest.raises(ValidationError):
            com.compose_basis(2, 3, 1, 0, 0)

    def test_evaluate_respects_symmetry(self, com, ass):
        assert com.evaluate(("mu2", (2, 1))) == com.evaluate(("mu2", (1, 2)))
        a = ass.evaluate(("mu2", (1, 2)))
        b = ass.evaluate(("mu2", (2, 1)))
        assert a != b
        assert len(a[1]) == len(b[1]) == 1

    def test_evaluate_nested(self, ass):
        n, vec = ass.evaluate(("mu2", (("mu2", (1, 2)), 3)))
        assert n == 3
        assert vec == ass.evaluate(("mu3", (1, 2, 3)))[1]

    def test_planar_evaluation_keeps_order(self, ass):
        with pytest.raises(ValidationError):
            ass.asymmetric().evaluate(("mu2", (2, 1)))

    def test_variables_must_be_distinct(self, com):
        with pytest.raises(ValidationError):
            com.evaluate(("mu2", (1, 1)))

    def test_unknown_symbol(self, com):
        with pytest.raises(ValidationError):
            com.symbol("nu2")

    def test_truncated(self, ass):
        assert ass.truncated(3).dims() == {1: 1, 2: 2, 3: 6}


class TestNegativeControls:
    def test_mutated_constant_fails(self, com):
        broken = mutate(com, 2, 1, 2, 0, 0, {0: 2})
        with pytest.raises(AxiomError) as exc:
            check_operad(broken)
        assert exc.value.triple is not None
        assert exc.value.error_code == "AXIOM_FAILED"


class TestMorphismsAndQuotients:
    def test_adjunction_counit(self):
        pi = adjunction_counit(commutative(Q, 3))
        assert pi.check().passed
        assert pi.maps[3].cols == 6

    def test_ass_modulo_commutator_is_com(self, ass):
        q = quotient(ass, [(2, {0: 1, 1: -1})], name="Ass/[,]")
        assert q.dims() == {1: 1, 2: 1, 3: 1, 4: 1}
        assert check_operad(q).passed
        assert q.reduce(2, {1: Q(1)}) == q.reduce(2, {0: Q(1)})

    def test_quotient_by_unit_rejected(self, com):
        with pytest.raises(VerificationError):
            quotient(com, [(1, {0: 1})])
