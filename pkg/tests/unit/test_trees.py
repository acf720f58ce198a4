"""Unit tests for rooted trees and n-trees."""

import pytest

from opalg.exceptions import ValidationError
from opalg.symmetry import Permutation
from opalg.trees import (
    NTree,
    Tree,
    canonicalize,
    enumerate_ntrees,
    enumerate_shapes,
    graft,
    graft_at,
    set_partitions,
)


class TestTree:
    def test_from_edges(self):
        t = Tree.from_edges(["r", "a", "b"], {"a": "r", "b": "r"})
        assert t.root == 0
        assert t.children(0) == [1, 2]
        assert t.terminal_vertices() == [1, 2]

    def test_two_roots_rejected(self):
        with pytest.raises(ValidationError):
            Tree.from_edges([0, 1, 2], {1: 0})

    def test_cycle_rejected(self):
        with pytest.raises(ValidationError):
            Tree.from_edges([0, 1, 2], {1: 2, 2: 1})

    def test_unknown_vertex_rejected(self):
        with pytest.raises(ValidationError):
            Tree.from_edges([0, 1], {1: 5})

    def test_canonicalize_identifies_isomorphic_trees(self):
        a = Tree.from_edges([0, 1, 2, 3], {1: 0, 2: 0, 3: 1})
        b = Tree.from_edges([0, 1, 2, 3], {1: 0, 2: 0, 3: 2})
        assert a != b
        assert canonicalize(a) == canonicalize(b)


class TestNTree:
    def test_children_sorted_by_least_leaf(self):
        assert NTree(((2, 3), 1)).code == (1, (2, 3))

    def test_leaves_must_be_numbered(self):
        with pytest.raises(ValidationError):
            NTree((1, 3))

    def test_trivial_and_corolla(self):
        assert NTree.trivial().n == 1
        assert NTree.corolla(3).code == (1, 2, 3)

    def test_from_parent_map(self):
        t = NTree.from_parent_map("racb", {"a": "r", "b": "r", "c": "a"}, {"b": 1, "c": 2})
        assert t.code == (1, (2,))
        shape = t.summary()
        assert shape.out_degrees == (2, 1)
        assert shape.terminal_count == 2
        assert shape.internal_count == 2

    def test_unnumbered_terminal(self):
        t = NTree.from_parent_map("rab", {"a": "r", "b": "r"}, {"a": 1})
        assert t.code == (1, ())
        assert t.irr_count == 1
        assert t.n == 1

    def test_numbering_must_hit_terminals(self):
        with pytest.raises(ValidationError):
            NTree.from_parent_map("ra", {"a": "r"}, {"r": 1})

    def test_sigma_act(self):
        t = NTree((1, (2, 3)))
        assert t * Permutation.transposition(3, 1, 3) == NTree(((1, 2), 3))
        assert NTree.corolla(3) * Permutation((2, 3, 1)) == NTree.corolla(3)

    def test_sigma_act_size_checked(self):
        with pytest.raises(ValidationError):
            NTree.corolla(2) * Permutation.identity(3)


class TestGrafting:
    def test_graft(self):
        c2 = NTree.corolla(2)
        assert graft(c2, [c2, NTree.trivial()]) == NTree(((1, 2), 3))

    def test_graft_at(self):
        c2 = NTree.corolla(2)
        assert graft_at(c2, 2, c2) == NTree((1, (2, 3)))

    def test_graft_trivial_is_unit(self):
        t = NTree((1, (2, 3)))
        assert graft(t, [NTree.trivial()] * 3) == t
        assert graft(NTree.trivial(), [t]) == t

    def test_graft_arity_checked(self):
        with pytest.raises(ValidationError):
            graft(NTree.corolla(2), [NTree.trivial()])
        with pytest.raises(ValidationError):
            graft_at(NTree.corolla(2), 3, NTree.trivial())


class TestEnumeration:
    @pytest.mark.parametrize("n,expected", [(1, 1), (2, 1), (3, 3), (4, 15)])
    def test_binary_trees(self, n, expected):
        assert len(enumerate_ntrees(n, max(n - 1, 0))) == expected

    def test_mixed_degrees(self):
        assert len(enumerate_ntrees(3, 2, out_degrees=(2, 3))) == 4

    def test_shapes_forget_numbering(self):
        assert len(enumerate_shapes(4, 3)) == 2

    def test_budget_limits_size(self):
        assert enumerate_ntrees(3, 1) == []

    def test_set_partitions(self):
        parts = set_partitions([1, 2, 3], 2)
        assert sorted(parts) == [[(1,), (2, 3)], [(1, 2), (3,)], [(1, 3), (2,)]]
        assert set_partitions([1, 2], 3) == []
