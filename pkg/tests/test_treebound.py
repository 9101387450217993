import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polymergas.errors import CapacityError
from polymergas.expansion import ursell, ursell_from_potential
from polymergas.graphs import LabeledTree, enumerate_trees
from polymergas.model import INF, PolymerSpace, hard_core_space, space_from_table, verify_stability
from polymergas.treebound import (
    InterpolationChain, QuadratureError, convex_decomposition_K, cutoff_H0, cutoff_matrix, cutoff_space,
    enumerate_chains, measure_mass, measure_mass_exact, tree_graph_rhs, tree_sum, ursell_tree_bound,
)

from strategies import random_space, spaces


def sym(rng, n, lo=-2.0, hi=2.0):
    V = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    V[iu] = rng.uniform(lo, hi, size=len(iu[0]))
    return V + V.T


def test_chain_basics():
    ch = InterpolationChain((0, 2, 1))
    assert ch.sets() == [frozenset({0}), frozenset({0, 2})]
    assert len(enumerate_chains(4)) == 6
    with pytest.raises(ValueError):
        InterpolationChain((1, 0, 2))
    path = LabeledTree(3, ((0, 1), (1, 2)))
    assert not ch.compatible(path)
    assert InterpolationChain((0, 1, 2)).compatible(path)
    assert InterpolationChain((0, 1, 2)).crossings(path) == [1, 1]


def test_convex_decomposition_examples():
    rng = np.random.default_rng(0)
    V = sym(rng, 4)
    ch = InterpolationChain((0, 3, 1, 2))
    assert convex_decomposition_K(V, ch, np.ones(3)) == pytest.approx(V[np.triu_indices(4, 1)].sum())
    V2 = np.array([[0.0, 1.7], [1.7, 0.0]])
    c2 = InterpolationChain((0, 1))
    assert convex_decomposition_K(V2, c2, [0.3]) == pytest.approx(0.3 * 1.7)
    assert convex_decomposition_K(V2, c2, [0.0]) == 0.0
    # pairs crossing no cut survive at t = 0: here only pairs inside X_l for all l... none for a chain
    assert convex_decomposition_K(V, ch, np.zeros(3)) == pytest.approx(0.0)
    pts = rng.random((5, 3))
    batch = convex_decomposition_K(V, ch, pts)
    assert np.allclose(batch, [convex_decomposition_K(V, ch, p) for p in pts])


@pytest.mark.parametrize("v", [-1.3, 0.0, 0.4, 2.0])
def test_rhs_two_vertices_closed_form(v):
    V = np.array([[0.0, v], [v, 0.0]])
    assert tree_graph_rhs(V) == pytest.approx(math.expm1(-v), abs=1e-14)


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_identity_random(n, seed):
    V = sym(np.random.default_rng(seed), n, -1.0, 1.0)
    assert tree_graph_rhs(V) == pytest.approx(ursell_from_potential(V, "graphs"), abs=1e-8)


def test_identity_five_vertices():
    V = sym(np.random.default_rng(8), 5, -1.0, 1.0)
    assert tree_graph_rhs(V) == pytest.approx(ursell_from_potential(V, "graphs"), abs=1e-8)


def test_identity_rejects_bad_input():
    with pytest.raises(ValueError):
        tree_graph_rhs(np.array([[0.0, INF], [INF, 0.0]]))
    with pytest.raises(ValueError):
        tree_graph_rhs(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(CapacityError):
        tree_graph_rhs(np.zeros((6, 6)))


def test_quadrature_disagreement_is_flagged():
    # very steep integrand: a low order cannot agree with its doubled order
    V = np.array([[0.0, -60.0], [-60.0, 0.0]])
    with pytest.raises(QuadratureError):
        tree_graph_rhs(V, order=2, tol=1e-12)


@pytest.mark.parametrize("n", range(2, 6))
def test_measure_mass_is_one(n):
    for tree in enumerate_trees(n):
        assert measure_mass(tree) == pytest.approx(1.0, abs=1e-10)
        assert measure_mass_exact(tree) == pytest.approx(1.0, abs=1e-12)


def test_crossings_positive_on_compatible_chains():
    for n in range(2, 6):
        for tree in enumerate_trees(n):
            for ch in enumerate_chains(n):
                if ch.compatible(tree):
                    assert min(ch.crossings(tree)) >= 1


def test_tree_sum_methods_agree():
    rng = np.random.default_rng(2)
    for k in range(2, 9):
        W = np.abs(sym(rng, k))
        assert tree_sum(W, "enumerate") == pytest.approx(tree_sum(W, "kirchhoff"), rel=1e-10)
    assert tree_sum(np.ones((6, 6))) == pytest.approx(6 ** 4)


def test_tree_bound_examples():
    s = hard_core_space(1, 0.1).with_stability([0.7])
    assert ursell_tree_bound(s, [0]) == pytest.approx(math.exp(0.7))
    tri = hard_core_space(3, 0.1, [(0, 1), (0, 2), (1, 2)])
    assert ursell_tree_bound(tri, [0, 1, 2]) == 3.0
    assert abs(ursell(tri, [0, 1, 2])) == 2.0
    pair = space_from_table(["a", "b"], [0.1, 0.1], [0.5, 0.5],
                            [["a", "a", "inf"], ["b", "b", "inf"], ["a", "b", -1.0]])
    assert ursell_tree_bound(pair, [0, 1]) == pytest.approx(math.e)
    assert abs(ursell(pair, [0, 1])) == pytest.approx(math.e - 1)


@given(spaces(max_k=4, p_hard=0.3), st.lists(st.integers(0, 3), min_size=1, max_size=6))
@settings(max_examples=80, deadline=None)
def test_tree_bound_dominates_ursell(space, cfg):
    cfg = [c % len(space) for c in cfg]
    assert verify_stability(space, max(2, len(space))).ok
    assert ursell_tree_bound(space, cfg) >= abs(ursell(space, cfg)) * (1 - 1e-12)


def test_tree_bound_without_self_hard_core():
    # attractive self-interaction, stability certified for all multisets up to 6
    V = np.array([[-0.1, -0.2], [-0.2, 0.5]])
    s = PolymerSpace(("a", "b"), [0.1, 0.1], V, [0.5, 0.5])
    assert verify_stability(s, 6).ok
    for k in range(1, 7):
        for cfg in combinations([0, 0, 0, 1, 1, 1], k):
            assert ursell_tree_bound(s, cfg) >= abs(ursell(s, cfg))


def test_cutoff_H0_examples():
    free = PolymerSpace(("a", "b"), [1, 1], [[0, -1.0], [-1.0, 0]], [1, 1])
    assert cutoff_H0(free, [0, 1]) == 0.0
    assert cutoff_H0(hard_core_space(2, 0.1, [(0, 1)]), [0, 1]) == 0.0
    s = space_from_table(["1", "2", "3"], [1, 1, 1], [0, 0, 0],
                         [["1", "2", "inf"], ["1", "3", -2.0], ["2", "3", -3.0]])
    assert cutoff_H0(s, [0, 1, 2]) == 5.0
    with pytest.raises(CapacityError):
        cutoff_H0(hard_core_space(13, 0.1), list(range(13)))


@given(spaces(max_k=4, p_hard=0.5), st.floats(0, 3))
@settings(max_examples=40, deadline=None)
def test_cutoff_is_stable_above_H0(space, extra):
    cfg = list(range(len(space)))
    H = cutoff_H0(space, cfg) + extra
    V = cutoff_matrix(space.potential, H)
    B = space.stability
    for size in range(2, len(cfg) + 1):
        for X in combinations(cfg, size):
            e = V[np.ix_(X, X)][np.triu_indices(size, 1)].sum()
            assert e >= -B[list(X)].sum() - 1e-12


def test_cutoff_limit():
    space = random_space(np.random.default_rng(4), 4, p_hard=0.5)
    cfg = [0, 1, 2, 3]
    exact = ursell(space, cfg)
    errs = [abs(ursell(cutoff_space(space, H), cfg) - exact) for H in (10.0, 20.0, 40.0)]
    assert errs[0] >= errs[1] >= errs[2]
    for H, e in zip((10.0, 20.0, 40.0), errs):
        assert e <= 50 * math.exp(-H)
    with pytest.raises(ValueError):
        cutoff_matrix(space.potential, INF)
