"""Tree-graph identity for finite pair potentials and the tree-graph bound.

For finite V the connected-graph sum over G_n equals a sum over spanning
trees tau of prod_{E_tau}(-V_ij) times an average of exp(-K) under a
probability measure on interpolation parameters t in [0,1]^{n-1} and
increasing chains X_1 < ... < X_{n-1} with X_1 = {first vertex}.  The
integral over t is done by tensor Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Sequence

import numpy as np

from .errors import CapacityError
from .graphs import LabeledGraph, enumerate_trees, tree_edge_index_arrays, MAX_TREE_VERTICES
from .model import INF, PolymerSpace, kernel_value

MAX_IDENTITY_N = 5
ENUMERATE_TREES_MAX = 7
SUBSET_SCAN_MAX = 12


class QuadratureError(ArithmeticError):
    """Two quadrature orders disagree beyond the requested tolerance."""


@dataclass(frozen=True)
class InterpolationChain:
    """Increasing chain X_i = {order[0], ..., order[i-1]}, i = 1..n-1."""

    order: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("chain order must be a permutation of 0..n-1")
        if self.order[0] != 0:
            raise ValueError("X_1 must be the first vertex")

    @property
    def n(self) -> int:
        return len(self.order)

    def sets(self) -> list[frozenset[int]]:
        return [frozenset(self.order[:i]) for i in range(1, self.n)]

    def crossing_matrix(self) -> np.ndarray:
        """(n-1, pairs) boolean: pair {i,j} crosses X_l."""
        pairs = list(combinations(range(self.n), 2))
        out = np.zeros((self.n - 1, len(pairs)), dtype=bool)
        for l, X in enumerate(self.sets()):
            for p, (i, j) in enumerate(pairs):
                out[l, p] = (i in X) != (j in X)
        return out

    def crossings(self, tree: LabeledGraph) -> list[int]:
        """b_l = number of tree edges crossing X_l."""
        return [sum((i in X) != (j in X) for i, j in tree.edges) for X in self.sets()]

    def compatible(self, tree: LabeledGraph) -> bool:
        """X_l contains exactly l-1 edges of the tree for every l."""
        for l, X in enumerate(self.sets(), start=1):
            if sum(i in X and j in X for i, j in tree.edges) != l - 1:
                return False
        return True


def enumerate_chains(n: int) -> list[InterpolationChain]:
    return [InterpolationChain((0,) + p) for p in permutations(range(1, n))]


def convex_decomposition_K(V: np.ndarray, chain: InterpolationChain, t) -> np.ndarray | float:
    """K(X, t) = sum_{i<j} t_1({i,j})...t_{n-1}({i,j}) V_ij.

    ``t`` may be a single vector of length n-1 or an (m, n-1) array of points.
    """
    n = chain.n
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    pts = t.reshape(-1, n - 1)
    cross = chain.crossing_matrix()
    iu = np.triu_indices(n, 1)
    v = np.asarray(V, dtype=float)[iu]
    if not np.all(np.isfinite(v)):
        raise ValueError("convex decomposition needs a finite potential")
    K = np.zeros(pts.shape[0])
    for p in range(len(v)):
        fac = np.ones(pts.shape[0])
        for l in np.nonzero(cross[:, p])[0]:
            fac = fac * pts[:, l]
        K += fac * v[p]
    return float(K[0]) if single else K


@lru_cache(maxsize=None)
def _gauss_grid(dim: int, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    wm = np.meshgrid(*([w] * dim), indexing="ij")
    wts = np.prod(np.stack([m.reshape(-1) for m in wm], axis=1), axis=1)
    return pts, wts


@lru_cache(maxsize=None)
def _identity_tables(n: int, order: int):
    """Per chain: crossing matrix and (compatible tree ids, weight grids)."""
    pts, wts = _gauss_grid(n - 1, order)
    trees = list(enumerate_trees(n))
    pairs = list(combinations(range(n), 2))
    tree_pairs = np.array([[pairs.index(e) for e in tr.edges] for tr in trees], dtype=np.intp)
    chains = []
    for ch in enumerate_chains(n):
        ids, grids = [], []
        for k, tr in enumerate(trees):
            if not ch.compatible(tr):
                continue
            b = ch.crossings(tr)
            if min(b) < 1:
                raise AssertionError(f"compatible chain {ch.order} with zero crossing for {tr.edges}")
            g = wts.copy()
            for l, bl in enumerate(b):
                if bl > 1:
                    g = g * pts[:, l] ** (bl - 1)
            ids.append(k)
            grids.append(g)
        if ids:
            chains.append((ch, ch.crossing_matrix(), np.array(ids), np.array(grids)))
    return pts, trees, tree_pairs, chains


def _rhs(V: np.ndarray, n: int, order: int) -> float:
    pts, trees, tree_pairs, chains = _identity_tables(n, order)
    iu = np.triu_indices(n, 1)
    v = V[iu]
    coef = np.prod(-v[tree_pairs], axis=1)
    total = 0.0
    for ch, cross, ids, grids in chains:
        K = np.zeros(pts.shape[0])
        for p in range(len(v)):
            if v[p] == 0.0:
                continue
            fac = np.ones(pts.shape[0])
            for l in np.nonzero(cross[:, p])[0]:
                fac = fac * pts[:, l]
            K += fac * v[p]
        total += float(coef[ids] @ (grids @ np.exp(-K)))
    return total


def default_order(n: int) -> int:
    """Gauss points per axis: 24, or 12 at n = 5 where the doubled grid has 24^4 points."""
    return 24 if n <= 4 else 12


def tree_graph_rhs(V, order: int | None = None, tol: float | None = 1e-9) -> float:
    """Right-hand side of the tree-graph identity for a finite symmetric V.

    The result is computed at ``order`` and ``2 * order`` Gauss points per
    axis; a disagreement larger than ``tol`` (absolute, scaled by max(1, |value|))
    raises :class:`QuadratureError`.  ``tol=None`` skips the second order.
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[0]
    if V.shape != (n, n) or not np.array_equal(V, V.T):
        raise ValueError("V must be a symmetric square matrix")
    if not np.all(np.isfinite(V[np.triu_indices(n, 1)])):
        raise ValueError("tree-graph identity needs a finite potential")
    if n > MAX_IDENTITY_N:
        raise CapacityError(f"tree-graph identity capped at n={MAX_IDENTITY_N}")
    if n == 1:
        return 1.0
    order = order or default_order(n)
    val = _rhs(V, n, order)
    if tol is not None:
        check = _rhs(V, n, 2 * order)
        if abs(check - val) > tol * max(1.0, abs(check)):
            raise QuadratureError(f"orders {order} and {2 * order} differ by {abs(check - val):.3e}")
        val = check
    return val


def measure_mass(tree: LabeledGraph, order: int = 24) -> float:
    """Total mass of the interpolation measure attached to a tree (should be 1)."""
    n = tree.n
    if n > MAX_IDENTITY_N:
        raise CapacityError(f"measure capped at n={MAX_IDENTITY_N}")
    if n == 1:
        return 1.0
    pts, wts = _gauss_grid(n - 1, order)
    total = 0.0
    for ch in enumerate_chains(n):
        if not ch.compatible(tree):
            continue
        g = wts.copy()
        for l, bl in enumerate(ch.crossings(tree)):
            g = g * pts[:, l] ** (bl - 1)
        total += float(g.sum())
    return total


def measure_mass_exact(tree: LabeledGraph) -> float:
    """Closed form of :func:`measure_mass`: sum over compatible chains of prod 1/b_l."""
    total = 0.0
    for ch in enumerate_chains(tree.n):
        if ch.compatible(tree):
            total += 1.0 / math.prod(ch.crossings(tree))
    return total


# --- tree-graph bound ----------------------------------------------------


def tree_sum(weights: np.ndarray, method: str = "auto") -> float:
    """sum over spanning trees of K_k of prod of edge weights.

    ``"enumerate"`` sums over all labeled trees; ``"kirchhoff"`` uses the
    weighted matrix-tree theorem.
    """
    W = np.asarray(weights, dtype=float)
    k = W.shape[0]
    if k == 1:
        return 1.0
    if method == "auto":
        method = "enumerate" if k <= ENUMERATE_TREES_MAX else "kirchhoff"
    if method == "enumerate":
        if k > MAX_TREE_VERTICES:
            raise CapacityError(f"tree enumeration capped at {MAX_TREE_VERTICES} vertices")
        a, b = tree_edge_index_arrays(k)
        return float(np.prod(W[a, b], axis=1).sum())
    if method == "kirchhoff":
        A = W.copy()
        np.fill_diagonal(A, 0.0)
        L = np.diag(A.sum(axis=1)) - A
        return float(np.linalg.det(L[1:, 1:]))
    raise ValueError(f"unknown method {method!r}")


def ursell_tree_bound(space: PolymerSpace, config: Sequence[int], method: str = "auto") -> float:
    """e^{sum B} sum_{tau in T_k} prod_{E_tau} F, an upper bound on |phi^T(config)|.

    For a pinned configuration pass ``(gamma0, g_1, ..., g_n)``; the trees
    then run over the vertex set {0..n}.
    """
    config = list(config)
    F = kernel_value(space.submatrix(config))
    return math.exp(float(space.stability[config].sum())) * tree_sum(F, method)


def cutoff_matrix(V: np.ndarray, H: float) -> np.ndarray:
    """V_H: H on incompatible pairs, V elsewhere."""
    if not math.isfinite(H):
        raise ValueError("cutoff H must be finite")
    V = np.array(V, dtype=float)
    V[V == INF] = H
    return V


def cutoff_space(space: PolymerSpace, H: float) -> PolymerSpace:
    if space.potential is None:
        raise ValueError("cutoff_space needs an explicit potential matrix")
    return PolymerSpace(space.ids, space.activity, cutoff_matrix(space.potential, H), space.stability)


def cutoff_H0(space: PolymerSpace, config: Sequence[int]) -> float:
    """A cutoff H_0 making the cut-off potential stable on every subset of ``config``.

    For each subset X containing an incompatible pair, H_0^X is minus the sum
    of the nonpositive compatible pair potentials in X; H_0 is the maximum.
    """
    config = list(config)
    k = len(config)
    if k > SUBSET_SCAN_MAX:
        raise CapacityError(f"subset scan capped at {SUBSET_SCAN_MAX} polymers")
    V = space.submatrix(config)
    h0 = 0.0
    for size in range(2, k + 1):
        for X in combinations(range(k), size):
            sub = V[np.ix_(X, X)][np.triu_indices(size, 1)]
            if not np.any(sub == INF):
                continue
            neg = sub[(sub <= 0)]
            h0 = max(h0, float(-neg.sum()))
    return h0
