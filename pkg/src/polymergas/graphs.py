"""Labeled graphs, labeled trees and planar rooted trees on small vertex sets.

Vertices are ``0..n-1``.  Rooted trees live on ``0..n`` with ``0`` as root.
All enumerations are in lexicographic order of the sorted edge list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator

import numpy as np

from .errors import CapacityError

MAX_GRAPH_VERTICES = 8
MAX_TREE_VERTICES = 9

Edge = tuple[int, int]


@dataclass(frozen=True)
class LabeledGraph:
    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        norm = []
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge {(i, j)} out of range for n={self.n}")
            norm.append((min(i, j), max(i, j)))
        if len(set(norm)) != len(norm):
            raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    def adjacency(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for nb in adj:
            nb.sort()
        return adj

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


@dataclass(frozen=True)
class LabeledTree(LabeledGraph):
    def __post_init__(self):
        super().__post_init__()
        if len(self.edges) != self.n - 1 or not self.is_connected():
            raise ValueError(f"not a spanning tree on {self.n} vertices: {self.edges}")


@dataclass(frozen=True)
class PlanarRootedTree:
    """A rooted tree whose descendant lists are ordered.

    Each node is the tuple of its children, top to bottom in the drawing.
    Equality is structural, so two drawings differing only in the order of
    subtrees are distinct.
    """

    children: tuple["PlanarRootedTree", ...] = ()

    @property
    def n(self) -> int:
        """Number of non-root vertices."""
        return sum(1 + c.n for c in self.children)

    @property
    def branching(self) -> int:
        return len(self.children)

    def branching_factors(self) -> list[int]:
        """s_v for every vertex, root first, in preorder."""
        out = [len(self.children)]
        for c in self.children:
            out.extend(c.branching_factors())
        return out

    @property
    def height(self) -> int:
        """Maximal generation number (0 for the bare root)."""
        return 1 + max(c.height for c in self.children) if self.children else 0

    def __repr__(self):
        return "PRT" + _bracket(self)


def _bracket(t: PlanarRootedTree) -> str:
    return "(" + "".join(_bracket(c) for c in t.children) + ")"


def _check_cap(nvert: int, cap: int):
    if nvert < 1:
        raise ValueError("need at least one vertex")
    if nvert > cap:
        raise CapacityError(f"{nvert} vertices exceeds enumeration cap {cap}")


def _edge_list(n: int) -> list[Edge]:
    return list(combinations(range(n), 2))


def _connected_mask(n: int, adj: list[int]) -> bool:
    seen = 1
    frontier = 1
    full = (1 << n) - 1
    while frontier:
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            nxt |= adj[low.bit_length() - 1]
            f ^= low
        frontier = nxt & ~seen
        seen |= nxt
    return seen == full


def _connected_edge_subsets(n: int) -> Iterator[tuple[int, ...]]:
    """Edge-index tuples of connected graphs on n vertices, lexicographic."""
    edges = _edge_list(n)
    m = len(edges)
    adj = [0] * n
    chosen: list[int] = []

    def rec(start):
        if _connected_mask(n, adj):
            yield tuple(chosen)
        for k in range(start, m):
            i, j = edges[k]
            adj[i] ^= 1 << j
            adj[j] ^= 1 << i
            chosen.append(k)
            yield from rec(k + 1)
            chosen.pop()
            adj[i] ^= 1 << j
            adj[j] ^= 1 << i

    if n == 1:
        yield ()
        return
    yield from rec(0)


def enumerate_connected_graphs(n: int) -> Iterator[LabeledGraph]:
    """Every connected graph on vertex set ``0..n-1`` exactly once."""
    _check_cap(n, MAX_GRAPH_VERTICES)
    edges = _edge_list(n)
    for idx in _connected_edge_subsets(n):
        yield LabeledGraph(n, tuple(edges[k] for k in idx))


@lru_cache(maxsize=None)
def connected_graph_masks(n: int) -> np.ndarray:
    """Boolean incidence matrix (graphs x pairs) of all connected graphs on n vertices.

    Columns follow ``itertools.combinations(range(n), 2)``.
    """
    _check_cap(n, MAX_GRAPH_VERTICES)
    m = n * (n - 1) // 2
    rows = list(_connected_edge_subsets(n))
    out = np.zeros((len(rows), m), dtype=bool)
    for r, idx in enumerate(rows):
        out[r, list(idx)] = True
    out.flags.writeable = False
    return out


def enumerate_trees(n: int, include_root_zero: bool = False) -> Iterator[LabeledTree]:
    """Every labeled spanning tree exactly once.

    Without the root flag the vertex set is ``0..n-1``; with it the vertex
    set is ``0..n`` (n non-root vertices plus the root 0).
    """
    nvert = n + 1 if include_root_zero else n
    _check_cap(nvert, MAX_TREE_VERTICES)
    for idx in _tree_edge_subsets(nvert):
        edges = _edge_list(nvert)
        yield LabeledTree(nvert, tuple(edges[k] for k in idx))


def _tree_edge_subsets(nvert: int) -> Iterator[tuple[int, ...]]:
    edges = _edge_list(nvert)
    m = len(edges)
    need = nvert - 1
    comp = list(range(nvert))
    chosen: list[int] = []

    def rec(start):
        if len(chosen) == need:
            yield tuple(chosen)
            return
        for k in range(start, m - (need - len(chosen)) + 1):
            i, j = edges[k]
            ci, cj = comp[i], comp[j]
            if ci == cj:
                continue
            saved = comp[:]
            for v in range(nvert):
                if comp[v] == cj:
                    comp[v] = ci
            chosen.append(k)
            yield from rec(k + 1)
            chosen.pop()
            comp[:] = saved

    yield from rec(0)


@lru_cache(maxsize=None)
def tree_edge_index_arrays(nvert: int) -> tuple[np.ndarray, np.ndarray]:
    """All spanning trees of K_nvert as two (trees x edges) endpoint arrays."""
    _check_cap(nvert, MAX_TREE_VERTICES)
    edges = np.array(_edge_list(nvert), dtype=np.intp).reshape(-1, 2)
    idx = np.array(list(_tree_edge_subsets(nvert)), dtype=np.intp).reshape(-1, nvert - 1)
    a, b = edges[idx, 0], edges[idx, 1]
    a.flags.writeable = False
    b.flags.writeable = False
    return a, b


def to_planar_rooted(tree: LabeledGraph) -> PlanarRootedTree:
    """Drawing m(tree): descendants of each vertex ordered by increasing label."""
    if tree.n < 1:
        raise ValueError("tree must contain the root 0")
    adj = tree.adjacency()

    def build(v, parent):
        return PlanarRootedTree(tuple(build(w, v) for w in adj[v] if w != parent))

    return build(0, -1)


def preimage_count(t: PlanarRootedTree) -> int:
    """Number of labeled rooted trees drawn as ``t``: n! / prod s_v!."""
    denom = 1
    for s in t.branching_factors():
        denom *= math.factorial(s)
    return math.factorial(t.n) // denom


@lru_cache(maxsize=None)
def _forests(n: int) -> tuple[tuple[PlanarRootedTree, ...], ...]:
    # ordered sequences of planar trees with n vertices in total
    if n == 0:
        return ((),)
    out = []
    for first in range(1, n + 1):
        for head in planar_rooted_trees(first - 1):
            for rest in _forests(n - first):
                out.append((head,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def planar_rooted_trees(n: int) -> tuple[PlanarRootedTree, ...]:
    """All planar rooted trees with n non-root vertices (Catalan many)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return tuple(PlanarRootedTree(f) for f in _forests(n))
