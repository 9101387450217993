"""Finite-volume partition functions, Ursell coefficients and Mayer series.

Sums over ordered tuples in Lambda^n are evaluated over multisets: by
symmetry of the summands, (1/n!) times the sum over ordered n-tuples equals
the sum over multisets weighted by 1/prod(m_i!), where m_i are the
multiplicities.  ``tests/test_expansion.py`` checks this against literal
ordered-tuple summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .errors import CapacityError
from .graphs import MAX_GRAPH_VERTICES, connected_graph_masks
from .model import INF, PolymerSpace, mayer_factor

GRAPH_SUM_MAX = 6  # above this, "auto" switches to the subset recursion
RECURSION_MAX = 14
DEFAULT_N_CAP = 40


@dataclass
class SeriesTruncation:
    """Order-by-order terms and partial sums of a truncated power series."""

    orders: np.ndarray
    terms: np.ndarray
    partial_sums: np.ndarray
    monotone: bool

    @property
    def value(self) -> float:
        return float(self.partial_sums[-1])

    @property
    def order(self) -> int:
        return int(self.orders[-1])


def _series(first_order, terms, monotone):
    terms = np.asarray(terms, dtype=float)
    orders = np.arange(first_order, first_order + len(terms))
    return SeriesTruncation(orders, terms, np.cumsum(terms), monotone)


@dataclass
class PartitionResult:
    value: float
    tail_bound: float
    max_order: int
    terms: np.ndarray
    exact: bool


def _volume(space: PolymerSpace, volume) -> np.ndarray:
    if volume is None:
        return np.arange(len(space))
    vol = np.array(sorted(set(int(v) for v in volume)), dtype=np.intp)
    if len(vol) == 0:
        raise ValueError("empty volume")
    if vol[0] < 0 or vol[-1] >= len(space):
        raise IndexError("volume index out of range")
    return vol


def partition_function(space: PolymerSpace, volume=None, n_cap: int | None = None,
                       max_nodes: int = 5_000_000) -> PartitionResult:
    """Grand-canonical partition function of the gas restricted to ``volume``.

    Configurations with an incompatible pair have weight zero and are pruned
    with all their extensions.  If the sum is cut at ``n_cap`` before running
    out of admissible configurations, ``tail_bound`` bounds the remainder via
    stability: sum_{n > N} S^n / n!, S = sum_Lambda rho e^B.
    """
    vol = _volume(space, volume)
    rho = space.activity
    if n_cap is None:
        n_cap = DEFAULT_N_CAP
    terms = np.zeros(n_cap + 1)
    terms[0] = 1.0
    truncated = False
    nodes = 0

    # node: (order, last chosen position, run length of last, weight, cand positions, field)
    root_cand = np.arange(len(vol))
    stack = [(0, -1, 0, 1.0, root_cand, np.zeros(len(vol)))]
    while stack:
        order, last, run, w, cand, fld = stack.pop()
        if order == n_cap:
            if len(cand):
                truncated = True
            continue
        for t in range(len(cand) - 1, -1, -1):
            p = cand[t]
            de = fld[t]
            if de == INF:
                continue
            nodes += 1
            if nodes > max_nodes:
                raise CapacityError(f"partition function exceeded {max_nodes} configurations")
            k = vol[p]
            r = run + 1 if p == last else 1
            w_new = w * rho[k] * math.exp(-de) / r
            terms[order + 1] += w_new
            rest = cand[t:]
            row = space.potential_row(k, vol[rest])
            keep = row < INF
            stack.append((order + 1, p, r, w_new, rest[keep], fld[t:][keep] + row[keep]))
    max_order = int(np.nonzero(terms)[0].max())
    tail = 0.0
    if truncated:
        S = float(np.sum(rho[vol] * np.exp(space.stability[vol])))
        tail = _poisson_tail(S, n_cap)
    return PartitionResult(float(terms.sum()), tail, max_order, terms[: max_order + 1], not truncated)


def _poisson_tail(S: float, N: int) -> float:
    """sum_{n > N} S^n / n!."""
    if S == 0.0:
        return 0.0
    term = math.exp((N + 1) * math.log(S) - math.lgamma(N + 2))
    total = 0.0
    n = N + 1
    while term > 1e-300:
        total += term
        n += 1
        term *= S / n
        if term < 1e-17 * total:
            break
    return total


# --- Ursell coefficients -------------------------------------------------


def ursell(space: PolymerSpace, config: Sequence[int], method: str = "auto") -> float:
    """phi^T of a configuration (1 for a single polymer)."""
    return ursell_from_potential(space.submatrix(list(config)), method)


def ursell_from_potential(V: np.ndarray, method: str = "auto") -> float:
    """phi^T from a k x k matrix of pair potentials (diagonal ignored)."""
    k = V.shape[0]
    if k == 0:
        raise ValueError("empty configuration")
    if k == 1:
        return 1.0
    if method == "auto":
        method = "graphs" if k <= GRAPH_SUM_MAX else "recursive"
    iu = np.triu_indices(k, 1)
    f = mayer_factor(V[iu])
    if method == "graphs":
        return _graph_sum(f, k)
    if method == "recursive":
        return _connected_part(f, k)
    raise ValueError(f"unknown method {method!r}")


def _graph_sum(f: np.ndarray, k: int) -> float:
    if k > MAX_GRAPH_VERTICES:
        raise CapacityError(f"graph sum capped at {MAX_GRAPH_VERTICES} vertices")
    masks = connected_graph_masks(k)
    total = 0.0
    for lo in range(0, masks.shape[0], 200_000):
        chunk = masks[lo:lo + 200_000]
        total += float(np.where(chunk, f, 1.0).prod(axis=1).sum())
    return total


@lru_cache(maxsize=None)
def _subset_tables(k: int):
    # pair membership for every subset, and for each subset S containing vertex 0
    # the proper submasks T of S that contain vertex 0
    pairs = np.array(np.triu_indices(k, 1)).T
    full = 1 << k
    subsets = np.arange(full)
    member = ((subsets[:, None] >> pairs[:, 0]) & 1) & ((subsets[:, None] >> pairs[:, 1]) & 1)
    member = member.astype(bool)
    order = sorted((s for s in range(1, full) if s & 1), key=lambda s: bin(s).count("1"))
    subs = []
    for S in order:
        rest = S & ~1
        T = []
        sub = rest
        while True:
            cand = sub | 1
            if cand != S:
                T.append(cand)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        T = np.array(T, dtype=np.intp)
        subs.append((S, T, S ^ T))
    return member, subs


def _connected_part(f: np.ndarray, k: int) -> float:
    """Connected-graph sum by the subset recursion C(S) = W(S) - sum C(T) W(S\\T)."""
    if k > RECURSION_MAX:
        raise CapacityError(f"subset recursion capped at {RECURSION_MAX} vertices")
    member, subs = _subset_tables(k)
    W = np.where(member, 1.0 + f, 1.0).prod(axis=1)
    C = np.zeros(1 << k)
    for S, T, comp in subs:
        C[S] = W[S] - float(np.dot(C[T], W[comp])) if len(T) else W[S]
    return float(C[(1 << k) - 1])


# --- series --------------------------------------------------------------


def _multisets(domain: np.ndarray, n: int):
    """Multisets of size n over ``domain`` with their weight 1/prod(m_i!)."""
    for combo in combinations_with_replacement(domain, n):
        w = 1.0
        run = 1
        for a, b in zip(combo, combo[1:]):
            run = run + 1 if a == b else 1
            w /= run
        yield combo, w


def _activity(space, rho):
    if rho is None:
        return space.activity
    r = np.asarray(rho, dtype=float)
    if r.shape != (len(space),) or (r < 0).any():
        raise ValueError("rho must be a nonnegative vector over the space")
    return r


def log_xi_series(space: PolymerSpace, N: int, volume=None, rho=None,
                  absolute: bool = False, method: str = "auto") -> SeriesTruncation:
    """Mayer series of log Xi through order N; with ``absolute`` the |phi^T| series."""
    if N < 1:
        raise ValueError("N must be >= 1")
    vol = _volume(space, volume)
    r = _activity(space, rho)
    terms = []
    for n in range(1, N + 1):
        s = 0.0
        for combo, w in _multisets(vol, n):
            act = float(np.prod(r[list(combo)]))
            if act == 0.0:
                continue
            phi = ursell(space, combo, method)
            s += w * (abs(phi) if absolute else phi) * act
        terms.append(s)
    return _series(1, terms, absolute)


def abs_log_xi(space: PolymerSpace, N: int, volume=None, rho=None, method: str = "auto") -> SeriesTruncation:
    """Positive-term series sum_n (1/n!) sum |phi^T| rho...rho through order N."""
    return log_xi_series(space, N, volume, rho, absolute=True, method=method)


def pinned_sum(space: PolymerSpace, gamma0: int, N: int, rho=None, volume=None,
               method: str = "auto") -> SeriesTruncation:
    """Pinned series sum_{n>=0} (1/n!) sum |phi^T(gamma0, g_1..g_n)| rho_g1...rho_gn.

    Without ``volume`` the whole space is the summation domain.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    dom = _volume(space, volume)
    r = _activity(space, rho)
    terms = [1.0]
    for n in range(1, N + 1):
        s = 0.0
        for combo, w in _multisets(dom, n):
            act = float(np.prod(r[list(combo)]))
            if act == 0.0:
                continue
            s += w * abs(ursell(space, (gamma0,) + combo, method)) * act
        terms.append(s)
    return _series(0, terms, True)
