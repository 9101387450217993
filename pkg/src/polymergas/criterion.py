"""Convergence criterion for the pinned series and the planar-tree iteration.

A weight vector mu certifies polymer gamma when

    rho_gamma e^{B(gamma)} <= mu_gamma exp(-sum_g F(gamma, g) mu_g - tail_gamma)

where ``tail`` is an optional nonnegative per-polymer term standing in for
polymers dropped by truncating an infinite space.  When every polymer is
certified, rho_g0 times the pinned series is at most mu_g0.

A failed check never means divergence; reports only say whether a
certificate was found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .expansion import SeriesTruncation, pinned_sum
from .graphs import planar_rooted_trees, tree_edge_index_arrays
from .model import INF, PolymerSpace

SOUNDNESS_SLACK = 1e-12


@dataclass
class CriterionReport:
    lhs: np.ndarray          # rho e^B
    exponent: np.ndarray     # sum F mu + tail
    rhs: np.ndarray          # mu e^{-exponent}
    mu: np.ndarray
    passed: np.ndarray

    @property
    def ok(self) -> bool:
        return bool(self.passed.all())

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def log_margin(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            lm = np.log(self.rhs) - np.log(self.lhs)
        return np.where(self.lhs == 0.0, np.inf, lm)

    @property
    def worst(self) -> int:
        return int(np.argmin(self.log_margin))

    def as_dict(self, ids=None) -> dict:
        ids = ids if ids is not None else [str(i) for i in range(len(self.mu))]
        return {
            "certificate_found": self.ok,
            "min_log_margin": float(self.log_margin.min()),
            "polymers": [
                {"id": ids[i], "lhs": float(self.lhs[i]), "rhs": float(self.rhs[i]),
                 "mu": float(self.mu[i]), "exponent": float(self.exponent[i]),
                 "margin": float(self.margin[i]), "pass": bool(self.passed[i])}
                for i in range(len(self.mu))
            ],
        }


def _vector(x, n, name, default=None, allow_inf=False):
    if x is None:
        return default
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ValueError(f"{name} must have length {n}")
    bad = np.isnan(v) if allow_inf else ~np.isfinite(v)
    if bad.any() or (v < 0).any():
        raise ValueError(f"{name} must be {'' if allow_inf else 'finite and '}nonnegative")
    return v


def interaction_sums(space: PolymerSpace, mu: np.ndarray) -> np.ndarray:
    """sum_g F(gamma, g) mu_g for every gamma."""
    support = np.nonzero(mu)[0]
    out = np.zeros(len(space))
    if len(support) == 0:
        return out
    for i in range(len(space)):
        out[i] = float(space.kernel_row(i, support) @ mu[support])
    return out


def check_criterion(space: PolymerSpace, mu, rho=None, tail=None) -> CriterionReport:
    n = len(space)
    mu = _vector(mu, n, "mu")
    rho = _vector(rho, n, "rho", space.activity)
    tail = _vector(tail, n, "tail", np.zeros(n), allow_inf=True)
    lhs = rho * np.exp(space.stability)
    exponent = interaction_sums(space, mu) + tail
    rhs = mu * np.exp(-exponent)
    return CriterionReport(lhs, exponent, rhs, mu, lhs <= rhs)


def kotecky_preiss_holds(space: PolymerSpace, mu, rho=None) -> np.ndarray:
    """Per-polymer rho_g <= mu_g exp(-sum_{g' incompatible with g} mu_g') for hard-core spaces."""
    n = len(space)
    mu = _vector(mu, n, "mu")
    rho = _vector(rho, n, "rho", space.activity)
    out = np.zeros(n, dtype=bool)
    for i in range(n):
        inc = space.potential_row(i) == INF
        out[i] = rho[i] <= mu[i] * math.exp(-mu[inc].sum())
    return out


# --- mu search -----------------------------------------------------------


@dataclass
class MuSearch:
    mu: np.ndarray
    report: CriterionReport
    sweeps: int
    history: list = field(default_factory=list)


def optimize_mu(space: PolymerSpace, rho=None, tail=None, *, sweeps: int = 60,
                scale_grid: int = 41, tol: float = 1e-10, span: float = 12.0) -> MuSearch:
    """Search for mu maximizing the smallest log-margin.

    A common scale mu = c rho e^B is chosen on a log grid, then each log mu_g
    is refined in turn by bounded scalar maximization.  The per-coordinate
    objective is concave in log mu_g, so each refinement is a unimodal search.
    No optimality claim is made.
    """
    n = len(space)
    rho = _vector(rho, n, "rho", space.activity)
    tail = _vector(tail, n, "tail", np.zeros(n))
    F = space.kernel_matrix()
    lhs = rho * np.exp(space.stability)
    active = np.nonzero(lhs > 0)[0]
    log_lhs = np.full(n, -np.inf)
    log_lhs[active] = np.log(lhs[active])

    def margins(u):
        mu = np.where(lhs > 0, np.exp(u), 0.0)
        return u[active] - (F[active] @ mu) - tail[active] - log_lhs[active]

    def score(u):
        m = margins(u)
        return float(m.min()) if len(m) else np.inf

    u = np.where(lhs > 0, log_lhs, 0.0)
    if len(active) == 0:
        mu = np.zeros(n)
        return MuSearch(mu, check_criterion(space, mu, rho, tail), 0)

    best_c, best = 0.0, -np.inf
    for c in np.linspace(-2.0, span, scale_grid):
        s = score(log_lhs.clip(-700) + c)
        if s > best:
            best, best_c = s, c
    u = np.where(lhs > 0, log_lhs + best_c, 0.0)
    history = [best]
    done = 0
    for done in range(1, sweeps + 1):
        prev = score(u)
        for g in active:
            lo, hi = log_lhs[g] - 2.0, log_lhs[g] + span

            def neg(x, g=g):
                u[g] = x
                return -score(u)

            keep, keep_score = u[g], score(u)
            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            u[g] = res.x if -res.fun > keep_score else keep
        cur = score(u)
        history.append(cur)
        if cur - prev <= tol:
            break
    mu = np.where(lhs > 0, np.exp(u), 0.0)
    return MuSearch(mu, check_criterion(space, mu, rho, tail), done, history)


# --- planar-tree iteration -----------------------------------------------


@dataclass
class IterationTrace:
    partial_sums: np.ndarray   # rho~_g0 * sum_{l' <= l} Phi^(l')
    phi: np.ndarray            # Phi^(l) for l = 0..l_max
    cap: float | None
    contradiction: bool

    @property
    def value(self) -> float:
        return float(self.partial_sums[-1])


def iterate_tree_series(space: PolymerSpace, rho_tilde, gamma0: int, l_max: int,
                        mu=None) -> IterationTrace:
    """Generation-by-generation sums over planar rooted trees.

    With vertex functions b_n = prod F / n!, the sum over trees of height at
    most l obeys a^(l+1)_g = exp(sum_g' F(g, g') rho~_g' a^(l)_g'), a^(0) = 1.
    """
    n = len(space)
    rt = _vector(rho_tilde, n, "rho_tilde")
    F = space.kernel_matrix()
    a = np.ones(n)
    levels = [a[gamma0]]
    for _ in range(l_max):
        a = np.exp(F @ (rt * a))
        levels.append(a[gamma0])
    levels = np.array(levels)
    phi = np.diff(levels, prepend=0.0)
    partial = rt[gamma0] * levels
    cap = None
    contradiction = False
    if mu is not None:
        cap = float(_vector(mu, n, "mu")[gamma0])
        contradiction = bool(np.any(partial > cap * (1 + SOUNDNESS_SLACK)))
    return IterationTrace(partial, phi, cap, contradiction)


def planar_tree_series(space: PolymerSpace, rho_tilde, gamma0: int, n_max: int) -> SeriesTruncation:
    """Resummed tree series over planar rooted trees, grouped by vertex count.

    Each planar tree t with root polymer g contributes
    (1/s_root!) prod_children sum_g' F(g, g') rho~_g' value(child, g').
    """
    n = len(space)
    rt = _vector(rho_tilde, n, "rho_tilde")
    F = space.kernel_matrix()
    cache = {}

    def value(t):
        if t not in cache:
            v = np.full(n, 1.0 / math.factorial(len(t.children)))
            for c in t.children:
                v = v * (F @ (rt * value(c)))
            cache[t] = v
        return cache[t]

    terms = [sum(value(t)[gamma0] for t in planar_rooted_trees(k)) for k in range(n_max + 1)]
    return SeriesTruncation(np.arange(n_max + 1), np.array(terms), np.cumsum(terms), True)


def labeled_tree_series(space: PolymerSpace, rho_tilde, gamma0: int, n_max: int,
                        max_terms: int = 20_000_000) -> SeriesTruncation:
    """Direct sum over labeled trees on {0..n} and polymer tuples in P^n.

    Literal evaluation of 1 + sum_n (1/n!) sum_tau sum_(g_1..g_n) prod F rho~,
    used to cross-check the resummation.
    """
    n = len(space)
    rt = _vector(rho_tilde, n, "rho_tilde")
    F = space.kernel_matrix()
    terms = [1.0]
    for k in range(1, n_max + 1):
        a, b = tree_edge_index_arrays(k + 1)
        if n ** k * a.size > max_terms:
            raise ValueError(f"order {k} needs {n ** k * a.size} products")
        grids = np.indices((n,) * k).reshape(k, -1).T
        assign = np.column_stack([np.full(len(grids), gamma0), grids])
        weight = np.prod(rt[grids], axis=1)
        s = 0.0
        for lo in range(0, len(assign), 256):
            A = assign[lo:lo + 256]
            prods = np.prod(F[A[:, a], A[:, b]], axis=2)   # (assign, trees)
            s += float(prods.sum(axis=1) @ weight[lo:lo + 256])
        terms.append(s / math.factorial(k))
    return SeriesTruncation(np.arange(n_max + 1), np.array(terms), np.cumsum(terms), True)


# --- certified bound -----------------------------------------------------


@dataclass
class PinnedCertificate:
    gamma0: int
    bound: float
    scaled_partial_sums: np.ndarray   # rho_g0 * pinned partial sums
    consistent: bool


def certified_pinned_bound(space: PolymerSpace, mu, gamma0: int, rho=None, tail=None,
                           check_order: int = 6, method: str = "auto") -> PinnedCertificate:
    """mu_g0 as a bound on rho_g0 times the pinned series, cross-checked by truncation."""
    rep = check_criterion(space, mu, rho, tail)
    if not rep.ok:
        raise ValueError("criterion does not hold for this (rho, mu); no bound certified")
    rho = _vector(rho, len(space), "rho", space.activity)
    series = pinned_sum(space, gamma0, check_order, rho=rho, method=method)
    scaled = rho[gamma0] * series.partial_sums
    bound = float(rep.mu[gamma0])
    ok = bool(np.all(scaled <= bound + SOUNDNESS_SLACK * max(1.0, bound)))
    return PinnedCertificate(gamma0, bound, scaled, ok)
