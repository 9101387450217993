"""Long-range Blume-Emery-Griffiths model in the disordered phase as a polymer gas.

Spins sigma_x in {-1, 0, +1} on Z^d, Hamiltonian

    H = -sum_{x<y} [J_xy s_x s_y + K_xy s_x^2 s_y^2] + D sum_x s_x^2.

Polymers are connected supports of nonzero spins with a +-1 assignment;
two polymers are incompatible when their supports are at L1 distance < 2.
Couplings decay as J_xy = j_amp / |x-y|^(d+lam), K_xy = k_amp / |x-y|^(d+lam)
with |x-y| the L1 (nearest-neighbour path) distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np
from scipy.special import comb, zeta

from .criterion import CriterionReport, check_criterion
from .errors import CapacityError
from .expansion import partition_function
from .model import INF, PolymerSpace

Site = tuple[int, ...]

MAX_DIM = 4
MAX_POLYMER_SIZE = 6
MAX_WINDOW_SITES = 9
EXACT_ANIMALS = 6  # C_n is enumerated up to this size, bounded by (4d)^n beyond


# --- parameters ----------------------------------------------------------


def shell_polynomial(d: int) -> np.ndarray:
    """Coefficients (lowest first) of |S_n| = #{y in Z^d : |y|_1 = n}, valid for n >= 1."""
    total = np.zeros(d)
    for k in range(1, d + 1):
        # C(n-1, k-1) as a polynomial in n
        p = np.array([1.0])
        for i in range(1, k):
            p = np.convolve(p, [-i, 1.0])
        p = p / math.factorial(k - 1)
        total[: len(p)] += (2 ** k) * math.comb(d, k) * p
    return total


def shell_sum(d: int, s: float, n0: int = 1) -> float:
    """sum_{n >= n0} |S_n| n^{-s}, exact through Hurwitz zeta values."""
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    coef = shell_polynomial(d)
    if s - (d - 1) <= 1:
        raise ValueError("shell sum diverges")
    return float(sum(c * zeta(s - j, n0) for j, c in enumerate(coef) if c != 0.0))


@dataclass(frozen=True)
class BegParams:
    """Model constants.  ``J`` is derived; ``D > J`` (disordered phase) is enforced."""

    d: int
    D: float
    j1: float
    lam: float
    lam_prime: float
    c: float
    beta: float
    j_amp: float | None = None
    k_amp: float = 0.0

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIM:
            raise ValueError(f"d must be in 1..{MAX_DIM}")
        if self.lam <= 0:
            raise ValueError("lambda must be > 0 (coupling sums diverge otherwise)")
        if not self.lam < self.lam_prime:
            raise ValueError("need 0 < lambda < lambda'")
        if self.j1 < 0 or self.beta < 0 or self.c < 0:
            raise ValueError("J1, beta and c must be nonnegative")
        if self.j_amp is None:
            object.__setattr__(self, "j_amp", self.j1)
        if self.j_amp < 0:
            raise ValueError("J_xy must be nonnegative")
        if self.j_amp + abs(self.k_amp) > 2 * self.j1 * (1 + 1e-12):
            raise ValueError("couplings violate J_xy + |K_xy| <= 2 J1 / |x-y|^(d+lambda)")
        if self.c > max(self.j_amp, abs(self.k_amp)) * (1 + 1e-12):
            raise ValueError("couplings violate the lower bound with constant c and exponent lambda'")
        if not self.D > self.J:
            raise ValueError(f"D = {self.D} is not in the disordered phase D > J = {self.J}")

    @classmethod
    def from_gap(cls, gap: float, **kw) -> "BegParams":
        """Build with D = J + gap."""
        probe = dict(kw)
        tmp = _coupling_half_sum(probe["d"], probe["lam"], probe.get("j_amp", probe["j1"]),
                                 probe.get("k_amp", 0.0))
        return cls(D=tmp + gap, **kw)

    @property
    def J(self) -> float:
        return _coupling_half_sum(self.d, self.lam, self.j_amp, self.k_amp)

    @property
    def gap(self) -> float:
        return self.D - self.J

    @property
    def long_range_regime(self) -> bool:
        return self.lam_prime < 2 * self.d + 1

    def coupling_J(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 0, self.j_amp / np.where(r > 0, r, 1.0) ** (self.d + self.lam), 0.0)

    def coupling_K(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 0, self.k_amp / np.where(r > 0, r, 1.0) ** (self.d + self.lam), 0.0)

    def replace(self, **kw) -> "BegParams":
        from dataclasses import replace
        return replace(self, **kw)


def _coupling_half_sum(d, lam, j_amp, k_amp):
    return 0.5 * (j_amp + abs(k_amp)) * shell_sum(d, d + lam)


def j2_constant(params: BegParams) -> float:
    """J_2 = ((2d)^d J1 / d!) sum_{n>=2} n^{-(1+lam)}."""
    d = params.d
    return (2 * d) ** d * params.j1 / math.factorial(d) * float(zeta(1 + params.lam, 2))


def jbeta(params: BegParams) -> float:
    return 2 * params.d + params.beta * j2_constant(params)


def surface_count(d: int, n: int) -> int:
    """|S_n| by enumeration of the L1 sphere of radius n in Z^d."""
    if n < 1 or not 1 <= d <= MAX_DIM:
        raise ValueError("need n >= 1 and 1 <= d <= 4")
    if (2 * n + 1) ** d > 5_000_000:
        raise CapacityError("sphere enumeration too large")
    return sum(1 for y in product(range(-n, n + 1), repeat=d) if sum(map(abs, y)) == n)


# --- lattice animals and polymers ----------------------------------------


def l1(x: Site, y: Site) -> int:
    return sum(abs(a - b) for a, b in zip(x, y))


def neighbours(x: Site) -> Iterable[Site]:
    for i in range(len(x)):
        for s in (-1, 1):
            y = list(x)
            y[i] += s
            yield tuple(y)


def is_connected(sites: Iterable[Site]) -> bool:
    sites = set(sites)
    if not sites:
        return False
    start = next(iter(sites))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in neighbours(x):
            if y in sites and y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(sites)


@lru_cache(maxsize=None)
def lattice_animals(d: int, n: int) -> tuple[tuple[Site, ...], ...]:
    """Connected n-site subsets of Z^d containing the origin (sorted tuples)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_POLYMER_SIZE + (2 if d == 1 else 0):
        raise CapacityError(f"animal enumeration capped at n={MAX_POLYMER_SIZE}")
    origin = (0,) * d
    if n == 1:
        return ((origin,),)
    out = set()
    for a in lattice_animals(d, n - 1):
        aset = set(a)
        for x in a:
            for y in neighbours(x):
                if y not in aset:
                    out.add(tuple(sorted(aset | {y})))
    return tuple(sorted(out))


def animal_count(d: int, n: int) -> int:
    """C_n: fixed-site lattice animals of size n."""
    return len(lattice_animals(d, n))


@dataclass(frozen=True)
class BegPolymer:
    sites: tuple[Site, ...]
    spins: tuple[int, ...]

    def __post_init__(self):
        if len(self.sites) != len(self.spins) or not self.sites:
            raise ValueError("polymer needs matching non-empty sites and spins")
        order = sorted(range(len(self.sites)), key=lambda k: self.sites[k])
        object.__setattr__(self, "sites", tuple(tuple(self.sites[k]) for k in order))
        object.__setattr__(self, "spins", tuple(int(self.spins[k]) for k in order))
        if any(s not in (-1, 1) for s in self.spins):
            raise ValueError("polymer spins must be +-1")
        if len(set(self.sites)) != len(self.sites) or not is_connected(self.sites):
            raise ValueError("polymer support must be connected")

    def __len__(self):
        return len(self.sites)

    @property
    def label(self) -> str:
        return "|".join(",".join(map(str, x)) + ("+" if s > 0 else "-")
                        for x, s in zip(self.sites, self.spins))


def _with_spins(support: Sequence[Site]) -> list[BegPolymer]:
    return [BegPolymer(tuple(support), spins) for spins in product((1, -1), repeat=len(support))]


def box(*dims: int) -> tuple[Site, ...]:
    """Sites of the box [0, d_1) x ... x [0, d_k)."""
    return tuple(product(*(range(k) for k in dims)))


def window_supports(window: Sequence[Site], n_max: int) -> list[tuple[Site, ...]]:
    """Connected subsets of the window with at most n_max sites, sorted."""
    W = set(map(tuple, window))
    level = {(x,) for x in W}
    out = set(level)
    for _ in range(n_max - 1):
        nxt = set()
        for a in level:
            aset = set(a)
            for x in a:
                for y in neighbours(x):
                    if y in W and y not in aset:
                        nxt.add(tuple(sorted(aset | {y})))
        out |= nxt
        level = nxt
    return sorted(out, key=lambda s: (len(s), s))


def enumerate_polymers(d: int, n_max: int, anchor: Site | None = None,
                       window: Sequence[Site] | None = None) -> list[BegPolymer]:
    """Polymers of size <= n_max containing ``anchor``, or lying inside ``window``."""
    out = []
    if window is not None:
        if len(window) > MAX_WINDOW_SITES and n_max > MAX_POLYMER_SIZE:
            raise CapacityError(f"window enumeration capped at n_max={MAX_POLYMER_SIZE}")
        for sup in window_supports(window, n_max):
            out.extend(_with_spins(sup))
        return out
    if n_max > MAX_POLYMER_SIZE and d > 1:
        raise CapacityError(f"polymer enumeration capped at n_max={MAX_POLYMER_SIZE}")
    anchor = tuple(anchor) if anchor is not None else (0,) * d
    for n in range(1, n_max + 1):
        for a in lattice_animals(d, n):
            # every translate of the animal that still contains the anchor
            for x in a:
                shift = tuple(p - q for p, q in zip(anchor, x))
                sup = tuple(sorted(tuple(s + t for s, t in zip(y, shift)) for y in a))
                out.append(sup)
    supports = sorted(set(out), key=lambda s: (len(s), s))
    return [p for sup in supports for p in _with_spins(sup)]


# --- energies ------------------------------------------------------------


def polymer_distance(p: BegPolymer, q: BegPolymer) -> int:
    return min(l1(x, y) for x in p.sites for y in q.sites)


def interaction_W(p: BegPolymer, q: BegPolymer, params: BegParams) -> float:
    if polymer_distance(p, q) < 2:
        return INF
    s = 0.0
    for x, sx in zip(p.sites, p.spins):
        for y, sy in zip(q.sites, q.spins):
            r = l1(x, y)
            s += float(params.coupling_J(r)) * sx * sy + float(params.coupling_K(r))
    return -params.beta * s


def self_energy_A(p: BegPolymer, params: BegParams) -> float:
    s = 0.0
    for (x, sx), (y, sy) in combinations(zip(p.sites, p.spins), 2):
        r = l1(x, y)
        s += float(params.coupling_J(r)) * sx * sy + float(params.coupling_K(r))
    return params.beta * s


def activity_rho(p: BegPolymer, params: BegParams) -> float:
    return math.exp(-(params.beta * params.D * len(p) - self_energy_A(p, params)))


def stability_B(p: BegPolymer, params: BegParams) -> float:
    return params.beta * params.J * len(p) - self_energy_A(p, params)


class LatticePolymerSpace(PolymerSpace):
    """Polymer space of BEG polymers with the potential W evaluated on demand.

    Rows of W are computed from site-level coupling matrices, so the space
    never materializes the full |P| x |P| table.
    """

    def __init__(self, polymers: Sequence[BegPolymer], params: BegParams,
                 window: Sequence[Site] | None = None, n_max: int | None = None):
        self.polymers = tuple(polymers)
        self.params = params
        self.window = tuple(map(tuple, window)) if window is not None else None
        self.n_max = n_max
        sites = sorted({x for p in self.polymers for x in p.sites})
        self.sites = tuple(sites)
        pos = {x: i for i, x in enumerate(sites)}
        P, N = len(self.polymers), len(sites)
        S = np.zeros((P, N))
        self._S_cols = N
        for i, p in enumerate(self.polymers):
            for x, s in zip(p.sites, p.spins):
                S[i, pos[x]] = s
        X = np.array(sites).reshape(N, -1)
        R = np.abs(X[:, None, :] - X[None, :, :]).sum(axis=2)
        M = np.abs(S)
        Jm, Km = params.coupling_J(R), params.coupling_K(R)
        # per-polymer fields on the sites: rows of W are then one product each
        self._SM = np.hstack([S, M, M])
        self._field = np.hstack([-params.beta * (S @ Jm), -params.beta * (M @ Km), M @ (R <= 1)])
        self._sizes = M.sum(axis=1).astype(int)
        A = 0.5 * params.beta * (np.einsum("pi,ij,pj->p", S, Jm, S) + np.einsum("pi,ij,pj->p", M, Km, M))
        self.self_energy = A
        B = np.maximum(params.beta * params.J * self._sizes - A, 0.0)
        act = np.exp(-(params.beta * params.D * self._sizes - A))
        super().__init__(tuple(p.label for p in self.polymers), act, None, B)

    def potential_row(self, i, cols=None):
        n = self._S_cols
        f = self._field[i]
        X = self._SM if cols is None else self._SM[np.asarray(cols, dtype=np.intp)]
        W = X[:, :2 * n] @ f[:2 * n]
        touch = X[:, 2 * n:] @ f[2 * n:] > 0
        return np.where(touch, INF, W)

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes


def build_polymer_space(params: BegParams, window: Sequence[Site], n_max: int) -> LatticePolymerSpace:
    """Truncated polymer space: every polymer of size <= n_max inside the window."""
    return LatticePolymerSpace(enumerate_polymers(params.d, n_max, window=window), params, window, n_max)


# --- spin system and bijection -------------------------------------------


def spin_hamiltonian(sigma: np.ndarray, sites: Sequence[Site], params: BegParams) -> np.ndarray:
    """H_Lambda(sigma) with free boundary conditions; ``sigma`` is (configs, sites)."""
    X = np.array(sites).reshape(len(sites), -1)
    R = np.abs(X[:, None, :] - X[None, :, :]).sum(axis=2)
    Jm, Km = params.coupling_J(R), params.coupling_K(R)
    s = np.atleast_2d(sigma).astype(float)
    q = s ** 2
    pair = 0.5 * np.einsum("ci,ij,cj->c", s, Jm, s) + 0.5 * np.einsum("ci,ij,cj->c", q, Km, q)
    return -pair + params.D * q.sum(axis=1)


def polymers_of_configuration(sigma: Sequence[int], sites: Sequence[Site]) -> list[BegPolymer]:
    """Connected components of the nonzero spins, each with its +-1 assignment."""
    val = {tuple(x): int(s) for x, s in zip(sites, sigma) if s != 0}
    out = []
    seen = set()
    for x in sorted(val):
        if x in seen:
            continue
        comp = [x]
        seen.add(x)
        stack = [x]
        while stack:
            u = stack.pop()
            for v in neighbours(u):
                if v in val and v not in seen:
                    seen.add(v)
                    comp.append(v)
                    stack.append(v)
        out.append(BegPolymer(tuple(comp), tuple(val[c] for c in comp)))
    return out


@dataclass
class BijectionReport:
    z_spin: float
    z_polymer: float
    rel_error: float
    configurations: int
    separated: bool
    round_trip: bool
    energy_max_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.rel_error <= self.tolerance and self.separated and self.round_trip


def spin_polymer_bijection_check(params: BegParams, window: Sequence[Site],
                                 tol: float = 1e-10) -> BijectionReport:
    """Z_Lambda two ways: direct 3^|Lambda| spin sum and the polymer-gas partition function."""
    sites = tuple(map(tuple, window))
    if len(sites) > MAX_WINDOW_SITES:
        raise CapacityError(f"bijection check capped at {MAX_WINDOW_SITES} sites")
    sigma = np.array(list(product((0, 1, -1), repeat=len(sites))), dtype=int)
    bh = params.beta * spin_hamiltonian(sigma, sites, params)
    z_spin = float(np.exp(-bh).sum())

    space = build_polymer_space(params, sites, len(sites))
    z_poly = partition_function(space).value

    index = {p: i for i, p in enumerate(space.polymers)}
    separated = True
    round_trip = True
    emax = 0.0
    pos = {x: k for k, x in enumerate(sites)}
    for c, s in enumerate(sigma):
        fam = polymers_of_configuration(s, sites)
        back = np.zeros(len(sites), dtype=int)
        for p in fam:
            for x, v in zip(p.sites, p.spins):
                back[pos[x]] = v
        round_trip &= bool(np.array_equal(back, s))
        ids = [index[p] for p in fam]
        e = sum(float(space.sizes[i]) * params.beta * params.D - space.self_energy[i] for i in ids)
        for a, b in combinations(ids, 2):
            w = space.pair(a, b)
            if w == INF:
                separated = False
            e += w
        emax = max(emax, abs(e - bh[c]))
    rel = abs(z_spin - z_poly) / abs(z_spin)
    return BijectionReport(z_spin, z_poly, rel, len(sigma), separated, round_trip, emax, tol)


# --- convergence chain ---------------------------------------------------


def geometric_mu(space: LatticePolymerSpace, alpha: float) -> np.ndarray:
    """mu_p = exp((-beta (D - J) + alpha) |p|)."""
    p = space.params
    return np.exp((-p.beta * p.gap + alpha) * space.sizes)


@lru_cache(maxsize=None)
def _animal_counts(d: int, upto: int) -> tuple[int, ...]:
    return tuple(animal_count(d, n) for n in range(1, upto + 1))


def _exact_animal_limit(d: int) -> int:
    return EXACT_ANIMALS if d <= 2 else 4


def site_polymer_mass(params: BegParams, alpha: float, lo: int, hi: float = math.inf) -> float:
    """sum over polymers p containing a fixed site with lo <= |p| <= hi of mu_p.

    Uses exact C_n where enumerated and C_n <= (4d)^n beyond.
    """
    d = params.d
    y = math.exp(-params.beta * params.gap + alpha)
    m0 = _exact_animal_limit(d)
    counts = _animal_counts(d, m0)
    total = 0.0
    for m in range(max(lo, 1), int(min(hi, m0)) + 1):
        total += counts[m - 1] * (2 * y) ** m
    if hi > m0:
        q = 8 * d * y
        start = max(lo, m0 + 1)
        if math.isinf(hi):
            if q >= 1:
                return math.inf
            total += q ** start / (1 - q)
        else:
            total += sum(q ** m for m in range(start, int(hi) + 1))
    return total


def _distance_to_outside(x: Site, window: set) -> int:
    n = 1
    while True:
        for y in _sphere(len(x), n):
            if tuple(a + b for a, b in zip(x, y)) not in window:
                return n
        n += 1


@lru_cache(maxsize=None)
def _sphere(d: int, n: int) -> tuple[Site, ...]:
    return tuple(y for y in product(range(-n, n + 1), repeat=d) if sum(map(abs, y)) == n)


def analytic_tail(space: LatticePolymerSpace, alpha: float) -> np.ndarray:
    """Upper bound on sum F(p, q) mu_q over polymers q missing from the truncated space.

    Missing polymers are either larger than n_max or stick out of the window.
    Each q is charged to its sites z with weight kappa_p(z) =
    1[z within distance 1 of p] + beta sum_{x in p, |x-z| >= 2} g(|x-z|),
    g = (j_amp + |k_amp|) r^-(d+lam), which dominates F(p, q) termwise.
    """
    params = space.params
    if space.window is None or space.n_max is None:
        raise ValueError("analytic tails need a windowed truncation")
    d, beta, n_max = params.d, params.beta, space.n_max
    window = set(space.window)
    amp = params.j_amp + abs(params.k_amp)
    large = site_polymer_mass(params, alpha, n_max + 1)
    small = site_polymer_mass(params, alpha, 1, n_max)

    def G(r):
        return amp * shell_sum(d, d + params.lam, max(2, r))

    reach = n_max - 1
    dist_out = {x: _distance_to_outside(x, window) for x in window}

    def in_edge(z):
        return z not in window or dist_out[z] <= reach

    tails = np.zeros(len(space))
    cache = {}
    for i, p in enumerate(space.polymers):
        if p.sites in cache:
            tails[i] = cache[p.sites]
            continue
        near = set(p.sites)
        for x in p.sites:
            near.update(neighbours(x))
        full = len(near) + beta * len(p) * G(2)
        edge = sum(1 for z in near if in_edge(z))
        edge += beta * sum(G(dist_out[x] - reach) for x in p.sites)
        t = large * full + small * edge if large < math.inf else math.inf
        cache[p.sites] = tails[i] = t
    return tails


@dataclass
class BegCheck:
    report: CriterionReport
    alpha: float
    large_polymer_bound: float     # bound on sum F mu / |p| for |p| > n_max
    large_ok: bool
    space: LatticePolymerSpace
    constants: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.report.ok and self.large_ok


def beg_check(params: BegParams, window: Sequence[Site], n_max: int, alpha: float = 0.5) -> BegCheck:
    """Criterion on the truncated space with analytic tails, plus an analytic check for larger polymers."""
    space = build_polymer_space(params, window, n_max)
    mu = geometric_mu(space, alpha)
    tail = analytic_tail(space, alpha)
    rep = check_criterion(space, mu, tail=tail)
    amp = params.j_amp + abs(params.k_amp)
    mass = site_polymer_mass(params, alpha, 1)
    # |p| >= 2 has at most 2d|p| sites within distance 1
    per_site = (2 * params.d + params.beta * amp * shell_sum(params.d, params.d + params.lam, 2)) * mass
    consts = {
        "J": params.J, "J2": j2_constant(params), "Jbeta": jbeta(params),
        "x": 8 * params.d * math.exp(-params.beta * params.gap),
        "polymers": len(space), "max_tail": float(tail.max()) if len(tail) else 0.0,
    }
    return BegCheck(rep, alpha, per_site, per_site <= alpha, space, consts)


@dataclass
class Envelope:
    y: float
    lhs: float
    rhs: float
    ok: bool
    diagnostic: str = ""

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def convergence_envelope(params: BegParams, alpha: float) -> Envelope:
    """sum_{n>=1} n y^n <= alpha / J_beta with y = 8d e^{-beta(D-J)} e^alpha."""
    x = 8 * params.d * math.exp(-params.beta * params.gap)
    y = x * math.exp(alpha)
    rhs = alpha / jbeta(params)
    if y >= 1:
        return Envelope(y, math.inf, rhs, False, f"y = {y:.6g} >= 1: series diverges")
    lhs = y / (1 - y) ** 2
    return Envelope(y, lhs, rhs, lhs <= rhs)


def f_threshold(u: float) -> float:
    """Root y in (0, 1) of y / (1 - y)^2 = u."""
    return 2 * u / (2 * u + 1 + math.sqrt(4 * u + 1))


@dataclass
class RootResult:
    beta: float
    residual: float
    bracket: tuple[float, float]
    iterations: int


def _bisect(h, lo: float, hi: float, max_iter: int = 2000) -> RootResult:
    """Bisection for an increasing crossing h(lo) < 0 <= h(hi), run to float resolution."""
    if not h(lo) < 0:
        raise ValueError("no sign change at the lower end of the bracket")
    grow = 0
    while h(hi) < 0:
        lo, hi = hi, 2 * hi
        grow += 1
        if grow > 200:
            raise ValueError("no crossing found while expanding the bracket")
    it = 0
    while it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    root = lo if abs(h(lo)) <= abs(h(hi)) else hi
    return RootResult(root, abs(h(root)), (lo, hi), it)


def beta0_equation(params: BegParams):
    d, gap, j2 = params.d, params.gap, j2_constant(params)
    return lambda b: math.exp(b * gap) / (8 * math.sqrt(math.e) * d) - (2 * d + 1 + b * j2)


def beta0(params: BegParams) -> RootResult:
    """Positive root of (2d + 1 + beta J2) = e^{beta (D-J)} / (8 sqrt(e) d)."""
    if params.gap <= 0:
        raise ValueError("beta0 needs D > J")
    return _bisect(beta0_equation(params), 0.0, 1.0)


def beta_envelope(params: BegParams, alpha: float = 0.5) -> RootResult:
    """Smallest beta where the exact envelope e^{-beta(D-J)} <= e^-alpha f(alpha/J_beta)/(8d) holds."""
    d, gap, j2 = params.d, params.gap, j2_constant(params)

    def h(b):
        u = alpha / (2 * d + b * j2)
        return math.log(math.exp(-alpha) * f_threshold(u) / (8 * d)) + b * gap

    return _bisect(h, 0.0, 1.0)


def chain_envelope(params: BegParams) -> Envelope:
    """The envelope at alpha = 1/2 with f(u) replaced by 2u/(2u+1), as in the beta0 equation.

    This is the inequality e^{-beta(D-J)} <= e^{-1/2} / (8d (2d + 1 + beta J2)); it holds
    exactly for beta >= beta0.  Since 2u/(2u+1) exceeds f(u), it is weaker than
    :func:`convergence_envelope`.
    """
    d = params.d
    lhs = math.exp(-params.beta * params.gap)
    rhs = math.exp(-0.5) / (8 * d * (2 * d + 1 + params.beta * j2_constant(params)))
    return Envelope(8 * d * lhs * math.exp(0.5), lhs, rhs, lhs <= rhs * (1 + 1e-12))


# --- parameter files -----------------------------------------------------

_PARAM_KEYS = {"d", "D", "gap", "J1", "lambda", "lambda_prime", "c", "beta", "beta_offset",
               "j_amp", "k_amp", "window", "n_max", "alpha"}


@dataclass
class BegScenario:
    params: BegParams
    window: tuple[Site, ...] | None
    n_max: int
    alpha: float


def parse_window(w, d: int) -> tuple[Site, ...]:
    """``[3, 3]`` is a box of that shape; a list of coordinate lists is taken as given."""
    if not isinstance(w, list) or not w:
        raise ValueError("window must be a non-empty list")
    if all(isinstance(k, int) for k in w):
        if len(w) != d or min(w) < 1:
            raise ValueError(f"box window needs {d} positive side lengths")
        return box(*w)
    sites = [tuple(int(a) for a in x) for x in w]
    if any(len(x) != d for x in sites) or len(set(sites)) != len(sites):
        raise ValueError("window sites must be distinct points of Z^d")
    return tuple(sites)


def scenario_from_dict(raw: dict) -> BegScenario:
    """Parameters from a JSON object; ``gap`` may replace ``D`` and ``beta_offset`` sets beta = beta0 + offset."""
    unknown = set(raw) - _PARAM_KEYS
    if unknown:
        raise ValueError(f"unknown parameter keys {sorted(unknown)}")
    if ("D" in raw) == ("gap" in raw):
        raise ValueError("give exactly one of 'D' and 'gap'")
    kw = dict(d=int(raw.get("d", 2)), j1=float(raw["J1"]), lam=float(raw["lambda"]),
              lam_prime=float(raw["lambda_prime"]), c=float(raw.get("c", 0.0)),
              beta=float(raw.get("beta", 1.0)), k_amp=float(raw.get("k_amp", 0.0)))
    if "j_amp" in raw:
        kw["j_amp"] = float(raw["j_amp"])
    params = BegParams.from_gap(float(raw["gap"]), **kw) if "gap" in raw else BegParams(D=float(raw["D"]), **kw)
    if "beta_offset" in raw:
        if "beta" in raw:
            raise ValueError("give at most one of 'beta' and 'beta_offset'")
        params = params.replace(beta=beta0(params).beta + float(raw["beta_offset"]))
    window = parse_window(raw["window"], params.d) if "window" in raw else None
    return BegScenario(params, window, int(raw.get("n_max", 3)), float(raw.get("alpha", 0.5)))
