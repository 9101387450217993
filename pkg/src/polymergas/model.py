"""Abstract polymer space with a general pair potential.

Potentials take values in R u {+inf}; ``math.inf`` marks an incompatible
pair.  NaN and -inf are rejected at construction, so the only special value
that can reach the arithmetic is +inf, where IEEE semantics already give
exp(-inf) = 0 and x + inf = inf.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CapacityError, ModelFormatError

INF = math.inf


def parse_extended(x) -> float:
    """Read an extended real: a number or the string ``"inf"``."""
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        raise ValueError(f"not an extended real: {x!r}")
    v = float(x)
    if math.isnan(v) or v == -INF:
        raise ValueError(f"potential must be finite or +inf, got {v}")
    return v


def format_extended(v: float):
    return "inf" if v == INF else v


def boltzmann(v):
    """exp(-v) with exp(-inf) = 0; works on scalars and arrays."""
    return np.exp(-np.asarray(v, dtype=float))


def mayer_factor(v):
    """exp(-v) - 1, equal to -1 on incompatible pairs."""
    return np.expm1(-np.asarray(v, dtype=float))


def kernel_value(v):
    """F = 1 on incompatible pairs, |v| otherwise."""
    v = np.asarray(v, dtype=float)
    return np.where(np.isinf(v), 1.0, np.abs(v))


@dataclass(eq=False)
class PolymerSpace:
    """A finite polymer space: activities, symmetric pair potential, stability B.

    ``potential`` is an (n, n) array including the diagonal.  Subclasses with
    implicit potentials override :meth:`potential_row` and leave it ``None``.
    """

    ids: tuple[str, ...]
    activity: np.ndarray
    potential: np.ndarray | None
    stability: np.ndarray
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.ids = tuple(str(i) for i in self.ids)
        n = len(self.ids)
        if n == 0:
            raise ValueError("empty polymer space")
        if len(set(self.ids)) != n:
            raise ValueError("duplicate polymer ids")
        self._index = {k: i for i, k in enumerate(self.ids)}
        self.activity = _frozen_vector(self.activity, n, "activity")
        self.stability = _frozen_vector(self.stability, n, "stability")
        if self.potential is not None:
            V = np.array(self.potential, dtype=float)
            if V.shape != (n, n):
                raise ValueError(f"potential must be {n}x{n}, got {V.shape}")
            if np.isnan(V).any() or (V == -INF).any():
                raise ValueError("potential contains NaN or -inf")
            if not np.array_equal(V, V.T):
                raise ValueError("potential is not symmetric")
            V.flags.writeable = False
            self.potential = V

    def __len__(self):
        return len(self.ids)

    def index(self, pid: str) -> int:
        return self._index[pid]

    def potential_row(self, i: int, cols=None) -> np.ndarray:
        row = self.potential[i]
        return row if cols is None else row[np.asarray(cols, dtype=np.intp)]

    def pair(self, i: int, j: int) -> float:
        return float(self.potential_row(i, [j])[0])

    def submatrix(self, config: Sequence[int]) -> np.ndarray:
        config = np.asarray(config, dtype=np.intp)
        if self.potential is not None:
            return self.potential[np.ix_(config, config)]
        return np.array([self.potential_row(i, config) for i in config]).reshape(len(config), len(config))

    def incompatible(self, i: int, j: int) -> bool:
        return self.pair(i, j) == INF

    def kernel_row(self, i: int, cols=None) -> np.ndarray:
        return kernel_value(self.potential_row(i, cols))

    def kernel_matrix(self) -> np.ndarray:
        return np.array([self.kernel_row(i) for i in range(len(self))])

    def energy(self, config: Sequence[int]) -> float:
        return energy(self, config)

    def with_activity(self, activity) -> "PolymerSpace":
        return PolymerSpace(self.ids, activity, self.potential, self.stability)

    def with_stability(self, stability) -> "PolymerSpace":
        return PolymerSpace(self.ids, self.activity, self.potential, stability)

    def restricted(self, volume: Sequence[int]) -> "PolymerSpace":
        vol = list(volume)
        return PolymerSpace(
            tuple(self.ids[i] for i in vol),
            self.activity[vol],
            self.submatrix(vol),
            self.stability[vol],
        )


def _frozen_vector(x, n, name):
    v = np.array(x, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ValueError(f"{name} must have length {n}")
    if not np.all(np.isfinite(v)) or (v < 0).any():
        raise ValueError(f"{name} must be finite and nonnegative")
    v.flags.writeable = False
    return v


def energy(space: PolymerSpace, config: Sequence[int]) -> float:
    """Sum of V over unordered pairs of the configuration."""
    if len(config) == 0:
        raise ValueError("empty configuration")
    if len(config) == 1:
        return 0.0
    V = space.submatrix(config)
    iu = np.triu_indices(len(config), 1)
    return float(V[iu].sum())


def kernel_F(space: PolymerSpace, i: int, j: int) -> float:
    return float(kernel_value(space.pair(i, j)))


@dataclass
class StabilityReport:
    ok: bool
    max_size: int
    checked: int
    violation: tuple[int, ...] | None = None
    lhs: float | None = None
    rhs: float | None = None


def verify_stability(space: PolymerSpace, max_multiset_size: int, *,
                     tol: float = 1e-12, max_checked: int = 5_000_000) -> StabilityReport:
    """Check sum_{i<j} V >= -sum_i B over all multisets up to the given size.

    Multisets containing an incompatible pair pass vacuously and are pruned
    together with all their extensions.
    """
    if max_multiset_size < 2:
        raise ValueError("max_multiset_size must be >= 2")
    n = len(space)
    B = space.stability
    checked = 0
    rows = {}

    def row(i):
        if i not in rows:
            rows[i] = space.potential_row(i)
        return rows[i]

    # iterative DFS over nondecreasing index sequences
    stack = [((i,), 0.0, B[i]) for i in reversed(range(n))]
    while stack:
        cfg, e, b = stack.pop()
        if len(cfg) >= 2:
            checked += 1
            if checked > max_checked:
                raise CapacityError(f"stability check exceeded {max_checked} multisets")
            if e < -b - tol:
                return StabilityReport(False, max_multiset_size, checked, cfg, e, -b)
        if len(cfg) == max_multiset_size:
            continue
        last = cfg[-1]
        for k in reversed(range(last, n)):
            r = row(k)
            de = float(r[list(cfg)].sum())
            if de == INF:
                continue
            stack.append((cfg + (k,), e + de, b + B[k]))
    return StabilityReport(True, max_multiset_size, checked)


def space_from_table(ids, activity, stability, pairs=(), default_potential=0.0) -> PolymerSpace:
    """Build a space from a sparse symmetric pair table ``[(id, id, value), ...]``."""
    ids = tuple(ids)
    n = len(ids)
    idx = {k: i for i, k in enumerate(ids)}
    V = np.full((n, n), parse_extended(default_potential))
    for a, b, v in pairs:
        i, j = idx[a], idx[b]
        V[i, j] = V[j, i] = parse_extended(v)
    return PolymerSpace(ids, activity, V, stability)


def model_to_dict(space: PolymerSpace, default_potential: float = 0.0) -> dict:
    n = len(space)
    if space.potential is None:
        raise ValueError("only explicit-matrix spaces can be serialized")
    pairs = []
    for i in range(n):
        for j in range(i, n):
            v = float(space.potential[i, j])
            if v != default_potential:
                pairs.append([space.ids[i], space.ids[j], format_extended(v)])
    return {
        "polymers": list(space.ids),
        "activity": {k: float(a) for k, a in zip(space.ids, space.activity)},
        "potential": pairs,
        "stability": {k: float(b) for k, b in zip(space.ids, space.stability)},
        "default_potential": format_extended(default_potential),
    }


def dumps_model(space: PolymerSpace, default_potential: float = 0.0) -> str:
    return json.dumps(model_to_dict(space, default_potential), indent=2) + "\n"


def model_from_dict(d: dict) -> PolymerSpace:
    try:
        ids = d["polymers"]
    except (KeyError, TypeError):
        raise ModelFormatError("missing 'polymers' list")
    if not isinstance(ids, list) or not all(isinstance(k, str) for k in ids):
        raise ModelFormatError("'polymers' must be a list of string ids")
    known = set(ids)

    def table(key, default=None):
        t = d.get(key)
        if t is None:
            if default is None:
                raise ModelFormatError(f"missing '{key}' table")
            return [default] * len(ids)
        if not isinstance(t, dict):
            raise ModelFormatError(f"'{key}' must be an object keyed by polymer id")
        unknown = set(t) - known
        if unknown:
            raise ModelFormatError(f"'{key}' has unknown ids {sorted(unknown)}")
        return [t.get(k, 0.0) for k in ids]

    activity = table("activity")
    stability = table("stability", 0.0)
    pairs = d.get("potential", [])
    if not isinstance(pairs, list):
        raise ModelFormatError("'potential' must be a list of [id, id, value]")
    for k, entry in enumerate(pairs):
        if not (isinstance(entry, list) and len(entry) == 3):
            raise ModelFormatError(f"potential[{k}] must be [id, id, value]")
        if entry[0] not in known or entry[1] not in known:
            raise ModelFormatError(f"potential[{k}] refers to unknown id")
        try:
            parse_extended(entry[2])
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"potential[{k}]: {exc}")
    try:
        return space_from_table(ids, activity, stability, pairs, d.get("default_potential", 0.0))
    except ValueError as exc:
        raise ModelFormatError(str(exc))


def loads_model(text: str) -> PolymerSpace:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(exc.msg, exc.lineno, exc.colno)
    return model_from_dict(d)


def load_model(path) -> PolymerSpace:
    return loads_model(Path(path).read_text())


def save_model(space: PolymerSpace, path, default_potential: float = 0.0):
    Path(path).write_text(dumps_model(space, default_potential))


def hard_core_space(n_polymers: int, activity, incompatible_pairs=(), self_incompatible=True) -> PolymerSpace:
    """Purely hard-core space with B = 0 (potential in {0, +inf})."""
    V = np.zeros((n_polymers, n_polymers))
    if self_incompatible:
        np.fill_diagonal(V, INF)
    for i, j in incompatible_pairs:
        V[i, j] = V[j, i] = INF
    act = np.broadcast_to(np.asarray(activity, dtype=float), (n_polymers,))
    return PolymerSpace(tuple(f"g{i}" for i in range(n_polymers)), act, V, np.zeros(n_polymers))
