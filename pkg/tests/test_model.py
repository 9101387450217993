import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polymergas.errors import CapacityError, ModelFormatError
from polymergas.model import (
    INF, PolymerSpace, dumps_model, energy, hard_core_space, kernel_F, loads_model, mayer_factor,
    parse_extended, space_from_table, verify_stability,
)

from strategies import random_space, spaces


def two_compatible(B):
    return space_from_table(["a", "b"], [0.1, 0.1], [B, B],
                            [["a", "a", "inf"], ["b", "b", "inf"], ["a", "b", -1.0]])


def test_energy_examples():
    s = space_from_table(["a", "b", "c"], [1, 1, 1], [0, 0, 0], [["a", "b", -1.5], ["a", "c", "inf"]])
    assert energy(s, [0]) == 0.0
    assert energy(s, [0, 1]) == -1.5
    assert energy(s, [0, 2]) == INF
    assert energy(s, [2, 1, 0]) == INF
    with pytest.raises(ValueError):
        energy(s, [])


def test_kernel_examples():
    s = space_from_table(["a", "b", "c"], [1, 1, 1], [0, 0, 0], [["a", "b", -0.5], ["a", "c", "inf"]])
    assert kernel_F(s, 0, 2) == 1.0
    assert kernel_F(s, 1, 2) == 0.0
    assert kernel_F(s, 0, 1) == 0.5


def test_extended_arithmetic():
    assert mayer_factor(INF) == -1.0
    assert math.exp(-INF) == 0.0
    assert INF + 3.0 == INF
    assert parse_extended("inf") == INF
    for bad in ["-inf", "nan", float("nan"), -INF, "foo"]:
        with pytest.raises(ValueError):
            parse_extended(bad)


def test_stability_examples():
    assert verify_stability(two_compatible(0.5), 2).ok
    rep = verify_stability(two_compatible(0.4), 2)
    assert not rep.ok
    assert rep.violation == (0, 1)
    assert rep.lhs == -1.0 and rep.rhs == pytest.approx(-0.8)
    nonneg = PolymerSpace(("a", "b"), [1, 1], [[0.0, 2.0], [2.0, 0.0]], [0, 0])
    assert verify_stability(nonneg, 5).ok


def test_stability_checks_repeats_without_self_hard_core():
    # V(a, a) = -1 with B = 0.4: the multiset {a, a} violates stability
    s = PolymerSpace(("a",), [0.1], [[-1.0]], [0.4])
    assert not verify_stability(s, 2).ok
    assert verify_stability(s.with_stability([0.5]), 2).ok
    assert not verify_stability(s.with_stability([0.5]), 3).ok


def test_stability_guard():
    s = PolymerSpace(tuple("abcdef"), np.ones(6), np.zeros((6, 6)), np.zeros(6))
    with pytest.raises(CapacityError):
        verify_stability(s, 8, max_checked=100)
    with pytest.raises(ValueError):
        verify_stability(s, 1)


@given(spaces(max_k=4), st.floats(0, 2))
@settings(max_examples=40)
def test_stability_monotone_in_B(space, extra):
    size = max(2, len(space))
    assert verify_stability(space, size).ok
    assert verify_stability(space.with_stability(space.stability + extra), size).ok


@given(spaces(max_k=5))
@settings(max_examples=40)
def test_kernel_symmetric_nonnegative(space):
    F = space.kernel_matrix()
    assert np.array_equal(F, F.T)
    assert (F >= 0).all()


@given(spaces(max_k=5), st.randoms())
@settings(max_examples=40)
def test_energy_permutation_invariant(space, rnd):
    cfg = [rnd.randrange(len(space)) for _ in range(4)]
    perm = cfg[:]
    rnd.shuffle(perm)
    assert energy(space, cfg) == pytest.approx(energy(space, perm), abs=1e-12) or energy(space, cfg) == INF


def test_validation():
    with pytest.raises(ValueError):
        PolymerSpace(("a", "b"), [1, 1], [[0, 1], [2, 0]], [0, 0])
    with pytest.raises(ValueError):
        PolymerSpace(("a",), [-1], [[0]], [0])
    with pytest.raises(ValueError):
        PolymerSpace(("a",), [1], [[0]], [-0.1])
    with pytest.raises(ValueError):
        PolymerSpace(("a",), [1], [[float("nan")]], [0])
    with pytest.raises(ValueError):
        PolymerSpace(("a", "a"), [1, 1], np.zeros((2, 2)), [0, 0])
    s = hard_core_space(2, 0.1)
    with pytest.raises(ValueError):
        s.activity[0] = 2.0


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=True)


@given(st.integers(1, 4).flatmap(lambda k: st.tuples(
    st.just(k),
    st.lists(st.floats(0, 1e3), min_size=k, max_size=k),
    st.lists(st.floats(0, 1e3), min_size=k, max_size=k),
    st.lists(st.one_of(finite, st.just(INF)), min_size=k * (k + 1) // 2, max_size=k * (k + 1) // 2),
)))
def test_json_round_trip_bit_exact(data):
    k, act, B, vals = data
    V = np.zeros((k, k))
    it = iter(vals)
    for i in range(k):
        for j in range(i, k):
            V[i, j] = V[j, i] = next(it)
    s = PolymerSpace(tuple(f"p{i}" for i in range(k)), act, V, B)
    t = loads_model(dumps_model(s))
    assert t.ids == s.ids
    assert np.array_equal(t.potential, s.potential)
    assert np.array_equal(t.activity, s.activity)
    assert np.array_equal(t.stability, s.stability)
    assert dumps_model(t) == dumps_model(s)


def test_default_potential_and_sparse_table():
    text = json.dumps({"polymers": ["a", "b", "c"], "activity": {"a": 0.1, "b": 0.2, "c": 0.3},
                       "potential": [["a", "b", -0.25]], "default_potential": "inf"})
    s = loads_model(text)
    assert s.pair(0, 1) == -0.25
    assert s.pair(0, 0) == INF and s.pair(1, 2) == INF
    assert np.array_equal(s.stability, np.zeros(3))


@pytest.mark.parametrize("text, where", [
    ('{"polymers": ["a"],\n "activity": {"a": 0.1},,}', "line 2, column"),
    ('{"polymers": ["a"], "activity": {"a": 0.1}, "potential": [["a", "z", 1]]}', "potential[0]"),
    ('{"polymers": ["a"], "activity": {"a": 0.1}, "potential": [["a", "a", "-inf"]]}', "potential[0]"),
    ('{"polymers": ["a"], "activity": {"b": 0.1}}', "unknown ids"),
    ('{"activity": {}}', "polymers"),
    ('{"polymers": ["a"], "activity": {"a": -1}}', "nonnegative"),
])
def test_malformed_models(text, where):
    with pytest.raises(ModelFormatError) as exc:
        loads_model(text)
    assert where in str(exc.value)


def test_restricted_and_hard_core():
    s = random_space(np.random.default_rng(3), 4)
    r = s.restricted([1, 3])
    assert r.ids == ("g1", "g3")
    assert r.pair(0, 1) == s.pair(1, 3)
    h = hard_core_space(3, 0.2, [(0, 1)])
    assert h.incompatible(0, 1) and h.incompatible(2, 2) and not h.incompatible(0, 2)
