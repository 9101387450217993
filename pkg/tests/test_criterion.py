import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polymergas.criterion import (
    certified_pinned_bound, check_criterion, iterate_tree_series, kotecky_preiss_holds,
    labeled_tree_series, optimize_mu, planar_tree_series,
)
from polymergas.expansion import pinned_sum
from polymergas.graphs import planar_rooted_trees
from polymergas.model import PolymerSpace, hard_core_space
from polymergas.treebound import ursell_tree_bound

from strategies import random_space, spaces


def test_single_polymer_threshold():
    s = hard_core_space(1, math.exp(-1))
    assert check_criterion(s, [1.0]).ok
    assert not check_criterion(hard_core_space(1, 0.5), [1.0]).ok
    assert not check_criterion(hard_core_space(1, math.exp(-1) * (1 + 1e-12)), [1.0]).ok
    zero = hard_core_space(3, 0.0, [(0, 1)])
    assert check_criterion(zero, [0.0, 2.0, 5.0]).ok


def test_report_fields():
    rep = check_criterion(hard_core_space(2, [0.1, 0.15], [(0, 1)]), [0.5, 0.5])
    assert rep.exponent == pytest.approx([1.0, 1.0])
    assert rep.rhs == pytest.approx(0.5 * np.exp(-1.0))
    d = rep.as_dict(["a", "b"])
    assert d["certificate_found"] and d["polymers"][1]["id"] == "b"
    with pytest.raises(ValueError):
        check_criterion(hard_core_space(1, 0.1), [-1.0])


def test_tail_enters_exponent():
    s = hard_core_space(1, 0.3)
    assert check_criterion(s, [1.0]).ok
    assert not check_criterion(s, [1.0], tail=[0.3]).ok
    assert not check_criterion(s, [1.0], tail=[np.inf]).ok


def test_optimize_single_polymer():
    ok = optimize_mu(hard_core_space(1, 0.3))
    assert ok.report.ok
    assert ok.mu[0] == pytest.approx(1.0, abs=1e-4)
    assert ok.report.log_margin[0] == pytest.approx(math.log(math.exp(-1) / 0.3), abs=1e-8)
    bad = optimize_mu(hard_core_space(1, 0.4))
    assert not bad.report.ok
    assert bad.report.log_margin[0] == pytest.approx(-1 - math.log(0.4), abs=1e-8)


def test_optimize_independent_polymers_decouples():
    both = optimize_mu(hard_core_space(2, [0.3, 0.1]))
    singles = [optimize_mu(hard_core_space(1, r)).report.log_margin[0] for r in (0.3, 0.1)]
    assert both.report.log_margin.min() == pytest.approx(min(singles), abs=1e-8)
    for g, r in enumerate((0.3, 0.1)):
        assert check_criterion(hard_core_space(1, r), [both.mu[g]]).ok


def test_optimize_zero_activity():
    res = optimize_mu(hard_core_space(2, [0.0, 0.2], [(0, 1)]))
    assert res.mu[0] == 0.0 and res.report.ok


@given(spaces(max_k=4, p_hard=1.0))
@settings(max_examples=40, deadline=None)
def test_hard_core_reduces_to_kotecky_preiss(space):
    mu = np.random.default_rng(len(space)).uniform(0, 1, len(space))
    rep = check_criterion(space, mu)
    kp = kotecky_preiss_holds(space, mu)
    assert np.array_equal(rep.passed, kp)
    inc = np.isinf(space.potential)
    assert np.allclose(rep.rhs, mu * np.exp(-(inc * mu).sum(axis=1)), rtol=1e-15)


@given(spaces(max_k=3, rho_max=0.5))
@settings(max_examples=30, deadline=None)
def test_soundness(space):
    res = optimize_mu(space, sweeps=10)
    if not res.report.ok:
        return
    for g in range(len(space)):
        part = space.activity[g] * pinned_sum(space, g, 5).partial_sums
        assert (part <= res.mu[g] * (1 + 1e-12)).all()


def test_trace_single_polymer_oracle():
    r, ell = 0.2, 2
    tr = iterate_tree_series(hard_core_space(1, r), [r], 0, ell)
    assert tr.phi[0] == 1.0
    assert tr.partial_sums[0] == pytest.approx(r)
    assert tr.value == pytest.approx(r * math.exp(r * math.exp(r)), rel=1e-15)
    # direct sum over planar trees of height <= 2
    total = 0.0
    for n in range(0, 13):
        for t in planar_rooted_trees(n):
            if t.height <= ell:
                total += r ** n / math.prod(math.factorial(s) for s in t.branching_factors())
    assert r * total == pytest.approx(tr.value, rel=1e-8)


def test_trace_monotone_and_bounded():
    space = random_space(np.random.default_rng(1), 3, rho_max=0.15)
    res = optimize_mu(space)
    assert res.report.ok
    rt = space.activity * np.exp(space.stability)
    for g in range(3):
        tr = iterate_tree_series(space, rt, g, 30, mu=res.mu)
        assert (np.diff(tr.partial_sums) >= -1e-16).all()
        assert not tr.contradiction
        assert tr.value <= res.mu[g]
    bogus = iterate_tree_series(space, rt, 0, 5, mu=np.full(3, 1e-6))
    assert bogus.contradiction


def test_resummation_matches_labeled_trees_and_iteration():
    rng = np.random.default_rng(9)
    for _ in range(3):
        space = random_space(rng, 2, rho_max=0.05)
        rt = space.activity * np.exp(space.stability)
        for g in range(2):
            planar = planar_tree_series(space, rt, g, 6)
            labeled = labeled_tree_series(space, rt, g, 6)
            assert np.allclose(planar.terms, labeled.terms, rtol=1e-12, atol=1e-300)
            limit = iterate_tree_series(space, rt, g, 60).value
            assert rt[g] * planar.value == pytest.approx(limit, abs=1e-6)


def test_labeled_series_is_the_tree_bound_series():
    # order-n term = (1/n!) sum over tuples of the tree bound with B folded into rho~
    space = random_space(np.random.default_rng(6), 2)
    flat = PolymerSpace(space.ids, space.activity, space.potential, np.zeros(2))
    rt = space.activity * np.exp(space.stability)
    lab = labeled_tree_series(flat, rt, 0, 3).terms
    want = [1.0, sum(ursell_tree_bound(flat, (0, a)) * rt[a] for a in range(2)),
            sum(ursell_tree_bound(flat, (0, a, b)) * rt[a] * rt[b] for a in range(2) for b in range(2)) / 2]
    assert np.allclose(lab[:3], want, rtol=1e-12)


def test_certified_bound_examples():
    s = hard_core_space(1, math.exp(-1))
    cert = certified_pinned_bound(s, [1.0], 0, check_order=8)
    assert cert.bound == 1.0 and cert.consistent
    assert (cert.scaled_partial_sums < 1.0).all()
    small = certified_pinned_bound(hard_core_space(1, 0.1), [1.0], 0, check_order=8)
    assert small.scaled_partial_sums[-1] == pytest.approx(0.1 / 0.9, rel=1e-7)
    zero = certified_pinned_bound(hard_core_space(1, 0.0), [0.7], 0)
    assert zero.bound == 0.7 and zero.scaled_partial_sums[-1] == 0.0
    with pytest.raises(ValueError):
        certified_pinned_bound(hard_core_space(1, 0.5), [1.0], 0)
