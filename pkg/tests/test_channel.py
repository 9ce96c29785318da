import math

import numpy as np
import pytest

from goemax.channel import (
    DegenerateGeometry,
    LinkBudget,
    bound_from_rates,
    success_from_rates,
    success_from_rates_batch,
    success_from_rates_expanded,
    success_mc_from_rates,
    success_probability,
    success_probability_bound,
    success_probability_mc,
)
from goemax.model import Topology


def make_topo(distances):
    d = np.asarray(distances, dtype=float)
    k, _ = d.shape
    return Topology(
        distances=d,
        members=np.ones((k, 1), dtype=bool),
        obs_accuracy=np.full((k, 1), 0.8),
    )


def random_rates(rng, nc, ni, lo=0.05, hi=3.0):
    return rng.uniform(lo, hi, nc), rng.uniform(lo, hi, ni)


def test_single_link_exponential():
    # lam * gamma_th * noise = 1 -> exp(-1)
    assert success_from_rates([1.0], [], 10.0, 0.1) == pytest.approx(math.exp(-1), abs=1e-15)


def test_single_link_matches_formula_via_topology():
    budget = LinkBudget(path_loss_exponent=2.0, noise_w=1e-13, gamma_th=10.0, tx_power_w=0.01)
    topo = make_topo([[25.0]])
    expected = math.exp(-budget.gamma_th * budget.noise_w * 25.0**2 / budget.tx_power_w)
    assert success_probability(0, 0, set(), set(), budget, topo) == pytest.approx(expected, abs=1e-12)


def test_noise_free_limit():
    assert success_from_rates([1e-9], [], 10.0, 1e-15) == pytest.approx(1.0, abs=1e-12)


def test_threshold_vanishes_mc():
    # hold physical interferer rate nu fixed; omega = nu / gamma_th
    rng = np.random.default_rng(0)
    gamma_th = 1e-9
    est = success_mc_from_rates([1.0, 2.0], [0.5 / gamma_th], gamma_th, 1e-12, 20000, rng)
    assert est == pytest.approx(1.0, abs=1e-4)


def test_spec_instance_against_mc():
    rng = np.random.default_rng(1)
    args = ([1e-3, 2e-3], [5e-4], 10.0, 1e-15)
    closed = success_from_rates(*args)
    assert closed == pytest.approx(0.4666666666666666, abs=1e-12)
    est = success_mc_from_rates(*args, draws=10**6, rng=rng)
    assert abs(closed - est) < 3e-3


def test_product_equals_expanded_double_sum():
    rng = np.random.default_rng(2)
    for _ in range(50):
        lam, om = random_rates(rng, rng.integers(1, 5), rng.integers(1, 5))
        g = rng.uniform(0.5, 10.0)
        n = rng.uniform(1e-3, 0.3)
        a = success_from_rates(lam, om, g, n)
        b = success_from_rates_expanded(lam, om, g, n)
        assert a == pytest.approx(b, abs=1e-9)


def test_batch_matches_scalar():
    rng = np.random.default_rng(3)
    lam = rng.uniform(0.05, 2.0, (40, 3))
    om = rng.uniform(0.05, 2.0, (40, 2))
    batch = success_from_rates_batch(lam, om, 5.0, 0.01)
    for i in range(40):
        assert batch[i] == pytest.approx(success_from_rates(lam[i], om[i], 5.0, 0.01), abs=1e-12)


def test_mc_agreement_randomized():
    # |closed - mc| <= 3 binomial sigma on >= 95% of instances
    rng = np.random.default_rng(4)
    draws = 10**5
    bad = 0
    trials = 40
    for _ in range(trials):
        lam, om = random_rates(rng, rng.integers(1, 4), rng.integers(0, 4))
        g = rng.uniform(0.5, 10.0)
        n = rng.uniform(1e-3, 0.3)
        closed = success_from_rates(lam, om, g, n)
        est = success_mc_from_rates(lam, om, g, n, draws, rng)
        sigma = math.sqrt(max(closed * (1 - closed), 1e-9) / draws)
        if abs(closed - est) > 3 * sigma:
            bad += 1
    assert bad <= math.ceil(0.05 * trials)


def test_monotone_in_threshold_and_interference():
    rng = np.random.default_rng(5)
    for _ in range(20):
        lam, om = random_rates(rng, 2, 2)
        n = 0.01
        g = rng.uniform(0.5, 5.0)
        base = success_from_rates(lam, om, g, n)
        assert success_from_rates(lam, om, g * 1.2, n) <= base + 1e-12
        # raising an interferer's power means lowering its omega rate
        om2 = om.copy()
        om2[0] *= 0.8
        assert success_from_rates(lam, om2, g, n) <= base + 1e-12


def test_set_permutation_invariance():
    lam = np.array([0.3, 1.1, 2.2])
    om = np.array([0.7, 0.2])
    a = success_from_rates(lam, om, 4.0, 0.02)
    b = success_from_rates(lam[::-1], om[::-1], 4.0, 0.02)
    assert a == pytest.approx(b, abs=1e-12)


def test_degenerate_rates_raise():
    with pytest.raises(DegenerateGeometry):
        success_from_rates([1.0, 1.0], [], 10.0, 0.01)
    with pytest.raises(DegenerateGeometry):
        success_from_rates([1.0], [0.5, 0.5], 10.0, 0.01)


def test_disjointness_enforced():
    budget = LinkBudget(path_loss_exponent=2.0, noise_w=1e-13, gamma_th=10.0, tx_power_w=0.01)
    topo = make_topo([[10.0], [20.0], [30.0]])
    with pytest.raises(ValueError):
        success_probability(0, 0, {1}, {1}, budget, topo)
    with pytest.raises(ValueError):
        success_probability(0, 0, set(), {0}, budget, topo)


def test_bound_dominates_in_valid_regime():
    # set sizes where the bound summand does not collapse (see ledger)
    rng = np.random.default_rng(6)
    for nc, ni in [(1, 0), (1, 1), (2, 0), (3, 0)]:
        for _ in range(25):
            lam, om = random_rates(rng, nc, ni, lo=1e-4, hi=1e-2)
            closed = success_from_rates(lam, om, 10.0, 1e-15)
            assert bound_from_rates(lam, om) >= closed - 1e-12


def test_bound_clamps_to_one():
    assert bound_from_rates([1e-6], [1e-6]) == 1.0


def test_bound_expectation_over_collaborator_sets():
    budget = LinkBudget(path_loss_exponent=2.0, noise_w=1e-15, gamma_th=10.0, tx_power_w=1e6)
    topo = make_topo([[10.0], [12.0], [15.0], [20.0]])
    dist = [(0.5, set()), (0.5, {1})]
    b = success_probability_bound(0, 0, dist, {3}, budget, topo)
    assert 0.0 <= b <= 1.0
    with pytest.raises(ValueError):
        success_probability_bound(0, 0, [(0.4, set())], {3}, budget, topo)


def test_mc_via_topology_matches_closed():
    rng = np.random.default_rng(7)
    budget = LinkBudget(path_loss_exponent=3.0, noise_w=1e-10, gamma_th=3.0, tx_power_w=0.05)
    topo = make_topo([[15.0], [20.0], [30.0], [40.0]])
    closed = success_probability(0, 0, {1}, {2, 3}, budget, topo)
    est = success_probability_mc(0, 0, {1}, {2, 3}, budget, topo, 200000, rng)
    assert abs(closed - est) < 0.01
