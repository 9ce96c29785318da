import numpy as np
import pytest

from goemax.model import (
    AttributeChain,
    MetaValueModel,
    QuerySchedule,
    Topology,
    meta_value_inverse_bisect,
    meta_value_inverse_cdf,
    sample_topology,
)


def test_chain_invariants():
    c = AttributeChain.from_stay(0, 10, 0.2)
    assert abs(c.stay_prob + (c.states - 1) * c.move_prob - 1.0) < 1e-12
    assert np.allclose(c.transition_matrix().sum(axis=1), 1.0, atol=1e-12)
    # doubly stochastic -> uniform stationary
    assert np.allclose(c.transition_matrix().sum(axis=0), 1.0, atol=1e-12)


def test_chain_rejects_bad_params():
    with pytest.raises(ValueError):
        AttributeChain(index=0, states=1, stay_prob=1.0, move_prob=0.0)
    with pytest.raises(ValueError):
        AttributeChain(index=0, states=3, stay_prob=0.5, move_prob=0.5)


def test_chain_absorbing_by_symmetry():
    c = AttributeChain.from_stay(0, 2, 1.0, state=2)
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert c.step(rng) == 2


def test_chain_change_frequency():
    # per-slot change frequency approaches (I-1) * p = 1 - stay_prob
    c = AttributeChain.from_stay(0, 10, 0.2)
    rng = np.random.default_rng(1)
    changes = 0
    prev = c.state
    for _ in range(10**5):
        cur = c.step(rng)
        changes += cur != prev
        prev = cur
    assert abs(changes / 10**5 - 0.8) < 0.01


def test_chain_uniform_occupancy():
    c = AttributeChain.from_stay(0, 3, 0.4)
    rng = np.random.default_rng(2)
    counts = np.zeros(3)
    for _ in range(10**5):
        counts[c.step(rng) - 1] += 1
    assert np.all(np.abs(counts / 10**5 - 1 / 3) < 0.01)


def test_distance_pythagorean():
    assert np.hypot(0.0, 7.0) == 7.0
    assert np.hypot(24.0, 7.0) == 25.0


def test_sample_topology_shapes_and_offsets():
    rng = np.random.default_rng(3)
    offsets = []
    for _ in range(25):
        topo = sample_topology(10, 4, 5, rng)
        assert topo.distances.shape == (10, 4)
        assert topo.members.shape == (10, 5)
        assert np.all(topo.distances >= topo.height)
        offsets.append(np.sqrt(topo.distances**2 - topo.height**2))
    # half-normal mean: 60 * sqrt(2/pi) ~= 47.87, checked over 1000 pair samples
    mean_offset = np.mean(offsets)
    assert abs(mean_offset - 47.873073648171925) < 1.5


def test_topology_distinct_distances_per_nma():
    rng = np.random.default_rng(4)
    topo = sample_topology(10, 4, 3, rng)
    for m in range(4):
        col = np.sort(topo.distances[:, m])
        assert np.min(np.diff(col)) > 1e-7


def test_topology_every_attribute_observed():
    rng = np.random.default_rng(5)
    topo = sample_topology(4, 2, 8, rng, observe_prob=0.2)
    for n in range(8):
        assert len(topo.observers(n)) >= 1


def test_farthest_nmas_order():
    topo = Topology(
        distances=np.array([[10.0, 30.0, 20.0]]),
        members=np.ones((1, 1), dtype=bool),
        obs_accuracy=np.ones((1, 1)),
    )
    assert topo.farthest_nmas(0, 2) == [1, 2]
    assert topo.farthest_nmas(0, 5) == [1, 2, 0]


def test_schedule_rejects_duplicates():
    with pytest.raises(ValueError):
        QuerySchedule(attrs=(0, 0), quorum=1)


def test_meta_value_symmetry_and_endpoints():
    m = MetaValueModel(2.0, 2.0)
    assert meta_value_inverse_cdf(m, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert meta_value_inverse_cdf(m, 0.0) == 0.0
    assert meta_value_inverse_cdf(m, 1.0) == 1.0


def test_meta_value_quartile():
    # independent bracketing oracle for the 0.25 quantile of Beta(2, 2)
    m = MetaValueModel(2.0, 2.0)
    oracle = meta_value_inverse_bisect(m, 0.25)
    assert oracle == pytest.approx(0.32635182233306964, abs=1e-10)
    assert meta_value_inverse_cdf(m, 0.25) == pytest.approx(oracle, abs=1e-9)


def test_meta_value_roundtrip_grid():
    m = MetaValueModel(2.0, 2.0)
    grid = np.linspace(0.0, 1.0, 1000)
    back = m.inverse_cdf(m.cdf(grid))
    assert np.max(np.abs(back - grid)) < 1e-8


def test_meta_value_cdf_closed_form():
    # Beta(2, 2) CDF is 3v^2 - 2v^3
    m = MetaValueModel(2.0, 2.0)
    v = np.linspace(0, 1, 101)
    assert np.allclose(m.cdf(v), 3 * v**2 - 2 * v**3, atol=1e-12)
