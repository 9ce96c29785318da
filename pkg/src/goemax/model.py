"""Source, topology, query, and meta-value models shared by analytics and simulation.

An event is a vector of attributes, each a symmetric discrete-time Markov chain:
the state stays put with probability `stay_prob` and moves to each of the other
`states - 1` states with the common probability `move_prob`. Sensing agents
(ISAs) observe subsets of attributes and talk to monitoring agents (NMAs) over
a shared channel; distances are sampled per ISA/NMA pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

PROB_TOL = 1e-12


@dataclass
class AttributeChain:
    """Symmetric DTMC for one attribute.

    The transition matrix is doubly stochastic, so the stationary distribution
    is uniform over the `states` states. States are 1-based.
    """

    index: int
    states: int
    stay_prob: float
    move_prob: float
    state: int = 1

    def __post_init__(self):
        if self.states < 2:
            raise ValueError(f"attribute {self.index}: need at least 2 states, got {self.states}")
        if not (0.0 <= self.move_prob <= 1.0 and 0.0 <= self.stay_prob <= 1.0):
            raise ValueError(f"attribute {self.index}: probabilities outside [0, 1]")
        resid = self.stay_prob + (self.states - 1) * self.move_prob - 1.0
        if abs(resid) > 1e-9:
            raise ValueError(f"attribute {self.index}: row sum off by {resid:.3e}")
        if not 1 <= self.state <= self.states:
            raise ValueError(f"attribute {self.index}: state {self.state} outside [1, {self.states}]")

    @classmethod
    def from_stay(cls, index: int, states: int, stay_prob: float, state: int = 1) -> "AttributeChain":
        move = (1.0 - stay_prob) / (states - 1)
        return cls(index=index, states=states, stay_prob=stay_prob, move_prob=move, state=state)

    @property
    def change_probability(self) -> float:
        """Per-step probability of leaving the current state."""
        return (self.states - 1) * self.move_prob

    def transition_matrix(self) -> np.ndarray:
        t = np.full((self.states, self.states), self.move_prob)
        np.fill_diagonal(t, self.stay_prob)
        return t

    def step(self, rng: np.random.Generator) -> int:
        """Advance one step and return the new state."""
        u = rng.random()
        if u >= self.stay_prob and self.move_prob > 0.0:
            idx = int((u - self.stay_prob) / self.move_prob)
            idx = min(idx, self.states - 2)
            # idx enumerates the other states, skipping the current one
            self.state = idx + 1 if idx + 1 < self.state else idx + 2
        return self.state


@dataclass
class Topology:
    """ISA/NMA placement and observability.

    distances: (K, M) meters, all values to a given NMA pairwise distinct.
    members: (K, N) boolean, members[k, n] true iff ISA k observes attribute n.
    obs_accuracy: (K, N) probability an observation of attribute n by ISA k is correct.
    """

    distances: np.ndarray
    members: np.ndarray
    obs_accuracy: np.ndarray
    height: float = 0.0

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=float)
        self.members = np.asarray(self.members, dtype=bool)
        self.obs_accuracy = np.asarray(self.obs_accuracy, dtype=float)
        if self.distances.ndim != 2:
            raise ValueError("distances must be a (K, M) matrix")
        if self.members.shape[0] != self.distances.shape[0]:
            raise ValueError("members and distances disagree on K")
        if self.obs_accuracy.shape != self.members.shape:
            raise ValueError("obs_accuracy must match members' shape")
        if np.any(self.distances < self.height - PROB_TOL):
            raise ValueError("a distance is below the deployment height")
        if np.any((self.obs_accuracy < 0) | (self.obs_accuracy > 1)):
            raise ValueError("obs_accuracy outside [0, 1]")

    @property
    def num_isas(self) -> int:
        return self.distances.shape[0]

    @property
    def num_nmas(self) -> int:
        return self.distances.shape[1]

    @property
    def num_attributes(self) -> int:
        return self.members.shape[1]

    def observers(self, n: int) -> list[int]:
        """Ordered ISA indices able to observe attribute n."""
        return [int(k) for k in np.flatnonzero(self.members[:, n])]

    def observed_attrs(self, k: int) -> list[int]:
        return [int(n) for n in np.flatnonzero(self.members[k])]

    def farthest_nmas(self, k: int, count: int) -> list[int]:
        """The `count` NMAs farthest from ISA k (ties broken by NMA index)."""
        count = min(count, self.num_nmas)
        order = np.lexsort((np.arange(self.num_nmas), -self.distances[k]))
        return [int(m) for m in order[:count]]


@dataclass
class QuerySchedule:
    """One service interval's query: ordered distinct attributes, one per slot."""

    attrs: tuple
    quorum: int

    def __post_init__(self):
        self.attrs = tuple(int(n) for n in self.attrs)
        if len(set(self.attrs)) != len(self.attrs):
            raise ValueError("queried attributes must be distinct within an interval")
        if self.quorum < 1:
            raise ValueError("decode quorum must be at least 1")

    @property
    def num_slots(self) -> int:
        return len(self.attrs)


@dataclass
class MetaValueModel:
    """Beta-distributed usefulness score attached to generated updates."""

    shape_a: float = 2.0
    shape_b: float = 2.0

    def __post_init__(self):
        if self.shape_a <= 0 or self.shape_b <= 0:
            raise ValueError("beta shape parameters must be positive")

    @property
    def mean(self) -> float:
        return self.shape_a / (self.shape_a + self.shape_b)

    def cdf(self, v):
        return special.betainc(self.shape_a, self.shape_b, np.clip(v, 0.0, 1.0))

    def inverse_cdf(self, u):
        """v with cdf(v) = u, resolved numerically to better than 1e-10."""
        return special.betaincinv(self.shape_a, self.shape_b, np.clip(u, 0.0, 1.0))

    def sample(self, rng: np.random.Generator, size=None):
        return rng.beta(self.shape_a, self.shape_b, size=size)


def meta_value_inverse_cdf(model: MetaValueModel, u: float) -> float:
    return float(model.inverse_cdf(u))


def meta_value_inverse_bisect(model: MetaValueModel, u: float, tol: float = 1e-12) -> float:
    """Independent inverse via root bracketing; used to cross-check inverse_cdf."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return float(optimize.brentq(lambda v: model.cdf(v) - u, 0.0, 1.0, xtol=tol))


def _distinct_per_nma(distances: np.ndarray, jitter: float, rng: np.random.Generator) -> np.ndarray:
    """Nudge distances so each NMA sees pairwise-distinct values (avoids the
    degenerate partial-fraction geometry)."""
    d = distances.copy()
    for m in range(d.shape[1]):
        for _ in range(100):
            col = np.sort(d[:, m])
            if d.shape[0] < 2 or np.min(np.diff(col)) > jitter:
                break
            d[:, m] = d[:, m] + rng.uniform(0.0, jitter * d.shape[0], size=d.shape[0])
        else:
            raise RuntimeError("could not de-duplicate distances")
    return d


def sample_topology(
    num_isas: int,
    num_nmas: int,
    num_attributes: int,
    rng: np.random.Generator,
    *,
    height: float = 7.0,
    horizontal_std: float = 60.0,
    observe_prob: float = 0.7,
    obs_accuracy: float = 0.8,
    jitter: float = 1e-6,
) -> Topology:
    """Draw a random deployment.

    Horizontal offsets are |Normal(0, horizontal_std^2)| per ISA/NMA pair and
    combined with the height in quadrature. Each ISA observes each attribute
    independently with `observe_prob`; attributes with no observer are resampled.
    """
    if num_isas < 1 or num_nmas < 1:
        raise ValueError("need at least one ISA and one NMA")
    horizontal = np.abs(rng.normal(0.0, horizontal_std, size=(num_isas, num_nmas)))
    distances = np.hypot(horizontal, height)
    distances = _distinct_per_nma(distances, jitter, rng)

    members = rng.random((num_isas, num_attributes)) < observe_prob
    for n in range(num_attributes):
        while not members[:, n].any():
            members[:, n] = rng.random(num_isas) < observe_prob

    acc = np.full((num_isas, num_attributes), float(obs_accuracy))
    return Topology(distances=distances, members=members, obs_accuracy=acc, height=height)
