"""Effectiveness features: usefulness sums, delivery-failure probability,
steady-state discrepancy error, and the EDE / ERC / EUU composites.

The delivery-failure probability for one attribute enumerates every split of
its observers into inactive / active-correct / active-wrong sets. Each split
carries its activation weight, its observation-accuracy weight, and a channel
failure factor: the probability that none of the targeted NMAs decodes the
coalition's codeword under interference from the wrong-observation speakers.
The targeted set is the union over active-correct ISAs of the quorum+1 NMAs
farthest from each (each NMA counted once; see the decisions ledger for the
grouping choice).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from goemax.channel import LinkBudget, success_from_rates
from goemax.model import AttributeChain, QuerySchedule, Topology

ENUMERATION_CAP = 12


class EnumerationTooLarge(ValueError):
    """Observer set too large for exhaustive subset enumeration."""


@dataclass
class ExpMap:
    """g(x) = exp(kappa * x) - 1: positive, increasing, invertible on [0, inf)."""

    kappa: float = 1.0

    def __call__(self, x):
        return np.expm1(self.kappa * x)

    def inverse(self, y):
        return np.log1p(y) / self.kappa

    def deriv(self, x):
        return self.kappa * np.exp(self.kappa * x)

    def dderiv(self, x):
        return self.kappa**2 * np.exp(self.kappa * x)


@dataclass
class LinearMap:
    """h(x) = slope * x."""

    slope: float = 1.0

    def __call__(self, x):
        return self.slope * x

    def inverse(self, y):
        return y / self.slope

    def deriv(self, x):
        return self.slope

    def dderiv(self, x):
        return 0.0


@dataclass
class PowerLaw:
    """f(v) = scale * v^exponent; transmit power as a function of usefulness."""

    scale: float = 0.1
    exponent: float = 3.0

    def __call__(self, v):
        return self.scale * v**self.exponent

    def per_value(self, v):
        """f(v) / v with the removable v = 0 singularity handled."""
        v = np.asarray(v, dtype=float)
        out = self.scale * np.where(v > 0, v, 1.0) ** (self.exponent - 1.0)
        out = np.where(v > 0, out, 0.0)
        return out if out.ndim else float(out)


@dataclass
class GoEFunctions:
    """Concrete feature maps and weights of the effectiveness metric."""

    g1: ExpMap = field(default_factory=ExpMap)
    g2: ExpMap = field(default_factory=ExpMap)
    g3: ExpMap = field(default_factory=ExpMap)
    h: LinearMap = field(default_factory=LinearMap)
    f_rho: PowerLaw = field(default_factory=PowerLaw)
    w1: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.w1 < 1.0:
            raise ValueError("w1 must lie strictly inside (0, 1)")

    @property
    def w2(self) -> float:
        return 1.0 - self.w1

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.w1, self.w2])


@dataclass
class FeatureReport:
    """Analytic features of one activation matrix."""

    f1: float
    f2: float
    ede: float
    erc: float
    euu: float
    pe: np.ndarray
    failure: np.ndarray
    success: np.ndarray

    @property
    def objective_terms(self):
        return self.ede, self.erc


class FailureModel:
    """Cached subset enumeration for one attribute's delivery failure.

    failure(alpha_kn) returns the probability that the attribute misses its
    quorum, as a function of the observers' activation probabilities.
    """

    def __init__(self, observers, wq, act, inact, fail_factors, mode="normalized"):
        self.observers = list(observers)
        self.wq = wq
        self.act = act
        self.inact = inact
        self.fail_factors = fail_factors
        self.mode = mode
        self._wqff = wq * fail_factors
        kappa = len(self.observers)
        self._nact = act.sum(axis=1)
        # tied-activation polynomial: failure(a) = sum_j coeff[j] a^j (1-a)^(kappa-j)
        self._tied_coeff = np.bincount(self._nact, weights=self._wqff, minlength=kappa + 1)
        self._kappa = kappa

    @classmethod
    def build(cls, observers, q_kn, fail_factor_fn, mode="normalized", cap=ENUMERATION_CAP):
        kappa = len(observers)
        if kappa > cap:
            raise EnumerationTooLarge(f"|K_n| = {kappa} exceeds the enumeration cap {cap}")
        codes = np.array(list(itertools.product((0, 1, 2), repeat=kappa)), dtype=np.int8)
        codes = codes.reshape(3**kappa, kappa)
        inact = codes == 0
        corr = codes == 1
        wrong = codes == 2
        q = np.asarray(q_kn, dtype=float)
        wq = np.prod(np.where(corr, q, 1.0) * np.where(wrong, 1.0 - q, 1.0), axis=1)
        ff = np.ones(len(codes))
        for i in range(len(codes)):
            t_idx = tuple(int(observers[j]) for j in np.flatnonzero(corr[i]))
            tp_idx = tuple(int(observers[j]) for j in np.flatnonzero(wrong[i]))
            ff[i] = fail_factor_fn(t_idx, tp_idx)
        return cls(observers, wq, corr | wrong, inact, ff, mode=mode)

    def failure(self, alpha_kn) -> float:
        a = np.asarray(alpha_kn, dtype=float)
        w = np.prod(np.where(self.act, a, 1.0 - a), axis=1)
        total = float(w @ self._wqff)
        if self.mode == "as-printed":
            total /= 2.0**self._kappa
        return min(1.0, max(0.0, total))

    def failure_tied(self, a: float) -> float:
        powers = np.arange(self._kappa + 1)
        total = float(np.sum(self._tied_coeff * a**powers * (1.0 - a) ** (self._kappa - powers)))
        if self.mode == "as-printed":
            total /= 2.0**self._kappa
        return min(1.0, max(0.0, total))

    def failure_forced(self, alpha_kn, k: int, active: bool) -> float:
        """Failure with observer k's activation pinned to 0 or 1."""
        a = np.array(alpha_kn, dtype=float)
        a[self.observers.index(k)] = 1.0 if active else 0.0
        return self.failure(a)

    def subset_weight_total(self, alpha_kn) -> float:
        """Total probability mass of the enumerated splits; 1 by the law of
        total probability (activation binomial times accuracy splits)."""
        a = np.asarray(alpha_kn, dtype=float)
        w = np.prod(np.where(self.act, a, 1.0 - a), axis=1)
        return float(w @ self.wq)


def default_fail_factor_fn(n: int, topo: Topology, budget: LinkBudget, quorum: int):
    """Channel failure factor from a concrete topology: the probability that
    none of the targeted NMAs decodes, with mean-usefulness transmit power."""
    a = budget.path_loss_exponent
    rho = budget.tx_power_w
    farthest = {k: topo.farthest_nmas(k, quorum + 1) for k in range(topo.num_isas)}

    def fn(t_idx, tp_idx):
        if not t_idx:
            return 1.0
        targets = sorted(set().union(*(farthest[k] for k in t_idx)))
        factor = 1.0
        for m in targets:
            lam = np.array([topo.distances[k, m] ** a / rho for k in t_idx])
            om = np.array([topo.distances[k, m] ** a / (budget.gamma_th * rho) for k in tp_idx])
            factor *= 1.0 - success_from_rates(lam, om, budget.gamma_th, budget.noise_w)
        return factor

    return fn


def build_failure_model(
    n: int,
    topo: Topology,
    budget: LinkBudget,
    schedule: QuerySchedule,
    mode: str = "normalized",
    cap: int = ENUMERATION_CAP,
    fail_factor_fn=None,
) -> FailureModel:
    observers = topo.observers(n)
    q_kn = topo.obs_accuracy[observers, n]
    fn = fail_factor_fn or default_fail_factor_fn(n, topo, budget, schedule.quorum)
    return FailureModel.build(observers, q_kn, fn, mode=mode, cap=cap)


def delivery_failure_prob(
    n: int,
    alpha: np.ndarray,
    budget: LinkBudget,
    topo: Topology,
    schedule: QuerySchedule,
    mode: str = "normalized",
    cap: int = ENUMERATION_CAP,
) -> float:
    """Probability that attribute n misses its decode quorum."""
    if mode not in ("normalized", "as-printed"):
        raise ValueError(f"unknown failure mode {mode!r}")
    model = build_failure_model(n, topo, budget, schedule, mode=mode, cap=cap)
    return model.failure(np.asarray(alpha)[model.observers, n])


def error_chain_probs(states: int, move_prob: float, failure_prob: float):
    """(enter-error, stay-in-error) transition probabilities of the
    discrepancy chain implied by the steady-state error formula."""
    c = (states - 1) * move_prob
    pi01 = failure_prob * c
    pi11 = failure_prob * (1.0 - c + move_prob * (states - 2) / (states - 1))
    return pi01, pi11


def steady_state_error_raw(states: int, move_prob: float, failure_prob):
    """Steady-state probability that the reconstructed attribute disagrees
    with the true one, given the per-occasion delivery failure probability.
    Accepts scalar or array failure probabilities."""
    e = np.asarray(failure_prob, dtype=float)
    c = (states - 1) * move_prob
    d = 2.0 * c - move_prob * (states - 2) / (states - 1) - 1.0
    denom = 1.0 + e * d
    pe = np.where(denom > 0.0, e * c / np.where(denom > 0.0, denom, 1.0), 1.0)
    pe = np.clip(pe, 0.0, 1.0)
    return pe if pe.ndim else float(pe)


def steady_state_error(chain: AttributeChain, failure_prob: float) -> float:
    return steady_state_error_raw(chain.states, chain.move_prob, failure_prob)


def _values_matrix(values, num_isas: int, num_slots: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 0:
        return np.full((num_isas, num_slots), float(v))
    if v.shape != (num_isas, num_slots):
        raise ValueError(f"values must be scalar or ({num_isas}, {num_slots})")
    return v


def usefulness_sum(alpha: np.ndarray, values, schedule: QuerySchedule, topo: Topology) -> float:
    """Activation-weighted usefulness total over the interval's slots."""
    alpha = np.asarray(alpha, dtype=float)
    v = _values_matrix(values, topo.num_isas, schedule.num_slots)
    total = 0.0
    for j, n in enumerate(schedule.attrs):
        for k in topo.observers(n):
            total += alpha[k, n] * v[k, j]
    return total


def resource_sum(alpha: np.ndarray, values, schedule: QuerySchedule, topo: Topology, funcs: GoEFunctions) -> float:
    """Activation-weighted power-cost total over the interval's slots."""
    alpha = np.asarray(alpha, dtype=float)
    v = _values_matrix(values, topo.num_isas, schedule.num_slots)
    total = 0.0
    for j, n in enumerate(schedule.attrs):
        for k in topo.observers(n):
            total += funcs.h(alpha[k, n] * funcs.f_rho.per_value(v[k, j]))
    return total
