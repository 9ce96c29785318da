"""SINR success probability over the shared uplink.

Model: collaborating ISAs transmit the same codeword and their received powers
add; ISAs transmitting a different (wrong) codeword add to the interference.
With unit-mean exponential fading, each received power is exponential with rate
Lambda = d^a / rho, so the combined signal is hypoexponential and

    P(success) = sum_{k' in C_k} w_k' * exp(-Lambda_k' * g_th * noise)
                 * prod_{k'' in I} Omega_k'' / (Omega_k'' + Lambda_k')

with w_k' the partial-fraction weights prod_{i != k'} Lambda_i / (Lambda_i -
Lambda_k') and Omega = d^a / (g_th * rho). The expanded double-sum form (one
term per collaborator/interferer pair) is algebraically identical and kept for
cross-checking; a vectorized Monte Carlo estimator is the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from goemax.model import Topology

RATE_REL_TOL = 1e-9


class DegenerateGeometry(ValueError):
    """Two fading rates coincide; the partial-fraction expansion is singular."""


@dataclass
class LinkBudget:
    """Static channel parameters. Powers in watts, ratios linear."""

    path_loss_exponent: float
    noise_w: float
    gamma_th: float
    tx_power_w: float

    def __post_init__(self):
        if not 2.0 <= self.path_loss_exponent < 7.0:
            raise ValueError(f"path-loss exponent {self.path_loss_exponent} outside [2, 7)")
        if self.noise_w <= 0 or self.gamma_th <= 0 or self.tx_power_w <= 0:
            raise ValueError("noise, threshold, and power must all be positive")


def _check_distinct(values: np.ndarray, what: str):
    if values.size < 2:
        return
    s = np.sort(values)
    gaps = np.diff(s)
    if np.any(gaps <= RATE_REL_TOL * np.maximum(s[1:], 1e-300)):
        raise DegenerateGeometry(f"{what} rates too close for the partial-fraction form")


def success_from_rates(lam, om, gamma_th: float, noise_w: float) -> float:
    """Success probability from signal rates `lam` (own link included) and
    interferer rates `om`. Empty `om` collapses the interference product to 1."""
    lam = np.asarray(lam, dtype=float)
    om = np.asarray(om, dtype=float)
    if lam.size == 0:
        return 0.0
    _check_distinct(lam, "signal")
    _check_distinct(om, "interference")
    total = 0.0
    for a in range(lam.size):
        la = lam[a]
        w = 1.0
        for b in range(lam.size):
            if b != a:
                w *= lam[b] / (lam[b] - la)
        term = w * math.exp(-la * gamma_th * noise_w)
        for o in om:
            term *= o / (o + la)
        total += term
    return min(1.0, max(0.0, total))


def success_from_rates_expanded(lam, om, gamma_th: float, noise_w: float) -> float:
    """Literal double-sum partial-fraction form (one term per signal/interferer
    pair). Identical to success_from_rates; kept as an algebraic cross-check."""
    lam = np.asarray(lam, dtype=float)
    om = np.asarray(om, dtype=float)
    if om.size == 0:
        return success_from_rates(lam, om, gamma_th, noise_w)
    _check_distinct(lam, "signal")
    _check_distinct(om, "interference")
    lam_prod = np.prod(lam)
    om_prod = np.prod(om)
    total = 0.0
    for a in range(lam.size):
        la = lam[a]
        psi_l = 1.0
        for b in range(lam.size):
            if b != a:
                psi_l *= lam[b] - la
        for c in range(om.size):
            oc = om[c]
            psi_o = 1.0
            for d in range(om.size):
                if d != c:
                    psi_o *= om[d] - oc
            total += (
                lam_prod * om_prod / ((la + oc) * la * psi_l * psi_o)
            ) * math.exp(-la * gamma_th * noise_w)
    return min(1.0, max(0.0, total))


def success_from_rates_batch(lam: np.ndarray, om: np.ndarray, gamma_th: float, noise_w: float) -> np.ndarray:
    """Vectorized success probability for a batch of geometries.

    lam: (D, c) signal rates, om: (D, i) interferer rates (i may be 0).
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    d_, c = lam.shape
    out = np.zeros(d_)
    for a in range(c):
        la = lam[:, a]
        w = np.ones(d_)
        for b in range(c):
            if b != a:
                w = w * lam[:, b] / (lam[:, b] - la)
        term = w * np.exp(-la * gamma_th * noise_w)
        if om is not None and om.size:
            om2 = np.atleast_2d(om)
            term = term * np.prod(om2 / (om2 + la[:, None]), axis=1)
        out += term
    return np.clip(out, 0.0, 1.0)


def link_rates(k: int, m: int, collaborators, interferers, budget: LinkBudget, topo: Topology):
    """(lam, om) fading rates for transmitter k to NMA m with the given sets."""
    collaborators = sorted(set(collaborators) - {k})
    interferers = sorted(set(interferers))
    if set(collaborators) & set(interferers) or k in interferers:
        raise ValueError("collaborator and interferer sets must be disjoint from each other and from k")
    a = budget.path_loss_exponent
    rho = budget.tx_power_w
    sig = [k] + collaborators
    lam = np.array([topo.distances[i, m] ** a / rho for i in sig])
    om = np.array([topo.distances[i, m] ** a / (budget.gamma_th * rho) for i in interferers])
    return lam, om


def success_probability(k: int, m: int, collaborators, interferers, budget: LinkBudget, topo: Topology) -> float:
    """Closed-form probability that NMA m decodes the codeword sent by k and
    its collaborators, over interference from `interferers` plus noise."""
    lam, om = link_rates(k, m, collaborators, interferers, budget, topo)
    return success_from_rates(lam, om, budget.gamma_th, budget.noise_w)


def success_mc_from_rates(lam, om, gamma_th: float, noise_w: float, draws: int, rng: np.random.Generator) -> float:
    """Monte Carlo oracle: estimate P(SINR > gamma_th) by direct simulation."""
    lam = np.asarray(lam, dtype=float)
    om = np.asarray(om, dtype=float)
    signal = np.zeros(draws)
    for la in lam:
        signal += rng.standard_exponential(draws) / la
    interference = np.zeros(draws)
    for o in om:
        # interferer received power is exponential with rate d^a / rho = o * gamma_th
        interference += rng.standard_exponential(draws) / (o * gamma_th)
    hits = signal > gamma_th * (interference + noise_w)
    return float(np.mean(hits))


def success_probability_mc(
    k: int,
    m: int,
    collaborators,
    interferers,
    budget: LinkBudget,
    topo: Topology,
    draws: int,
    rng: np.random.Generator,
) -> float:
    if draws < 1:
        raise ValueError("need at least one draw")
    lam, om = link_rates(k, m, collaborators, interferers, budget, topo)
    return success_mc_from_rates(lam, om, budget.gamma_th, budget.noise_w, draws, rng)


def bound_from_rates(lam, om) -> float:
    """Markov-style upper-bound summand for one realized collaborator set.

    Degenerates to ~0 when rates are large (see ledger); valid as a bound in
    the small-rate regime where it typically clamps to 1.
    """
    lam = np.asarray(lam, dtype=float)
    om = np.asarray(om, dtype=float)
    if lam.size == 0:
        return 0.0
    lam_prod = float(np.prod(lam))
    total = 0.0
    if om.size == 0:
        for la in lam:
            total += lam_prod / (la ** 4)
    else:
        om_prod = float(np.prod(om))
        for la in lam:
            for o in om:
                total += lam_prod * om_prod * o / ((la + o) * la ** 3)
    return min(1.0, max(0.0, total))


def success_probability_bound(
    k: int,
    m: int,
    collaborator_distribution,
    interferers,
    budget: LinkBudget,
    topo: Topology,
) -> float:
    """Expected upper bound over a finite distribution of collaborator sets.

    collaborator_distribution: iterable of (probability, collaborator_set).
    """
    total = 0.0
    weight = 0.0
    for prob, collab in collaborator_distribution:
        lam, om = link_rates(k, m, collab, interferers, budget, topo)
        total += prob * bound_from_rates(lam, om)
        weight += prob
    if abs(weight - 1.0) > 1e-9:
        raise ValueError("collaborator-set probabilities must sum to 1")
    return min(1.0, max(0.0, total))
