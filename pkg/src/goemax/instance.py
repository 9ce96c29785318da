"""Problem instance: one service interval's full analytic model.

Couples the topology, attribute chains, query schedule, link budget, and
feature maps; caches the per-attribute failure enumerations; and evaluates
the effectiveness features, objective, and utility constraint for a given
activation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from goemax.channel import LinkBudget
from goemax.effectiveness import (
    ENUMERATION_CAP,
    FailureModel,
    FeatureReport,
    GoEFunctions,
    build_failure_model,
    steady_state_error,
    usefulness_sum,
    resource_sum,
)
from goemax.model import AttributeChain, MetaValueModel, QuerySchedule, Topology


@dataclass
class ProblemInstance:
    topo: Topology
    chains: list
    schedule: QuerySchedule
    budget: LinkBudget
    funcs: GoEFunctions
    meta: MetaValueModel
    euu_min: float
    failure_mode: str = "normalized"
    enumeration_cap: int = ENUMERATION_CAP
    fail_factor_fns: dict = field(default_factory=dict)
    _models: dict = field(default_factory=dict, repr=False)
    _values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.euu_min <= 0:
            raise ValueError("EUU floor must be positive")
        if len(self.chains) != self.topo.num_attributes:
            raise ValueError("need one chain per attribute")
        for n in self.schedule.attrs:
            if not 0 <= n < self.topo.num_attributes:
                raise ValueError(f"queried attribute {n} out of range")
        if self.schedule.quorum > self.topo.num_nmas:
            raise ValueError("decode quorum exceeds the number of NMAs")

    @property
    def values(self) -> np.ndarray:
        """Analytic meta-value matrix: the distribution mean everywhere."""
        if self._values is None:
            self._values = np.full(
                (self.topo.num_isas, self.schedule.num_slots), self.meta.mean
            )
        return self._values

    def model(self, n: int) -> FailureModel:
        if n not in self._models:
            self._models[n] = build_failure_model(
                n,
                self.topo,
                self.budget,
                self.schedule,
                mode=self.failure_mode,
                cap=self.enumeration_cap,
                fail_factor_fn=self.fail_factor_fns.get(n),
            )
        return self._models[n]

    # --- activation parameterizations -------------------------------------

    def expand_alpha(self, theta, tie_mode: str) -> np.ndarray:
        """Expand a decision vector into a full (K, N) activation matrix."""
        alpha = np.zeros((self.topo.num_isas, self.topo.num_attributes))
        if tie_mode == "full":
            a = float(np.asarray(theta).reshape(()))
            for n in self.schedule.attrs:
                alpha[self.topo.observers(n), n] = a
        elif tie_mode == "per-attribute":
            theta = np.asarray(theta, dtype=float)
            for i, n in enumerate(self.schedule.attrs):
                alpha[self.topo.observers(n), n] = theta[i]
        elif tie_mode == "none":
            theta = np.asarray(theta, dtype=float)
            pos = 0
            for n in self.schedule.attrs:
                obs = self.topo.observers(n)
                alpha[obs, n] = theta[pos : pos + len(obs)]
                pos += len(obs)
        else:
            raise ValueError(f"unknown tie mode {tie_mode!r}")
        return alpha

    def theta_size(self, tie_mode: str) -> int:
        if tie_mode == "full":
            return 1
        if tie_mode == "per-attribute":
            return self.schedule.num_slots
        if tie_mode == "none":
            return sum(len(self.topo.observers(n)) for n in self.schedule.attrs)
        raise ValueError(f"unknown tie mode {tie_mode!r}")

    # --- feature evaluation -------------------------------------------------

    def failure_of(self, n: int, alpha: np.ndarray) -> float:
        model = self.model(n)
        return model.failure(np.asarray(alpha)[model.observers, n])

    def pe_of(self, n: int, alpha: np.ndarray) -> float:
        return steady_state_error(self.chains[n], self.failure_of(n, alpha))

    def features(self, alpha: np.ndarray) -> FeatureReport:
        alpha = np.asarray(alpha, dtype=float)
        f1 = usefulness_sum(alpha, self.values, self.schedule, self.topo)
        f2 = resource_sum(alpha, self.values, self.schedule, self.topo, self.funcs)
        attrs = self.schedule.attrs
        failure = np.array([self.failure_of(n, alpha) for n in attrs])
        success = 1.0 - failure
        pe = np.array(
            [steady_state_error(self.chains[n], e) for n, e in zip(attrs, failure)]
        )
        prod_s = float(np.prod(success))
        return FeatureReport(
            f1=f1,
            f2=f2,
            ede=f1 * float(np.sum(pe)),
            erc=f2 * prod_s,
            euu=f1 * prod_s,
            pe=pe,
            failure=failure,
            success=success,
        )

    def failure_batch(self, n: int, alpha_kn: np.ndarray) -> np.ndarray:
        """Delivery failure for a batch of observer-activation rows (G, kappa)."""
        model = self.model(n)
        alpha_kn = np.atleast_2d(np.asarray(alpha_kn, dtype=float))
        out = np.empty(len(alpha_kn))
        chunk = max(1, int(2**22 // max(model.act.size, 1)))
        for lo in range(0, len(alpha_kn), chunk):
            a = alpha_kn[lo : lo + chunk, None, :]
            w = np.prod(np.where(model.act[None, :, :], a, 1.0 - a), axis=2)
            out[lo : lo + chunk] = w @ model._wqff
        if model.mode == "as-printed":
            out /= 2.0 ** len(model.observers)
        return np.clip(out, 0.0, 1.0)

    def features_batch(self, thetas: np.ndarray, tie_mode: str) -> dict:
        """Vectorized features for a (G, dims) batch of decision vectors."""
        from goemax.effectiveness import steady_state_error_raw

        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        g_count = len(thetas)
        attrs = list(self.schedule.attrs)
        mean_v = self.meta.mean
        pv = float(self.funcs.f_rho.per_value(mean_v))
        f1 = np.zeros(g_count)
        f2 = np.zeros(g_count)
        pe_sum = np.zeros(g_count)
        prod_s = np.ones(g_count)
        pe_cols = []
        fail_cols = []
        pos = 0
        for i, n in enumerate(attrs):
            obs = self.topo.observers(n)
            if tie_mode == "full":
                a_kn = np.repeat(thetas[:, [0]], len(obs), axis=1)
            elif tie_mode == "per-attribute":
                a_kn = np.repeat(thetas[:, [i]], len(obs), axis=1)
            elif tie_mode == "none":
                a_kn = thetas[:, pos : pos + len(obs)]
                pos += len(obs)
            else:
                raise ValueError(f"unknown tie mode {tie_mode!r}")
            f1 += mean_v * a_kn.sum(axis=1)
            f2 += np.sum(self.funcs.h(a_kn * pv), axis=1)
            fail = self.failure_batch(n, a_kn)
            chain = self.chains[n]
            pe = steady_state_error_raw(chain.states, chain.move_prob, fail)
            pe_sum += pe
            prod_s *= 1.0 - fail
            pe_cols.append(pe)
            fail_cols.append(fail)
        ede = f1 * pe_sum
        erc = f2 * prod_s
        euu = f1 * prod_s
        gap = self.funcs.g3(euu) - self.euu_min
        objective = self.funcs.w1 * self.funcs.g1(ede) + self.funcs.w2 * self.funcs.g2(erc)
        return {
            "f1": f1,
            "f2": f2,
            "ede": ede,
            "erc": erc,
            "euu": euu,
            "gap": gap,
            "objective": objective,
            "pe": np.column_stack(pe_cols),
            "failure": np.column_stack(fail_cols),
        }

    def objective(self, alpha: np.ndarray, feats: FeatureReport = None) -> float:
        """Weighted error/resource cost at the instance weights."""
        feats = feats or self.features(alpha)
        return float(
            self.funcs.w1 * self.funcs.g1(feats.ede) + self.funcs.w2 * self.funcs.g2(feats.erc)
        )

    def constraint_value(self, alpha: np.ndarray, feats: FeatureReport = None) -> float:
        feats = feats or self.features(alpha)
        return float(self.funcs.g3(feats.euu))

    def constraint_gap(self, alpha: np.ndarray, feats: FeatureReport = None) -> float:
        return self.constraint_value(alpha, feats) - self.euu_min

    def with_fail_factor_fns(self, fns: dict) -> "ProblemInstance":
        """Copy of this instance with per-attribute channel factors overridden
        (used by the local estimation pipeline)."""
        return ProblemInstance(
            topo=self.topo,
            chains=self.chains,
            schedule=self.schedule,
            budget=self.budget,
            funcs=self.funcs,
            meta=self.meta,
            euu_min=self.euu_min,
            failure_mode=self.failure_mode,
            enumeration_cap=self.enumeration_cap,
            fail_factor_fns=fns,
        )
