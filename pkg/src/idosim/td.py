"""Online temporal-difference evaluation of the long-term risks.

Two tabular schemes estimate the discounted risks from simulated
inspection experience. The consolidated scheme keys its table by the full
m-tuple of labels in a block and must wait for the block to complete; the
aggregated scheme keys by the leading label alone, so it needs only the
inspected alert of each block and works for arbitrarily long periods.

The learning rate for a table entry visited for the n-th time is
``k_c / (n - 1 + k_c)``: it starts at 1 and decays like ``k_c / n``, which
keeps the usual divergent-sum / convergent-square-sum conditions satisfied
for every positive ``k_c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attack import AttackType, sample_trajectory
from .consolidation import AmStrategy, Scenario, check_state_capacity
from .errors import ConfigError
from .operator import sample_decision, stage_cost
from .rng import stream

CONSOLIDATED = "consolidated"
AGGREGATED = "aggregated"


@dataclass
class LearningRateSchedule:
    """Visit-count based step sizes, one counter per table index."""

    k_c: float
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.k_c > 0.0:
            raise ConfigError(f"kc: must be > 0, got {self.k_c}")

    def rate(self, index) -> float:
        """Step size for the next update of ``index`` (counts the visit)."""
        n = self.counts.get(index, 0) + 1
        self.counts[index] = n
        return self.k_c / (n - 1 + self.k_c)

    def peek(self, index) -> float:
        n = self.counts.get(index, 0) + 1
        return self.k_c / (n - 1 + self.k_c)


@dataclass
class TdEstimate:
    """Running tabular estimate for one scheme.

    Entries default to zero until first visited; ``stage`` counts the
    updates applied.
    """

    scheme: str
    schedule: LearningRateSchedule
    values: dict = field(default_factory=dict)
    stage: int = 0

    def value(self, index) -> float:
        return self.values.get(index, 0.0)


def _td_step(est: TdEstimate, index, next_index, cost: float,
             gamma: float) -> float:
    alpha = est.schedule.rate(index)
    target = cost + gamma * est.value(next_index)
    est.values[index] = (1.0 - alpha) * est.value(index) + alpha * target
    est.stage += 1
    return alpha


def td_update_consolidated(est: TdEstimate, x, x_next, cost: float,
                           gamma: float) -> float:
    """Move the visited block's estimate toward cost + discounted successor
    estimate; every other entry is untouched. Returns the step size used."""
    if est.scheme != CONSOLIDATED:
        raise ValueError(f"estimate tracks {est.scheme!r}, expected consolidated")
    return _td_step(est, tuple(x), tuple(x_next), cost, gamma)


def td_update_aggregated(est: TdEstimate, label, next_label, cost: float,
                         gamma: float) -> float:
    """Same recursion keyed by the leading label only, so the update can run
    as soon as the next highlighted alert arrives."""
    if est.scheme != AGGREGATED:
        raise ValueError(f"estimate tracks {est.scheme!r}, expected aggregated")
    return _td_step(est, int(label), int(next_label), cost, gamma)


@dataclass
class TdSession:
    """Everything one seeded learning run produced."""

    estimate: TdEstimate
    #: per-update history: stage h, visited index, new estimate, step size
    history_stage: np.ndarray
    history_index: list
    history_estimate: np.ndarray
    history_alpha: np.ndarray
    seed: int
    scheme: str

    def trace_rows(self, limit: int | None = 10_000):
        """(stage, scheme, index, estimate, learning_rate) rows, subsampled
        evenly when the session is longer than ``limit``."""
        n = self.history_stage.size
        if limit is not None and n > limit:
            picks = np.unique(np.linspace(0, n - 1, limit).astype(int))
        else:
            picks = np.arange(n)
        for i in picks:
            yield (int(self.history_stage[i]), self.scheme,
                   self.history_index[i], float(self.history_estimate[i]),
                   float(self.history_alpha[i]))

    def final_values(self) -> dict:
        return dict(self.estimate.values)

    def index_history(self, index) -> np.ndarray:
        mask = np.array([ix == index for ix in self.history_index])
        return self.history_estimate[mask]

    def last_decile_variance(self) -> dict:
        """Variance of each entry's estimates over the final tenth of the
        stages; high values flag a step size that never settled."""
        cut = int(0.9 * self.history_stage.size)
        out = {}
        for index in self.estimate.values:
            vals = [self.history_estimate[i]
                    for i in range(cut, self.history_stage.size)
                    if self.history_index[i] == index]
            out[index] = float(np.var(vals)) if len(vals) > 1 else 0.0
        return out


def _index_name(scenario: Scenario, scheme: str, index) -> str:
    names = scenario.attack.labels.names
    if scheme == AGGREGATED:
        return names[index]
    return "-".join(names[s] for s in index)


def run_td_session(scenario: Scenario, strategy: AmStrategy, scheme: str,
                   gamma: float, k_c: float, stages: int, seed: int,
                   stream_index: int = 0) -> TdSession:
    """Simulate ``stages`` inspection stages and learn online from them.

    Each stage draws the operator's decision from the block's realized
    inspection time and charges the realized cost: the uncertainty cost of
    the dismissed alerts plus the sampled decision's cost at the inspected
    alert. The estimate is updated immediately from the observed pair of
    successive indices, so the run never needs the model's probabilities.
    """
    if scheme not in (CONSOLIDATED, AGGREGATED):
        raise ConfigError(f"scheme: expected consolidated|aggregated, got {scheme!r}")
    if stages < 0:
        raise ConfigError(f"stages: must be >= 0, got {stages}")
    m = strategy.period
    if scheme == CONSOLIDATED:
        check_state_capacity(scenario.n_labels, m, with_types=False)

    est = TdEstimate(scheme=scheme, schedule=LearningRateSchedule(k_c=k_c))
    hist_stage = np.empty(stages, dtype=np.int64)
    hist_index: list = [None] * stages
    hist_value = np.empty(stages)
    hist_alpha = np.empty(stages)
    if stages == 0:
        return TdSession(est, hist_stage, hist_index, hist_value, hist_alpha,
                         seed, scheme)

    horizon = (stages + 1) * m
    trajectory = sample_trajectory(scenario.attack, horizon, seed,
                                   stream_index=stream_index)
    decision_rng = stream(seed, stream_index + 1)
    costs = scenario.operator.costs

    labels = trajectory.label
    types = trajectory.attack_type
    tau = trajectory.inter_arrival

    for h in range(stages):
        k0 = h * m
        block = slice(k0, k0 + m)
        inspection_time = float(tau[block].sum())
        lead_label = int(labels[k0])
        lead_type = AttackType(int(types[k0]))

        decision = sample_decision(scenario.operator.thresholds, lead_label,
                                   lead_type, inspection_time, decision_rng)
        observed = stage_cost(costs, decision, lead_label, lead_type)
        for j in range(1, m):
            observed += costs.uncertainty_cost(int(labels[k0 + j]),
                                               AttackType(int(types[k0 + j])))

        if scheme == CONSOLIDATED:
            x = tuple(int(s) for s in labels[block])
            x_next = tuple(int(s) for s in labels[k0 + m:k0 + 2 * m])
            alpha = td_update_consolidated(est, x, x_next, observed, gamma)
            index = x
        else:
            next_label = int(labels[k0 + m])
            alpha = td_update_aggregated(est, lead_label, next_label,
                                         observed, gamma)
            index = lead_label

        hist_stage[h] = h
        hist_index[h] = index
        hist_value[h] = est.value(index)
        hist_alpha[h] = alpha

    return TdSession(est, hist_stage, hist_index, hist_value, hist_alpha,
                     seed, scheme)


@dataclass(frozen=True)
class SessionMetrics:
    """Oracle-relative diagnostics for one session."""

    final_bias: float
    last_decile_variance: float
    per_index_error: dict

    @staticmethod
    def compute(session: TdSession, oracle: dict) -> "SessionMetrics":
        errors = {}
        for index, target in oracle.items():
            errors[index] = abs(session.estimate.value(index) - target)
        variances = session.last_decile_variance()
        mean_var = float(np.mean(list(variances.values()))) if variances else 0.0
        bias = float(np.mean(list(errors.values()))) if errors else 0.0
        return SessionMetrics(final_bias=bias, last_decile_variance=mean_var,
                              per_index_error=errors)
