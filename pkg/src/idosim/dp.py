"""Exact long-term risk evaluation by discounted value iteration.

Four representations of the discounted cumulative inspection cost are
supported:

* full per-block values indexed by (consolidated state, consolidated type);
* their expectation over types, indexed by consolidated state;
* aggregated values indexed by (leading label, consolidated type), which
  collapse the trailing labels through the block's label chain;
* the doubly reduced form indexed by leading label alone, driven by the
  m-step power of the type-averaged kernel.

The aggregated forms require the reduction hypothesis (inter-arrival
distribution independent of label and type); on such instances they match
the corresponding aggregations of the full tables exactly, so the cheap
low-dimensional iteration can replace the exponential one.

All iterations start from the zero table, sweep synchronously (the update
reads only the previous iterate) and stop when the sup-norm of the update
falls below the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attack import ATTACK_TYPES, AttackType
from .consolidation import (STATE_ENUMERATION_CAP, AmStrategy, Scenario,
                            check_state_capacity, consolidated_cost,
                            enumerate_states, enumerate_types, reduced_cost)
from .errors import ConfigError, ConvergenceError, ModelError


@dataclass(frozen=True)
class DiscountedDpConfig:
    gamma: float
    epsilon: float = 1e-8
    max_iterations: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"discount: must lie in (0, 1), got {self.gamma}")
        if not self.epsilon > 0.0:
            raise ConfigError(f"epsilon: must be > 0, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations: must be >= 1, got {self.max_iterations}")


@dataclass
class ValueTable:
    """Converged values plus the run's convergence record.

    ``values`` is indexed positionally; ``index_names`` gives the matching
    human-readable index (label tuple, optionally with the type tuple).
    ``residuals`` holds the sup-norm of every sweep's update, so contraction
    behaviour can be audited after the fact.
    """

    kind: str
    values: np.ndarray
    index_names: list[str]
    gamma: float
    epsilon: float
    iterations: int
    final_residual: float
    residuals: list[float] = field(repr=False)

    def rows(self):
        flat = self.values.reshape(-1)
        return list(zip(self.index_names, flat.tolist()))

    def by_index(self) -> dict:
        return dict(self.rows())


def _iterate(update, shape, config: DiscountedDpConfig):
    """Run the synchronous sweeps until the update drops below epsilon."""
    values = np.zeros(shape)
    residuals = []
    for it in range(1, config.max_iterations + 1):
        new_values = update(values)
        residual = float(np.max(np.abs(new_values - values)))
        residuals.append(residual)
        values = new_values
        if residual < config.epsilon:
            return values, it, residual, residuals
    raise ConvergenceError(
        f"value iteration did not reach epsilon={config.epsilon} within "
        f"{config.max_iterations} iterations (last residual {residuals[-1]:.3g})")


def _state_arrays(n_labels: int, period: int):
    states = np.array(enumerate_states(n_labels, period), dtype=np.int64)
    return states


def _type_probs(types: np.ndarray, prior) -> np.ndarray:
    p = prior.as_array()
    return np.prod(p[types], axis=1)


def _full_cost_table(scenario: Scenario, strategy: AmStrategy,
                     states: np.ndarray, types: np.ndarray) -> np.ndarray:
    """Consolidated cost for every (state, type) pair.

    When the scenario supports reduction the cost collapses to the leading
    (label, type) pair; otherwise every block is evaluated.
    """
    m = strategy.period
    if scenario.supports_reduction():
        base = np.array([[reduced_cost(scenario, strategy, s, t)
                          for t in ATTACK_TYPES]
                         for s in range(scenario.n_labels)])
        return base[states[:, 0]][:, types[:, 0]]
    table = np.empty((states.shape[0], types.shape[0]))
    for xi, x in enumerate(states):
        for ti, tb in enumerate(types):
            table[xi, ti] = consolidated_cost(
                scenario, strategy, tuple(x), tuple(AttackType(t) for t in tb))
    return table


def _interior_chain_weights(states: np.ndarray, types: np.ndarray,
                            mats) -> np.ndarray:
    """W[t, x]: probability of x's interior label chain when the j-th step is
    driven by the j-th entry of type tuple t."""
    n_types, m = types.shape
    n_states = states.shape[0]
    weights = np.ones((n_types, n_states))
    for j in range(m - 1):
        step = mats[types[:, j]][:, states[:, j], states[:, j + 1]]
        weights *= step
    return weights


def value_iteration_cc(scenario: Scenario, strategy: AmStrategy,
                       config: DiscountedDpConfig,
                       cap: int = STATE_ENUMERATION_CAP) -> ValueTable:
    """Full-table values per (consolidated state, consolidated type).

    One sweep evaluates, for every block, the consolidated cost plus the
    discounted continuation: the last label hops by the block's last type,
    and the next block's interior chain and value are averaged jointly over
    the next consolidated type (the chain steps inside the next block are
    driven by that block's own types, so the two must stay coupled for the
    aggregated representation to match exactly).
    """
    m = strategy.period
    n = scenario.n_labels
    check_state_capacity(n, m, with_types=True, cap=cap)
    states = _state_arrays(n, m)
    types = np.array(enumerate_types(m), dtype=np.int64)
    tprobs = _type_probs(types, scenario.attack.prior)
    mats = np.stack([scenario.attack.kernel.matrix(t) for t in ATTACK_TYPES])

    costs = _full_cost_table(scenario, strategy, states, types)
    interior = _interior_chain_weights(states, types, mats)
    lead = states[:, 0]
    last = states[:, -1]
    last_type = types[:, -1]

    def sweep(u):
        # g[s'] = E over next type of (interior chain into u) given lead s'
        per_state = (interior.T * u) @ tprobs
        g = np.bincount(lead, weights=per_state, minlength=n)
        hop = mats @ g                      # (2, n): value after one label hop
        return costs + config.gamma * hop[last_type][:, last].T

    values, its, resid, trace = _iterate(sweep, costs.shape, config)
    names = [_cc_index(scenario, states[xi], types[ti])
             for xi in range(states.shape[0]) for ti in range(types.shape[0])]
    return ValueTable("cc", values, names, config.gamma, config.epsilon,
                      its, resid, trace)


def value_iteration_ecc(scenario: Scenario, strategy: AmStrategy,
                        config: DiscountedDpConfig,
                        cap: int = STATE_ENUMERATION_CAP) -> ValueTable:
    """Type-expected values per consolidated state.

    Iterates with the type-expected cost and the type-averaged block
    transition; matches the type expectation of the full table.
    """
    m = strategy.period
    n = scenario.n_labels
    check_state_capacity(n, m, with_types=False, cap=cap)
    states = _state_arrays(n, m)
    types = np.array(enumerate_types(m), dtype=np.int64)
    tprobs = _type_probs(types, scenario.attack.prior)
    avg = scenario.attack.kernel.averaged(scenario.attack.prior)

    costs = _full_cost_table(scenario, strategy, states, types) @ tprobs
    interior = np.ones(states.shape[0])
    for j in range(m - 1):
        interior *= avg[states[:, j], states[:, j + 1]]
    lead = states[:, 0]
    last = states[:, -1]

    def sweep(u):
        g = np.bincount(lead, weights=interior * u, minlength=n)
        return costs + config.gamma * (avg @ g)[last]

    values, its, resid, trace = _iterate(sweep, costs.shape, config)
    names = [_state_index(scenario, x) for x in states]
    return ValueTable("ecc", values, names, config.gamma, config.epsilon,
                      its, resid, trace)


def _require_reduction(scenario: Scenario):
    if not scenario.supports_reduction():
        raise ModelError(
            "aggregated evaluation requires an inter-arrival distribution "
            "independent of label and type (and a uniform uncertainty cost); "
            "this model violates that hypothesis")


def _per_type_m_step(scenario: Scenario, types: np.ndarray) -> np.ndarray:
    """K[t] = product of the per-stage kernels along type tuple t."""
    n = scenario.n_labels
    kernels = np.empty((types.shape[0], n, n))
    for ti, tb in enumerate(types):
        k = np.eye(n)
        for t in tb:
            k = k @ scenario.attack.kernel.matrix(AttackType(int(t)))
        kernels[ti] = k
    return kernels


def expected_m_step_kernel(scenario: Scenario, period: int) -> np.ndarray:
    """m-step transition of the leading label with types averaged out: the
    m-th power of the type-averaged one-step matrix."""
    avg = scenario.attack.kernel.averaged(scenario.attack.prior)
    return np.linalg.matrix_power(avg, period)


def value_iteration_acc(scenario: Scenario, strategy: AmStrategy,
                        config: DiscountedDpConfig) -> ValueTable:
    """Aggregated values per (leading label, consolidated type).

    Uses the reduced cost of the leading pair and the per-type m-step
    kernel; the continuation averages the next consolidated type.
    """
    _require_reduction(scenario)
    m = strategy.period
    n = scenario.n_labels
    types = np.array(enumerate_types(m), dtype=np.int64)
    tprobs = _type_probs(types, scenario.attack.prior)
    kernels = _per_type_m_step(scenario, types)

    base = np.array([[reduced_cost(scenario, strategy, s, t)
                      for t in ATTACK_TYPES] for s in range(n)])
    costs = base[:, types[:, 0]]            # (n, T)

    def sweep(u):
        expected = u @ tprobs               # (n,)
        cont = np.einsum("tij,j->it", kernels, expected)
        return costs + config.gamma * cont

    values, its, resid, trace = _iterate(sweep, costs.shape, config)
    names = [_acc_index(scenario, s, types[ti])
             for s in range(n) for ti in range(types.shape[0])]
    return ValueTable("acc", values, names, config.gamma, config.epsilon,
                      its, resid, trace)


def value_iteration_eacc(scenario: Scenario, strategy: AmStrategy,
                         config: DiscountedDpConfig) -> ValueTable:
    """Doubly reduced values per leading label.

    The expected m-step kernel is computed once; each sweep is a single
    matrix-vector product.
    """
    _require_reduction(scenario)
    n = scenario.n_labels
    prior = scenario.attack.prior
    kernel = expected_m_step_kernel(scenario, strategy.period)
    base = np.array([[reduced_cost(scenario, strategy, s, t)
                      for t in ATTACK_TYPES] for s in range(n)])
    costs = base @ prior.as_array()

    def sweep(u):
        return costs + config.gamma * (kernel @ u)

    values, its, resid, trace = _iterate(sweep, costs.shape, config)
    names = list(scenario.attack.labels.names)
    return ValueTable("eacc", values, names, config.gamma, config.epsilon,
                      its, resid, trace)


def run_value_iteration(scenario: Scenario, strategy: AmStrategy,
                        config: DiscountedDpConfig, representation: str,
                        cap: int = STATE_ENUMERATION_CAP) -> ValueTable:
    reps = {
        "cc": lambda: value_iteration_cc(scenario, strategy, config, cap=cap),
        "ecc": lambda: value_iteration_ecc(scenario, strategy, config, cap=cap),
        "acc": lambda: value_iteration_acc(scenario, strategy, config),
        "eacc": lambda: value_iteration_eacc(scenario, strategy, config),
    }
    try:
        run = reps[representation]
    except KeyError:
        raise ConfigError(
            f"representation: expected one of {sorted(reps)}, got {representation!r}"
        ) from None
    return run()


# ---------------------------------------------------------------------------
# Aggregation oracles (definitions applied to the full tables)


def aggregate_cc_to_acc(scenario: Scenario, strategy: AmStrategy,
                        table: ValueTable) -> np.ndarray:
    """Collapse trailing labels of the full table with the per-type interior
    chain: the defining sum for the aggregated representation."""
    m = strategy.period
    n = scenario.n_labels
    states = _state_arrays(n, m)
    types = np.array(enumerate_types(m), dtype=np.int64)
    mats = np.stack([scenario.attack.kernel.matrix(t) for t in ATTACK_TYPES])
    interior = _interior_chain_weights(states, types, mats)   # (T, X)
    u = table.values
    out = np.zeros((n, types.shape[0]))
    lead = states[:, 0]
    for ti in range(types.shape[0]):
        np.add.at(out[:, ti], lead, interior[ti] * u[:, ti])
    return out


def aggregate_ecc_to_eacc(scenario: Scenario, strategy: AmStrategy,
                          table: ValueTable) -> np.ndarray:
    """Collapse trailing labels of the type-expected table with the
    type-averaged interior chain."""
    m = strategy.period
    n = scenario.n_labels
    states = _state_arrays(n, m)
    avg = scenario.attack.kernel.averaged(scenario.attack.prior)
    interior = np.ones(states.shape[0])
    for j in range(m - 1):
        interior *= avg[states[:, j], states[:, j + 1]]
    out = np.zeros(n)
    np.add.at(out, states[:, 0], interior * table.values)
    return out


# ---------------------------------------------------------------------------
# Monotonicity check


@dataclass(frozen=True)
class MonotonicityResult:
    applicable: bool
    holds: bool
    witness: str | None = None

    def __bool__(self) -> bool:
        return self.applicable and self.holds


def check_monotonicity(scenario_a: Scenario, scenario_b: Scenario,
                       strategy: AmStrategy,
                       config: DiscountedDpConfig) -> MonotonicityResult:
    """Entrywise dominance of values for entrywise dominated costs.

    Requires the two scenarios to differ only in costs with A's consolidated
    cost strictly above B's everywhere; reports ``applicable=False``
    otherwise. A ``holds=False`` result with a witness entry signals an
    implementation bug, since dominance is guaranteed for discounted sums.
    """
    m = strategy.period
    same_attack = (
        scenario_a.attack.prior == scenario_b.attack.prior
        and all(np.array_equal(scenario_a.attack.kernel.matrix(t),
                               scenario_b.attack.kernel.matrix(t))
                for t in ATTACK_TYPES))
    if not same_attack:
        return MonotonicityResult(applicable=False, holds=False)
    states = _state_arrays(scenario_a.n_labels, m)
    types = np.array(enumerate_types(m), dtype=np.int64)
    costs_a = _full_cost_table(scenario_a, strategy, states, types)
    costs_b = _full_cost_table(scenario_b, strategy, states, types)
    if not np.all(costs_a > costs_b):
        return MonotonicityResult(applicable=False, holds=False)

    table_a = value_iteration_cc(scenario_a, strategy, config)
    table_b = value_iteration_cc(scenario_b, strategy, config)
    diff = table_a.values - table_b.values
    if np.all(diff > 0.0):
        return MonotonicityResult(applicable=True, holds=True)
    flat = int(np.argmin(diff))
    witness = table_a.index_names[flat]
    return MonotonicityResult(applicable=True, holds=False, witness=witness)


# ---------------------------------------------------------------------------
# Index rendering


def _state_index(scenario: Scenario, x) -> str:
    return "-".join(scenario.attack.labels.names[int(s)] for s in x)


def _type_index(tb) -> str:
    return "-".join(AttackType(int(t)).short for t in tb)


def _cc_index(scenario: Scenario, x, tb) -> str:
    return f"{_state_index(scenario, x)}|{_type_index(tb)}"


def _acc_index(scenario: Scenario, s: int, tb) -> str:
    return f"{scenario.attack.labels.names[s]}|{_type_index(tb)}"
