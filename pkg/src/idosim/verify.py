"""Self-check battery: invariants, cross-representation oracles and
randomized equivalency checks.

Failures are report content, not exceptions; the command wrapper turns any
failed check into a nonzero exit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .attack import (AttackModel, AttackType, ExponentialInterArrival,
                     LabelSet, TransitionKernel, TypePrior, erlang_cdf,
                     erlang_pdf, sample_trajectory)
from .config import ExperimentConfig
from .consolidation import (AmStrategy, OperatorModel, Scenario,
                            consolidated_transition, enumerate_states,
                            enumerate_types, severity_level)
from .dp import (DiscountedDpConfig, aggregate_cc_to_acc,
                 aggregate_ecc_to_eacc, check_monotonicity,
                 value_iteration_acc, value_iteration_cc, value_iteration_eacc,
                 value_iteration_ecc)
from .errors import ConfigError
from .operator import (CostModel, ThresholdSchedule, ThresholdTable,
                       decision_probability_integrated)
from .rng import stream
from .td import run_td_session


@dataclass(frozen=True)
class VerifyCheck:
    name: str
    passed: bool
    tolerance: float
    deviation: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (f"[{status}] {self.name}: tolerance={self.tolerance:g} "
                f"observed={self.deviation:.3g}")
        if self.detail:
            text += f" ({self.detail})"
        return text


# ---------------------------------------------------------------------------
# Random small instances


def random_stochastic_matrix(rng, n: int) -> np.ndarray:
    mat = rng.random((n, n)) + 0.05
    return mat / mat.sum(axis=1, keepdims=True)


def random_scenario(rng, n_labels: int = 3, type_dependent: bool = True,
                    rate: float | None = None) -> Scenario:
    """Small random exponential scenario for oracle checks."""
    names = tuple(f"L{i}" for i in range(n_labels))
    labels = LabelSet(names)
    b = float(rng.uniform(0.2, 0.8))
    prior = TypePrior(b, 1.0 - b)
    feint = random_stochastic_matrix(rng, n_labels)
    real = random_stochastic_matrix(rng, n_labels) if type_dependent else feint
    kernel = TransitionKernel(feint, real)
    beta = float(rng.uniform(0.5, 2.0)) if rate is None else rate
    attack = AttackModel(labels, prior, kernel, ExponentialInterArrival(beta))

    schedules = {}
    for li in range(n_labels):
        for at in (AttackType.FEINT, AttackType.REAL):
            t1 = float(rng.uniform(0.3, 2.5))
            top_cd = float(rng.uniform(0.6, 1.0))
            low_id = float(rng.uniform(0.0, 0.4))
            top_id = float(rng.uniform(0.0, min(0.3, 1.0 - top_cd, low_id)))
            schedules[(li, at)] = ThresholdSchedule.build(
                [t1], [0.0, top_cd], [low_id, top_id])
    thresholds = ThresholdTable(schedules)
    costs = CostModel(
        uncertainty=float(rng.uniform(0.1, 2.0)),
        correct=-rng.uniform(0.5, 2.0, size=(n_labels, 2)),
        incorrect=rng.uniform(0.5, 2.0, size=(n_labels, 2)))
    return Scenario(attack, OperatorModel(thresholds, costs))


def dominated_pair(rng, n_labels: int = 2):
    """Scenario plus a copy whose costs are strictly lower everywhere."""
    scenario = random_scenario(rng, n_labels=n_labels)
    costs = scenario.operator.costs
    correct = np.array([[costs.correct_reward(s, t) for t in (0, 1)]
                        for s in range(n_labels)])
    incorrect = np.array([[costs.incorrect_cost(s, t) for t in (0, 1)]
                          for s in range(n_labels)])
    un = np.full((n_labels, 2), costs.uncertainty)
    limit = min(incorrect.min(), un.min())
    delta = rng.uniform(0.05, max(0.9 * limit, 0.06), size=(n_labels, 2))
    delta = np.minimum(delta, 0.9 * limit)
    lowered = CostModel(costs.uncertainty, correct - delta, incorrect - delta,
                        uncertainty_table=un - delta)
    low = Scenario(scenario.attack,
                   OperatorModel(scenario.operator.thresholds, lowered))
    return scenario, low


# ---------------------------------------------------------------------------
# Individual checks


def check_config_validity(config: ExperimentConfig) -> VerifyCheck:
    kernel = config.scenario.attack.kernel
    worst = 0.0
    for at in (AttackType.FEINT, AttackType.REAL):
        sums = kernel.matrix(at).sum(axis=1)
        worst = max(worst, float(np.max(np.abs(sums - 1.0))))
    return VerifyCheck("transition-rows-stochastic", worst <= 1e-12, 1e-12, worst)


def check_erlang_quadrature() -> VerifyCheck:
    worst = 0.0
    for m in range(1, 11):
        for beta in (0.5, 1.0, 3.0):
            for tau in (0.1, 1.0, 5.0):
                numeric, _ = integrate.quad(
                    lambda t: erlang_pdf(m, beta, t), 0.0, tau, limit=200)
                worst = max(worst, abs(erlang_cdf(m, beta, tau) - numeric))
    return VerifyCheck("erlang-cdf-vs-quadrature", worst <= 1e-8, 1e-8, worst,
                       "m in 1..10, rate in {0.5,1,3}, tau in {0.1,1,5}")


def check_transition_rows(rng, instances: int = 20) -> VerifyCheck:
    worst = 0.0
    for _ in range(instances):
        scenario = random_scenario(rng, n_labels=int(rng.integers(2, 4)))
        m = int(rng.integers(1, 4))
        states = enumerate_states(scenario.n_labels, m)
        types = enumerate_types(m)
        x = states[int(rng.integers(len(states)))]
        tb = types[int(rng.integers(len(types)))]
        total = sum(consolidated_transition(scenario.attack.kernel, x, xn, tb)
                    for xn in states)
        worst = max(worst, abs(total - 1.0))
    return VerifyCheck("consolidated-transition-rows", worst <= 1e-10, 1e-10,
                       worst, f"{instances} random (state, type) rows")


def check_equivalency(rng, instances: int = 50) -> VerifyCheck:
    """Aggregations of the full tables against the reduced iterations."""
    worst = 0.0
    for i in range(instances):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(2, 4))
        gamma = 0.5 if i % 2 == 0 else 0.9
        scenario = random_scenario(rng, n_labels=n)
        strategy = AmStrategy(m)
        dpc = DiscountedDpConfig(gamma=gamma, epsilon=1e-12,
                                 max_iterations=50_000)
        cc = value_iteration_cc(scenario, strategy, dpc)
        ecc = value_iteration_ecc(scenario, strategy, dpc)
        acc = value_iteration_acc(scenario, strategy, dpc)
        eacc = value_iteration_eacc(scenario, strategy, dpc)
        dev_acc = float(np.max(np.abs(
            aggregate_cc_to_acc(scenario, strategy, cc) - acc.values)))
        dev_eacc = float(np.max(np.abs(
            aggregate_ecc_to_eacc(scenario, strategy, ecc) - eacc.values)))
        worst = max(worst, dev_acc, dev_eacc)
    return VerifyCheck("aggregation-equivalency", worst <= 1e-9, 1e-9, worst,
                       f"{instances} random instances, both table pairs")


def check_expectation_consistency(rng, instances: int = 10) -> VerifyCheck:
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(1, 4))
        scenario = random_scenario(rng, n_labels=n)
        strategy = AmStrategy(m)
        dpc = DiscountedDpConfig(gamma=0.9, epsilon=1e-12, max_iterations=50_000)
        cc = value_iteration_cc(scenario, strategy, dpc)
        ecc = value_iteration_ecc(scenario, strategy, dpc)
        acc = value_iteration_acc(scenario, strategy, dpc)
        eacc = value_iteration_eacc(scenario, strategy, dpc)
        types = np.array(enumerate_types(m), dtype=np.int64)
        tprobs = np.prod(scenario.attack.prior.as_array()[types], axis=1)
        worst = max(worst,
                    float(np.max(np.abs(cc.values @ tprobs - ecc.values))),
                    float(np.max(np.abs(acc.values @ tprobs - eacc.values))))
    return VerifyCheck("type-expectation-consistency", worst <= 1e-8, 1e-8,
                       worst, "full tables vs their type expectations")


def check_monotone_dominance(rng, pairs: int = 100) -> VerifyCheck:
    failed = 0
    checked = 0
    for _ in range(pairs):
        high, low = dominated_pair(rng, n_labels=2)
        strategy = AmStrategy(int(rng.integers(1, 3)))
        dpc = DiscountedDpConfig(gamma=0.9, epsilon=1e-10, max_iterations=50_000)
        result = check_monotonicity(high, low, strategy, dpc)
        if not result.applicable:
            continue
        checked += 1
        if not result.holds:
            failed += 1
    ok = failed == 0 and checked > 0
    return VerifyCheck("dominated-cost-monotonicity", ok, 0.0, float(failed),
                       f"{checked} applicable pairs of {pairs}")


def contraction_excess(table, gamma: float) -> float:
    """Worst violation of the discounted-contraction decay of residuals.

    Exact arithmetic guarantees r_{l+1} <= gamma * r_l. In floating point a
    residual of a table with entries of size V carries absolute noise of a
    few ulp of V, so the check allows gamma + 1e-12 multiplicatively plus a
    machine-noise floor; the returned excess is how far any step overshoots
    that bound (0 when none does).
    """
    scale = max(1.0, float(np.max(np.abs(table.values))))
    floor = 64.0 * np.finfo(float).eps * scale
    worst = 0.0
    res = table.residuals
    for a, b in zip(res, res[1:]):
        worst = max(worst, b - ((gamma + 1e-12) * a + floor))
    return max(worst, 0.0)


def check_contraction(rng, instances: int = 10) -> VerifyCheck:
    """Residual decay of every representation on random instances."""
    worst = 0.0
    for _ in range(instances):
        scenario = random_scenario(rng, n_labels=2)
        strategy = AmStrategy(2)
        gamma = float(rng.uniform(0.5, 0.95))
        dpc = DiscountedDpConfig(gamma=gamma, epsilon=1e-10, max_iterations=50_000)
        for run in (value_iteration_cc, value_iteration_ecc,
                    value_iteration_acc, value_iteration_eacc):
            table = run(scenario, strategy, dpc)
            worst = max(worst, contraction_excess(table, gamma))
    return VerifyCheck("value-iteration-contraction", worst <= 0.0, 0.0,
                       worst, "residual decay beyond gamma plus noise floor")


def check_constant_cost(config: ExperimentConfig) -> VerifyCheck:
    """Uniform costs must converge to cost / (1 - gamma)."""
    gamma = 0.9
    scenario = _constant_cost_scenario(cost=1.5)
    dpc = DiscountedDpConfig(gamma=gamma, epsilon=1e-12, max_iterations=50_000)
    worst = 0.0
    for run in (value_iteration_cc, value_iteration_ecc,
                value_iteration_acc, value_iteration_eacc):
        table = run(scenario, AmStrategy(1), dpc)
        worst = max(worst, float(np.max(np.abs(table.values - 15.0))))
    return VerifyCheck("constant-cost-closed-form", worst <= 1e-10, 1e-10,
                       worst, "uniform cost 1.5, gamma 0.9, target 15")


def _constant_cost_scenario(cost: float) -> Scenario:
    """Degenerate operator: always undecided, uniform uncertainty cost."""
    labels = LabelSet(("A", "B"))
    prior = TypePrior(0.5, 0.5)
    kernel = TransitionKernel([[0.5, 0.5], [0.5, 0.5]],
                              [[0.5, 0.5], [0.5, 0.5]])
    attack = AttackModel(labels, prior, kernel, ExponentialInterArrival(1.0))
    sched = ThresholdSchedule.build([1.0], [0.0, 0.0], [0.0, 0.0])
    thresholds = ThresholdTable.uniform(labels, sched)
    costs = CostModel(cost, -np.ones((2, 2)), np.ones((2, 2)))
    return Scenario(attack, OperatorModel(thresholds, costs))


def check_severity_range(config: ExperimentConfig, rng) -> VerifyCheck:
    worst = 0.0
    scenarios = [config.scenario] + [random_scenario(rng, 2) for _ in range(5)]
    for scenario in scenarios:
        for m in (1, 2, 3):
            for x in enumerate_states(scenario.n_labels, m):
                sev = severity_level(scenario, AmStrategy(m), x)
                worst = max(worst, -sev, sev - 1.0)
    return VerifyCheck("severity-in-unit-interval", worst <= 0.0, 0.0,
                       max(worst, 0.0))


def check_reduction_invariance(rng) -> VerifyCheck:
    """Blocks sharing a leading label agree when the model reduces."""
    worst = 0.0
    for _ in range(5):
        scenario = random_scenario(rng, 2)
        strategy = AmStrategy(2)
        for lead in range(scenario.n_labels):
            vals = [severity_level(scenario, strategy, (lead, trail))
                    for trail in range(scenario.n_labels)]
            worst = max(worst, max(vals) - min(vals))
    return VerifyCheck("reduction-invariance", worst <= 1e-12, 1e-12, worst,
                       "severity constant across trailing labels")


def check_triple_partition(rng) -> VerifyCheck:
    from .attack import ErlangDistribution
    worst = 0.0
    for _ in range(20):
        scenario = random_scenario(rng, 2)
        dist = ErlangDistribution(int(rng.integers(1, 5)),
                                  float(rng.uniform(0.5, 3.0)))
        for li in range(2):
            for at in (AttackType.FEINT, AttackType.REAL):
                probs = decision_probability_integrated(
                    scenario.operator.thresholds, li, at, dist)
                worst = max(worst, abs(sum(probs) - 1.0))
    return VerifyCheck("decision-triple-partition", worst <= 1e-12, 1e-12,
                       worst)


def check_determinism(config: ExperimentConfig) -> VerifyCheck:
    a = sample_trajectory(config.scenario.attack, 500, config.seed)
    b = sample_trajectory(config.scenario.attack, 500, config.seed)
    same = (np.array_equal(a.label, b.label)
            and np.array_equal(a.attack_type, b.attack_type)
            and np.array_equal(a.inter_arrival, b.inter_arrival))
    sess_a = run_td_session(config.scenario, AmStrategy(1), "aggregated",
                            config.dp.gamma, config.kc, 200, config.seed)
    sess_b = run_td_session(config.scenario, AmStrategy(1), "aggregated",
                            config.dp.gamma, config.kc, 200, config.seed)
    same = same and np.array_equal(sess_a.history_estimate,
                                   sess_b.history_estimate)
    return VerifyCheck("seeded-replay-identical", same, 0.0,
                       0.0 if same else 1.0)


def run_battery(config: ExperimentConfig, instances: int = 50) -> list[VerifyCheck]:
    """All checks against the given configuration plus random instances."""
    rng = stream(config.seed, 9000)
    checks = [
        check_config_validity(config),
        check_erlang_quadrature(),
        check_transition_rows(rng),
        check_triple_partition(rng),
        check_reduction_invariance(rng),
        check_severity_range(config, rng),
        check_equivalency(rng, instances=instances),
        check_expectation_consistency(rng),
        check_monotone_dominance(rng, pairs=100),
        check_contraction(rng),
        check_constant_cost(config),
        check_determinism(config),
    ]
    return checks
