"""Consolidated stages: states, transitions, severity and cost.

Under a period-``m`` attention-management strategy the operator inspects
every m-th alert, so one inspection stage spans ``m`` attack stages. The
consolidated state/type are the m-tuples of labels/types in that span; the
inspected alert is the first of the block and the remaining ``m - 1`` are
dismissed as undecided.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .attack import (ATTACK_TYPES, AttackModel, AttackType,
                     inspection_time_distribution)
from .errors import CapacityError, ConfigError, ModelError
from .operator import (CostModel, DecisionProbs, ThresholdTable,
                       decision_probability_integrated)

#: Enumerating type completions switches to Monte Carlo beyond this period.
TYPE_ENUMERATION_CAP = 12
#: Full consolidated-state tables are refused beyond this many entries.
STATE_ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class AmStrategy:
    """Periodic attention management: highlight every ``period``-th alert."""

    period: int

    def __post_init__(self):
        if self.period < 1:
            raise ConfigError(f"am_period: must be >= 1, got {self.period}")


@dataclass(frozen=True)
class OperatorModel:
    thresholds: ThresholdTable
    costs: CostModel


@dataclass(frozen=True)
class Scenario:
    """An attack model paired with the operator inspecting its alerts."""

    attack: AttackModel
    operator: OperatorModel
    #: sample count for Monte Carlo convolutions of empirical inter-arrivals
    mc_samples: int = 100_000
    #: stream seed for those convolutions and for sampled type completions
    mc_seed: int = 0
    # inspection-time distributions memoized per block signature
    _dist_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_labels(self) -> int:
        return len(self.attack.labels)

    def supports_reduction(self) -> bool:
        """True when severity and cost depend on the block only through its
        leading label, enabling the aggregated evaluations."""
        return (self.attack.inter_arrival.state_independent
                and self.operator.costs.uncertainty_is_uniform)


def enumerate_states(n_labels: int, period: int):
    """All consolidated states, lexicographic."""
    return list(itertools.product(range(n_labels), repeat=period))


def enumerate_types(period: int):
    """All consolidated types, lexicographic (feint before real)."""
    return list(itertools.product(ATTACK_TYPES, repeat=period))


def check_state_capacity(n_labels: int, period: int, with_types: bool,
                         cap: int = STATE_ENUMERATION_CAP) -> int:
    """Number of table entries for a full consolidated evaluation, or a
    :class:`CapacityError` pointing at the reduced path."""
    entries = n_labels ** period
    if with_types:
        entries *= 2 ** period
    if entries > cap:
        raise CapacityError(
            f"consolidated table would hold {entries} entries (cap {cap}); "
            f"use the aggregated (reduced) evaluation instead")
    return entries


def consolidated_transition(kernel, x, x_next, driving_types) -> float:
    """Probability of the label chain from ``x`` into ``x_next``.

    The chain has ``m`` steps: the last label of ``x`` into the first label
    of ``x_next``, then through the remaining labels of ``x_next``. Entry
    ``j`` of ``driving_types`` is the attack type at the stage the j-th step
    originates from.
    """
    if not (len(x) == len(x_next) == len(driving_types)):
        raise ValueError("x, x_next and driving_types must share one length")
    chain = (x[-1],) + tuple(x_next)
    prob = 1.0
    for j, attack_type in enumerate(driving_types):
        prob *= kernel.matrix(attack_type)[chain[j], chain[j + 1]]
    return prob


# ---------------------------------------------------------------------------
# Inspection-time distributions, memoized per block signature


def _block_distribution(scenario: Scenario, labels, types):
    """Distribution of the block's inspection time. Keyed by the multiset of
    per-stage (label, type) pairs; convolution order does not matter."""
    inter = scenario.attack.inter_arrival
    if inter.state_independent:
        key = len(labels)
        pairs = [(0, AttackType.FEINT)] * len(labels)
    else:
        pairs = list(zip(labels, types))
        key = tuple(sorted((int(l), int(t)) for l, t in pairs))
    dist = scenario._dist_cache.get(key)
    if dist is None:
        dist = inspection_time_distribution(
            scenario.attack, len(labels), stage_pairs=pairs,
            sample_count=scenario.mc_samples, seed=scenario.mc_seed)
        scenario._dist_cache[key] = dist
    return dist


# ---------------------------------------------------------------------------
# Decision probabilities and severity at an inspection stage


def decision_mixture(scenario: Scenario, strategy: AmStrategy, x,
                     theta_bar) -> DecisionProbs:
    """Outcome triple at the inspected stage for a fully specified block.

    Integrates the pointwise decision probabilities of the leading
    (label, type) pair against the block's inspection-time distribution.
    """
    dist = _block_distribution(scenario, x, theta_bar)
    return decision_probability_integrated(
        scenario.operator.thresholds, x[0], theta_bar[0], dist)


def _lead_outcome(scenario: Scenario, strategy: AmStrategy, x,
                  lead_type: AttackType) -> DecisionProbs:
    """Outcome triple given the leading type, trailing types averaged out."""
    m = strategy.period
    if scenario.attack.inter_arrival.state_independent or m == 1:
        return decision_mixture(scenario, strategy, x, (lead_type,) * m)
    prior = scenario.attack.prior.as_array()
    if m - 1 <= TYPE_ENUMERATION_CAP:
        correct = incorrect = 0.0
        for rest in itertools.product(ATTACK_TYPES, repeat=m - 1):
            weight = float(np.prod(prior[list(rest)]))
            probs = decision_mixture(scenario, strategy, x, (lead_type,) + rest)
            correct += weight * probs.correct
            incorrect += weight * probs.incorrect
        return DecisionProbs(correct, incorrect, 1.0 - correct - incorrect)
    from .rng import stream
    rng = stream(scenario.mc_seed, 1)
    draws = 2048
    correct = incorrect = 0.0
    for _ in range(draws):
        rest = tuple(AttackType(int(t)) for t in (rng.random(m - 1) >= prior[0]))
        probs = decision_mixture(scenario, strategy, x, (lead_type,) + rest)
        correct += probs.correct / draws
        incorrect += probs.incorrect / draws
    return DecisionProbs(correct, incorrect, 1.0 - correct - incorrect)


def correct_decision_probability(scenario: Scenario, strategy: AmStrategy,
                                 x) -> float:
    """Probability of a correct decision at an inspection stage: the prior
    mix of the per-type correct-decision probabilities with trailing types
    averaged out."""
    prior = scenario.attack.prior
    p_fe = _lead_outcome(scenario, strategy, x, AttackType.FEINT).correct
    p_re = _lead_outcome(scenario, strategy, x, AttackType.REAL).correct
    return prior.feint * p_fe + prior.real * p_re


def severity_level(scenario: Scenario, strategy: AmStrategy, x) -> float:
    """One minus the correct-decision probability for the block."""
    return 1.0 - correct_decision_probability(scenario, strategy, x)


def severity_by_label(scenario: Scenario, strategy: AmStrategy) -> np.ndarray:
    """Severity per leading label; requires the reduction hypothesis, under
    which all blocks sharing a leading label agree."""
    if not scenario.attack.inter_arrival.state_independent:
        raise ModelError(
            "per-label severity requires an inter-arrival distribution "
            "independent of label and type")
    m = strategy.period
    return np.array([
        severity_level(scenario, strategy, (s,) * m)
        for s in range(scenario.n_labels)
    ])


def zero_rate_severity(scenario: Scenario, label: int) -> float:
    """Limit severity as the arrival rate vanishes: the inspection time grows
    without bound, so only the top-region correct probabilities remain."""
    thresholds = scenario.operator.thresholds
    prior = scenario.attack.prior
    top = (prior.feint * thresholds.schedule(label, AttackType.FEINT).correct[-1]
           + prior.real * thresholds.schedule(label, AttackType.REAL).correct[-1])
    return 1.0 - top


# ---------------------------------------------------------------------------
# Consolidated cost


def _decision_cost(costs: CostModel, probs: DecisionProbs, label: int,
                   attack_type: AttackType) -> float:
    return (probs.correct * costs.correct_reward(label, attack_type)
            + probs.incorrect * costs.incorrect_cost(label, attack_type)
            + probs.unknown * costs.uncertainty_cost(label, attack_type))


def consolidated_cost(scenario: Scenario, strategy: AmStrategy, x,
                      theta_bar) -> float:
    """Expected operator cost over one inspection stage.

    The ``m - 1`` inconspicuous stages each contribute their uncertainty
    cost; the inspected stage contributes the outcome-weighted decision
    cost of its (label, type) pair.
    """
    costs = scenario.operator.costs
    prefix = sum(costs.uncertainty_cost(x[j], theta_bar[j])
                 for j in range(1, strategy.period))
    probs = decision_mixture(scenario, strategy, x, theta_bar)
    return prefix + _decision_cost(costs, probs, x[0], theta_bar[0])


def reduced_cost(scenario: Scenario, strategy: AmStrategy, label: int,
                 lead_type: AttackType) -> float:
    """Consolidated cost as a function of the leading (label, type) only.

    Valid when the scenario supports reduction: the inspection-time
    distribution is block-independent and the uncertainty cost uniform.
    """
    if not scenario.supports_reduction():
        raise ModelError(
            "reduced cost requires an inter-arrival distribution independent "
            "of label and type and a uniform uncertainty cost")
    m = strategy.period
    costs = scenario.operator.costs
    prefix = (m - 1) * costs.uncertainty_cost(0, AttackType.FEINT)
    probs = decision_mixture(scenario, strategy, (label,) * m, (lead_type,) * m)
    return prefix + _decision_cost(costs, probs, label, lead_type)
