"""Threshold-based operator decisions and the per-stage cost structure.

The probability of a correct security decision is an increasing step
function of the inspection time: ``N`` finite thresholds split ``[0, inf)``
into ``N + 1`` right-open regions, and each region carries a fixed
(correct, incorrect) probability pair. The remainder within a region is the
probability of staying undecided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .attack import ATTACK_TYPES, AttackType, LabelSet
from .errors import ConfigError


class SecurityDecision(Enum):
    FEINT = "feint"
    REAL = "real"
    UNKNOWN = "unknown"


def correct_decision_for(attack_type: AttackType) -> SecurityDecision:
    return SecurityDecision.FEINT if attack_type == AttackType.FEINT else SecurityDecision.REAL


def incorrect_decision_for(attack_type: AttackType) -> SecurityDecision:
    return SecurityDecision.REAL if attack_type == AttackType.FEINT else SecurityDecision.FEINT


class DecisionProbs(NamedTuple):
    """Probabilities of a (correct, incorrect, undecided) outcome.

    The undecided entry is always the residual ``1 - correct - incorrect``,
    so the triple sums to one exactly.
    """

    correct: float
    incorrect: float
    unknown: float

    def of(self, decision: SecurityDecision, true_type: AttackType) -> float:
        if decision is SecurityDecision.UNKNOWN:
            return self.unknown
        if decision is correct_decision_for(true_type):
            return self.correct
        return self.incorrect


#: Triple for an alert the operator never looks at.
ALWAYS_UNKNOWN = DecisionProbs(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class ThresholdSchedule:
    """Step-function decision probabilities for one (label, type) pair.

    ``times`` holds the N finite thresholds (strictly increasing, first one
    positive); region ``n`` is ``[times[n-1], times[n])`` with region 0
    starting at 0 and region N unbounded. ``correct``/``incorrect`` hold the
    N + 1 per-region probabilities; a boundary time belongs to the higher
    (better-informed) region.
    """

    times: np.ndarray
    correct: np.ndarray
    incorrect: np.ndarray

    @classmethod
    def build(cls, times, correct, incorrect, field_path: str = "thresholds"):
        t = np.asarray(times, dtype=float)
        cd = np.asarray(correct, dtype=float)
        idp = np.asarray(incorrect, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ConfigError(f"{field_path}.times: need at least one threshold")
        if t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
            raise ConfigError(f"{field_path}.times: must be strictly increasing and > 0")
        if not np.all(np.isfinite(t)):
            raise ConfigError(f"{field_path}.times: thresholds must be finite")
        if cd.shape != (t.size + 1,) or idp.shape != (t.size + 1,):
            raise ConfigError(
                f"{field_path}: correct/incorrect need {t.size + 1} entries "
                f"for {t.size} thresholds")
        if cd[0] != 0.0:
            raise ConfigError(f"{field_path}.correct[0]: must be 0, got {cd[0]}")
        if np.any(cd < 0.0) or np.any(cd > 1.0) or np.any(np.diff(cd) < 0.0):
            raise ConfigError(f"{field_path}.correct: must be nondecreasing within [0, 1]")
        if np.any(idp < 0.0) or np.any(idp > 1.0) or np.any(np.diff(idp) > 0.0):
            raise ConfigError(f"{field_path}.incorrect: must be nonincreasing within [0, 1]")
        if np.any(cd + idp > 1.0 + 1e-12):
            n = int(np.argmax(cd + idp))
            raise ConfigError(
                f"{field_path}: correct[{n}] + incorrect[{n}] = {cd[n] + idp[n]} > 1")
        t.setflags(write=False)
        cd.setflags(write=False)
        idp.setflags(write=False)
        return cls(times=t, correct=cd, incorrect=idp)

    @property
    def n_regions(self) -> int:
        return self.times.size + 1

    def region(self, inspection_time: float) -> int:
        if inspection_time < 0.0:
            raise ValueError(f"inspection time must be >= 0, got {inspection_time}")
        return int(np.searchsorted(self.times, inspection_time, side="right"))

    def region_probs(self, n: int) -> DecisionProbs:
        cd = float(self.correct[n])
        idp = float(self.incorrect[n])
        return DecisionProbs(cd, idp, 1.0 - cd - idp)

    def boundaries(self) -> np.ndarray:
        """Region edges 0 = b_0 < b_1 < ... < b_N < b_{N+1} = inf."""
        return np.concatenate([[0.0], self.times, [math.inf]])


class ThresholdTable:
    """Threshold schedules for every (label, type) pair."""

    def __init__(self, schedules: dict):
        self._schedules = dict(schedules)

    @classmethod
    def uniform(cls, labels: LabelSet, schedule: ThresholdSchedule):
        return cls({(i, t): schedule for i in range(len(labels)) for t in ATTACK_TYPES})

    def schedule(self, label: int, attack_type: AttackType) -> ThresholdSchedule:
        try:
            return self._schedules[(label, AttackType(attack_type))]
        except KeyError:
            raise ConfigError(
                f"thresholds: no schedule for label {label}, "
                f"type {AttackType(attack_type).short}") from None


class CostModel:
    """Uncertainty cost, correct-decision reward and incorrect-decision cost.

    ``uncertainty`` is a scalar; an optional per-(label, type) override table
    refines it. ``correct``/``incorrect`` are (labels x 2) arrays indexed by
    (label, attack type).
    """

    def __init__(self, uncertainty: float, correct, incorrect,
                 uncertainty_table=None, field_path: str = "costs"):
        if not uncertainty > 0.0:
            raise ConfigError(f"{field_path}.uncertainty: must be > 0, got {uncertainty}")
        cd = np.asarray(correct, dtype=float)
        idp = np.asarray(incorrect, dtype=float)
        if cd.ndim != 2 or cd.shape[1] != 2 or idp.shape != cd.shape:
            raise ConfigError(f"{field_path}: correct/incorrect must be (labels x 2) tables")
        if np.any(cd >= 0.0):
            bad = tuple(np.argwhere(cd >= 0)[0])
            raise ConfigError(f"{field_path}.correct[{bad[0]}][{bad[1]}]: reward must be < 0")
        if np.any(idp <= 0.0):
            bad = tuple(np.argwhere(idp <= 0)[0])
            raise ConfigError(f"{field_path}.incorrect[{bad[0]}][{bad[1]}]: cost must be > 0")
        self.uncertainty = float(uncertainty)
        self._correct = cd
        self._incorrect = idp
        self._un_table = None
        if uncertainty_table is not None:
            un = np.asarray(uncertainty_table, dtype=float)
            if un.shape != cd.shape:
                raise ConfigError(f"{field_path}.uncertainty_table: must be (labels x 2)")
            if np.any(un <= 0.0):
                raise ConfigError(f"{field_path}.uncertainty_table: entries must be > 0")
            self._un_table = un
        for arr in (cd, idp) + ((self._un_table,) if self._un_table is not None else ()):
            arr.setflags(write=False)

    @property
    def n_labels(self) -> int:
        return self._correct.shape[0]

    def correct_reward(self, label: int, attack_type: AttackType) -> float:
        return float(self._correct[label, attack_type])

    def incorrect_cost(self, label: int, attack_type: AttackType) -> float:
        return float(self._incorrect[label, attack_type])

    def uncertainty_cost(self, label: int, attack_type: AttackType) -> float:
        if self._un_table is None:
            return self.uncertainty
        return float(self._un_table[label, attack_type])

    @property
    def uncertainty_is_uniform(self) -> bool:
        return self._un_table is None or bool(
            np.all(self._un_table == self._un_table.flat[0]))

    def with_uncertainty(self, value: float) -> "CostModel":
        """Copy of the model with the scalar uncertainty cost replaced."""
        return CostModel(value, self._correct, self._incorrect)


def decision_probability(table: ThresholdTable, label: int,
                         attack_type: AttackType,
                         inspection_time: float) -> DecisionProbs:
    """Outcome probabilities for one inspection lasting ``inspection_time``."""
    sched = table.schedule(label, attack_type)
    return sched.region_probs(sched.region(inspection_time))


def decision_probability_integrated(table: ThresholdTable, label: int,
                                    attack_type: AttackType,
                                    dist) -> DecisionProbs:
    """Outcome probabilities with the inspection time integrated out.

    Mixes the per-region triples with the distribution's mass on each
    region, so the step-function discontinuities are handled exactly
    through the CDF instead of generic quadrature.
    """
    sched = table.schedule(label, attack_type)
    edges = sched.boundaries()
    correct = incorrect = 0.0
    for n in range(sched.n_regions):
        w = dist.prob_interval(edges[n], edges[n + 1])
        correct += w * sched.correct[n]
        incorrect += w * sched.incorrect[n]
    return DecisionProbs(correct, incorrect, 1.0 - correct - incorrect)


def stage_cost(costs: CostModel, decision: SecurityDecision, label: int,
               attack_type: AttackType) -> float:
    """Realized cost of one security decision."""
    if decision is SecurityDecision.UNKNOWN:
        return costs.uncertainty_cost(label, attack_type)
    if decision is correct_decision_for(attack_type):
        return costs.correct_reward(label, attack_type)
    return costs.incorrect_cost(label, attack_type)


def sample_decision(table: ThresholdTable, label: int, attack_type: AttackType,
                    inspection_time: float,
                    rng: np.random.Generator) -> SecurityDecision:
    """Draw one security decision from the pointwise outcome triple."""
    probs = decision_probability(table, label, attack_type, inspection_time)
    u = rng.random()
    if u < probs.correct:
        return correct_decision_for(attack_type)
    if u < probs.correct + probs.incorrect:
        return incorrect_decision_for(attack_type)
    return SecurityDecision.UNKNOWN
