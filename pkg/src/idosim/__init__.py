"""Simulation and risk evaluation for feint-flood alert streams.

A stream of feint and real attacks raises alerts that a single human
operator triages under a periodic attention-management rule: every m-th
alert is highlighted and inspected, the rest are dismissed undecided. The
package simulates the arrival process, models the operator's
inspection-time-dependent accuracy, and evaluates the induced severity and
discounted long-term risk exactly (value iteration over four consolidated
representations) or online (temporal-difference learning from simulated
inspections).
"""

__version__ = "0.1.0"

from .attack import (ATTACK_TYPES, AttackModel, AttackType,
                     EmpiricalInterArrival, ErlangDistribution,
                     ExponentialInterArrival, LabelSet,
                     MonteCarloConvolution, PiecewiseLinearCdf, PointMass,
                     Trajectory, TransitionKernel, TypePrior, erlang_cdf,
                     erlang_pdf, inspection_time_distribution,
                     sample_trajectory)
from .consolidation import (AmStrategy, OperatorModel, Scenario,
                            consolidated_cost, consolidated_transition,
                            correct_decision_probability, decision_mixture,
                            enumerate_states, enumerate_types, reduced_cost,
                            severity_by_label, severity_level,
                            zero_rate_severity)
from .dp import (DiscountedDpConfig, MonotonicityResult, ValueTable,
                 aggregate_cc_to_acc, aggregate_ecc_to_eacc,
                 check_monotonicity, expected_m_step_kernel,
                 run_value_iteration, value_iteration_acc, value_iteration_cc,
                 value_iteration_eacc, value_iteration_ecc)
from .errors import (CapacityError, ConfigError, ConvergenceError, ModelError)
from .operator import (CostModel, DecisionProbs, SecurityDecision,
                       ThresholdSchedule, ThresholdTable,
                       decision_probability, decision_probability_integrated,
                       sample_decision, stage_cost)
from .td import (LearningRateSchedule, SessionMetrics, TdEstimate, TdSession,
                 run_td_session, td_update_aggregated, td_update_consolidated)
from .config import (ExperimentConfig, case_study_config, case_study_dict,
                     config_from_dict, load_config)
