"""Parameter sweeps over the arrival rate and the inspection period.

Each sweep point is evaluated independently with the closed-form
exponential machinery, and rows are emitted in parameter order so repeated
runs produce identical files.
"""

from __future__ import annotations

import numpy as np

from .attack import ExponentialInterArrival
from .config import ExperimentConfig
from .consolidation import AmStrategy, severity_by_label, zero_rate_severity
from .dp import value_iteration_eacc
from .errors import ConfigError


def parse_float_range(text: str) -> np.ndarray:
    """``start:stop:count`` inclusive grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range: expected start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"range: expected start:stop:count, got {text!r}") from None
    if count < 1 or stop < start:
        raise ConfigError(f"range: empty grid {text!r}")
    return np.linspace(start, stop, count)


def parse_int_range(text: str) -> list[int]:
    """``lo:hi`` inclusive integer grid."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"range: expected lo:hi, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"range: expected lo:hi, got {text!r}") from None
    if hi < lo or lo < 1:
        raise ConfigError(f"range: empty or non-positive grid {text!r}")
    return list(range(lo, hi + 1))


def _require_exponential(config: ExperimentConfig):
    if not isinstance(config.scenario.attack.inter_arrival, ExponentialInterArrival):
        raise ConfigError(
            "inter_arrival.kind: sweeps need the exponential model")


def sweep_severity(config: ExperimentConfig, betas=None, periods=None):
    """Severity per label for each grid point.

    Exactly one of ``betas``/``periods`` must be given. A zero rate is
    evaluated as its analytic limit: the inspection time grows without
    bound, leaving only the top-region decision probabilities.
    """
    _require_exponential(config)
    if (betas is None) == (periods is None):
        raise ConfigError("sweep: give exactly one of a beta range or an m range")
    labels = config.scenario.attack.labels.names
    rows = []
    if betas is not None:
        strategy = config.strategy
        for beta in betas:
            if beta < 0.0:
                raise ConfigError(f"beta-range: rate {beta} is negative")
            if beta == 0.0:
                sev = [zero_rate_severity(config.scenario, s)
                       for s in range(len(labels))]
            else:
                sev = severity_by_label(config.with_rate(float(beta)).scenario,
                                        strategy)
            for s, name in enumerate(labels):
                rows.append(("beta", float(beta), "severity", name,
                             float(sev[s]), config.seed))
    else:
        for m in periods:
            sev = severity_by_label(config.scenario, AmStrategy(int(m)))
            for s, name in enumerate(labels):
                rows.append(("m", int(m), "severity", name, float(sev[s]),
                             config.seed))
    return rows


def sweep_risk(config: ExperimentConfig, betas=None, periods=None):
    """Aggregated long-term risk per label for each grid point."""
    _require_exponential(config)
    if (betas is None) == (periods is None):
        raise ConfigError("sweep: give exactly one of a beta range or an m range")
    labels = config.scenario.attack.labels.names
    rows = []
    if betas is not None:
        strategy = config.strategy
        for beta in betas:
            if beta <= 0.0:
                raise ConfigError(
                    f"beta-range: risk evaluation needs rate > 0, got {beta}")
            table = value_iteration_eacc(config.with_rate(float(beta)).scenario,
                                         strategy, config.dp)
            for s, name in enumerate(labels):
                rows.append(("beta", float(beta), "eacc", name,
                             float(table.values[s]), config.seed))
    else:
        for m in periods:
            table = value_iteration_eacc(config.scenario, AmStrategy(int(m)),
                                         config.dp)
            for s, name in enumerate(labels):
                rows.append(("m", int(m), "eacc", name,
                             float(table.values[s]), config.seed))
    return rows
