"""Semi-Markov model of sequential feint/real attack arrivals.

Attack types are drawn i.i.d. from a two-point prior. The observable
category label of each alert evolves by a per-type row-stochastic kernel,
and the inter-arrival time is drawn from a distribution that may depend on
the current (label, type) pair. The constant-rate exponential special case
admits closed forms: the inspection time accumulated over ``m`` arrivals is
Erlang with shape ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy import integrate

from .errors import ConfigError, ModelError
from .rng import stream

#: Row sums of a transition kernel must match 1 this tightly.
ROW_SUM_TOL = 1e-12


class AttackType(IntEnum):
    FEINT = 0
    REAL = 1

    @property
    def short(self) -> str:
        return "FE" if self is AttackType.FEINT else "RE"


ATTACK_TYPES = (AttackType.FEINT, AttackType.REAL)


@dataclass(frozen=True)
class LabelSet:
    """Finite, ordered set of alert category labels."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 1:
            raise ConfigError("labels: need at least one category label")
        if len(set(self.names)) != len(self.names):
            raise ConfigError("labels: names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"labels: unknown label {name!r}") from None


@dataclass(frozen=True)
class TypePrior:
    """Probability that an arriving attack is a feint vs. real."""

    feint: float
    real: float

    def __post_init__(self):
        for name, p in (("feint", self.feint), ("real", self.real)):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"type_prior.{name}: {p} outside [0, 1]")
        if abs(self.feint + self.real - 1.0) > 1e-12:
            raise ConfigError(
                f"type_prior: feint + real = {self.feint + self.real}, expected 1"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.feint, self.real])


class TransitionKernel:
    """Per-type label transition matrices, validated row-stochastic."""

    def __init__(self, feint, real, field_path: str = "transition"):
        mats = []
        for name, mat in (("feint", feint), ("real", real)):
            arr = np.asarray(mat, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ConfigError(f"{field_path}.{name}: expected a square matrix")
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                bad = tuple(np.argwhere((arr < 0) | (arr > 1))[0])
                raise ConfigError(
                    f"{field_path}.{name}[{bad[0]}][{bad[1]}]: entry outside [0, 1]"
                )
            sums = arr.sum(axis=1)
            off = np.abs(sums - 1.0)
            if np.any(off > ROW_SUM_TOL):
                row = int(np.argmax(off))
                raise ConfigError(
                    f"{field_path}.{name}.row[{row}]: row sums to {sums[row]:.12g}, expected 1"
                )
            arr.setflags(write=False)
            mats.append(arr)
        if mats[0].shape != mats[1].shape:
            raise ConfigError(f"{field_path}: feint and real matrices differ in size")
        self._mats = tuple(mats)

    @property
    def n_labels(self) -> int:
        return self._mats[0].shape[0]

    def matrix(self, attack_type: AttackType) -> np.ndarray:
        return self._mats[attack_type]

    def averaged(self, prior: TypePrior) -> np.ndarray:
        """Type-averaged one-step matrix E[Tr]."""
        return prior.feint * self._mats[0] + prior.real * self._mats[1]

    def type_independent(self) -> bool:
        return bool(np.array_equal(self._mats[0], self._mats[1]))


# ---------------------------------------------------------------------------
# Erlang closed forms


def erlang_cdf(shape: int, rate: float, tau: float) -> float:
    """CDF of the Erlang(shape, rate) distribution at ``tau``.

    Evaluates 1 - sum_{n<shape} e^{-rate*tau} (rate*tau)^n / n! with the
    terms accumulated iteratively, so no factorial overflow for any shape.
    """
    if shape < 1:
        raise ValueError(f"shape must be >= 1, got {shape}")
    if rate <= 0.0:
        raise ValueError(f"rate must be > 0, got {rate}")
    if tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    x = rate * tau
    if x == 0.0:
        return 0.0
    if x > 745.0 and x > 4.0 * shape:
        return 1.0
    term = 1.0
    acc = 1.0
    for n in range(1, shape):
        term *= x / n
        acc += term
    value = 1.0 - math.exp(-x) * acc
    return min(max(value, 0.0), 1.0)


def erlang_pdf(shape: int, rate: float, tau: float) -> float:
    """Density of the Erlang(shape, rate) distribution at ``tau``."""
    if tau < 0.0:
        return 0.0
    if tau == 0.0:
        return rate if shape == 1 else 0.0
    logp = shape * math.log(rate) + (shape - 1) * math.log(tau) - rate * tau
    return math.exp(logp - math.lgamma(shape))


# ---------------------------------------------------------------------------
# Inspection-time distribution handles


class ErlangDistribution:
    """Analytic sum of ``shape`` i.i.d. exponential inter-arrival times."""

    def __init__(self, shape: int, rate: float):
        if shape < 1:
            raise ValueError("shape must be >= 1")
        if rate <= 0.0:
            raise ValueError("rate must be > 0")
        self.shape = int(shape)
        self.rate = float(rate)

    def pdf(self, tau: float) -> float:
        return erlang_pdf(self.shape, self.rate, tau)

    def cdf(self, tau: float) -> float:
        if tau == math.inf:
            return 1.0
        return erlang_cdf(self.shape, self.rate, tau)

    def prob_interval(self, lo: float, hi: float) -> float:
        """P(lo <= T < hi); the boundary convention only matters for atoms."""
        return self.cdf(hi) - self.cdf(lo)

    def mean(self) -> float:
        return self.shape / self.rate

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(shape=self.shape, scale=1.0 / self.rate, size=size)


class MonteCarloConvolution:
    """m-fold sum of sampled inter-arrival times, CDF by table lookup.

    The CDF table is a sorted array of ``sample_count`` draws of the full
    sum; ``cdf`` is the empirical distribution function over that table.
    Fresh sums can still be drawn through :meth:`sample`.
    """

    def __init__(self, samplers, sample_count: int = 100_000, seed: int = 0):
        if not samplers:
            raise ValueError("need at least one per-stage sampler")
        self._samplers = tuple(samplers)
        self.sample_count = int(sample_count)
        rng = stream(seed, 0)
        self._table = np.sort(self._draw(rng, self.sample_count))

    def _draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        total = np.zeros(size)
        for sampler in self._samplers:
            total += sampler(rng, size)
        return total

    def cdf(self, tau: float) -> float:
        if tau == math.inf:
            return 1.0
        return np.searchsorted(self._table, tau, side="right") / self._table.size

    def prob_interval(self, lo: float, hi: float) -> float:
        return self.cdf(hi) - self.cdf(lo)

    def mean(self) -> float:
        return float(self._table.mean())

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self._draw(rng, size)


class PointMass:
    """Degenerate inspection time, useful for collapsing the integrated
    decision probabilities onto the pointwise ones."""

    def __init__(self, value: float):
        if value < 0.0:
            raise ValueError("inspection time must be >= 0")
        self.value = float(value)

    def cdf(self, tau: float) -> float:
        return 1.0 if tau >= self.value else 0.0

    def prob_interval(self, lo: float, hi: float) -> float:
        return 1.0 if lo <= self.value < hi else 0.0

    def mean(self) -> float:
        return self.value

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.value)


# ---------------------------------------------------------------------------
# Inter-arrival models


class ExponentialInterArrival:
    """Constant-rate exponential inter-arrival time, the same for every
    (label, type) pair."""

    state_independent = True

    def __init__(self, rate: float, field_path: str = "inter_arrival"):
        if not rate > 0.0:
            raise ConfigError(f"{field_path}.rate: must be > 0, got {rate}")
        self.rate = float(rate)

    def sampler(self, label: int, attack_type: AttackType):
        scale = 1.0 / self.rate
        return lambda rng, size: rng.exponential(scale=scale, size=size)

    def pdf(self, tau: float, label=None, attack_type=None) -> float:
        return erlang_pdf(1, self.rate, tau)

    def inspection_distribution(self, stage_pairs) -> ErlangDistribution:
        return ErlangDistribution(shape=len(stage_pairs), rate=self.rate)


class PiecewiseLinearCdf:
    """Inverse-CDF sampler over a piecewise-linear CDF table.

    ``knots`` are strictly increasing times, ``values`` the CDF at each knot
    rising from 0 to 1. The density is the piecewise-constant derivative,
    which makes the model evaluable inside integrals over the decision step
    function.
    """

    def __init__(self, knots, values, field_path: str = "inter_arrival"):
        t = np.asarray(knots, dtype=float)
        f = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.size < 2 or f.shape != t.shape:
            raise ConfigError(f"{field_path}: knots/values must be 1-d, equal length >= 2")
        if t[0] < 0.0:
            raise ConfigError(f"{field_path}.knots[0]: support must start at >= 0")
        if np.any(np.diff(t) <= 0.0):
            raise ConfigError(f"{field_path}.knots: must be strictly increasing")
        if abs(f[0]) > 1e-12 or abs(f[-1] - 1.0) > 1e-12:
            raise ConfigError(f"{field_path}.cdf: must rise from 0 to 1")
        if np.any(np.diff(f) < 0.0):
            raise ConfigError(f"{field_path}.cdf: must be nondecreasing")
        self._t = t
        self._f = f
        total, _ = integrate.quad(self.pdf, t[0], t[-1], limit=200)
        if abs(total - 1.0) > 1e-6:
            raise ConfigError(
                f"{field_path}: density integrates to {total:.8f}, expected 1 within 1e-6"
            )

    def cdf(self, tau: float) -> float:
        return float(np.interp(tau, self._t, self._f))

    def pdf(self, tau: float) -> float:
        if tau < self._t[0] or tau > self._t[-1]:
            return 0.0
        i = min(np.searchsorted(self._t, tau, side="right"), self._t.size - 1)
        dt = self._t[i] - self._t[i - 1]
        return float((self._f[i] - self._f[i - 1]) / dt)

    def ppf(self, q) -> np.ndarray:
        return np.interp(q, self._f, self._t)

    def mean(self) -> float:
        # E[T] = integral of (1 - CDF), exact for the piecewise-linear table.
        mids = 0.5 * (self._f[1:] + self._f[:-1])
        return float(self._t[0] + np.sum((1.0 - mids) * np.diff(self._t)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.ppf(rng.random(size))


class EmpiricalInterArrival:
    """Inter-arrival model backed by piecewise-linear CDF tables.

    Either one shared table (independent of label and type) or one table per
    (label, type) pair. Only the shared form admits the reduced aggregated
    evaluations.
    """

    def __init__(self, shared: PiecewiseLinearCdf | None = None,
                 per_pair: dict | None = None):
        if (shared is None) == (per_pair is None):
            raise ConfigError("inter_arrival: give exactly one of shared/per_pair tables")
        self._shared = shared
        self._per_pair = dict(per_pair) if per_pair else None

    @property
    def state_independent(self) -> bool:
        return self._shared is not None

    def table(self, label: int, attack_type: AttackType) -> PiecewiseLinearCdf:
        if self._shared is not None:
            return self._shared
        try:
            return self._per_pair[(label, AttackType(attack_type))]
        except KeyError:
            raise ConfigError(
                f"inter_arrival: no table for label {label}, type {AttackType(attack_type).short}"
            ) from None

    def sampler(self, label: int, attack_type: AttackType):
        table = self.table(label, attack_type)
        return lambda rng, size: table.sample(rng, size)

    def pdf(self, tau: float, label: int = 0,
            attack_type: AttackType = AttackType.FEINT) -> float:
        return self.table(label, attack_type).pdf(tau)

    def inspection_distribution(self, stage_pairs, sample_count: int = 100_000,
                                seed: int = 0) -> MonteCarloConvolution:
        samplers = [self.sampler(lbl, at) for lbl, at in stage_pairs]
        return MonteCarloConvolution(samplers, sample_count=sample_count, seed=seed)


# ---------------------------------------------------------------------------
# The attack model and trajectory sampling


@dataclass(frozen=True)
class AttackModel:
    """Label set, type prior, per-type kernel and inter-arrival model."""

    labels: LabelSet
    prior: TypePrior
    kernel: TransitionKernel
    inter_arrival: ExponentialInterArrival | EmpiricalInterArrival

    def __post_init__(self):
        if self.kernel.n_labels != len(self.labels):
            raise ConfigError(
                f"transition: {self.kernel.n_labels} rows for {len(self.labels)} labels"
            )


@dataclass(frozen=True)
class Trajectory:
    """One seeded realization of sequential attack arrivals.

    ``inter_arrival[k]`` is the gap between arrival ``k`` and ``k + 1``;
    ``time[0]`` is 0 and times accumulate the gaps.
    """

    time: np.ndarray
    inter_arrival: np.ndarray
    attack_type: np.ndarray
    label: np.ndarray
    seed: int

    def __len__(self) -> int:
        return self.time.size

    def rows(self, labels: LabelSet):
        for k in range(len(self)):
            yield (k, self.time[k], self.inter_arrival[k],
                   "feint" if self.attack_type[k] == AttackType.FEINT else "real",
                   labels.names[self.label[k]])


def sample_trajectory(model: AttackModel, horizon: int, seed: int,
                      stream_index: int = 0,
                      initial_label: int | None = None) -> Trajectory:
    """Sample ``horizon`` attack stages; deterministic for a given seed.

    The starting label is drawn uniformly unless ``initial_label`` pins it.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    rng = stream(seed, stream_index)
    n = len(model.labels)

    types = np.where(rng.random(horizon) < model.prior.feint,
                     AttackType.FEINT, AttackType.REAL).astype(np.int8)

    labels = np.empty(horizon, dtype=np.int64)
    if initial_label is None:
        labels[0] = rng.integers(n)
    else:
        labels[0] = initial_label
    if horizon > 1:
        cum = np.cumsum(np.stack([model.kernel.matrix(t) for t in ATTACK_TYPES]), axis=2)
        steps = rng.random(horizon - 1)
        for k in range(horizon - 1):
            labels[k + 1] = np.searchsorted(cum[types[k], labels[k]], steps[k],
                                            side="right")

    if isinstance(model.inter_arrival, ExponentialInterArrival):
        tau = rng.exponential(scale=1.0 / model.inter_arrival.rate, size=horizon)
    else:
        u = rng.random(horizon)
        tau = np.empty(horizon)
        for k in range(horizon):
            tau[k] = model.inter_arrival.table(int(labels[k]), AttackType(int(types[k]))).ppf(u[k])

    time = np.concatenate([[0.0], np.cumsum(tau[:-1])])
    return Trajectory(time=time, inter_arrival=tau, attack_type=types,
                      label=labels, seed=seed)


def inspection_time_distribution(model: AttackModel, period: int,
                                 stage_pairs=None,
                                 sample_count: int = 100_000, seed: int = 0):
    """Distribution of the time available to inspect one highlighted alert,
    i.e. the sum of ``period`` consecutive inter-arrival times.

    Exponential models return the analytic Erlang handle. Empirical models
    return a Monte Carlo convolution; when the tables vary per (label, type)
    the per-stage ``stage_pairs`` sequence must be supplied.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    if stage_pairs is None:
        if not model.inter_arrival.state_independent:
            raise ModelError(
                "inter-arrival tables vary per (label, type); pass the per-stage pairs")
        stage_pairs = [(0, AttackType.FEINT)] * period
    if len(stage_pairs) != period:
        raise ValueError(f"expected {period} stage pairs, got {len(stage_pairs)}")
    if isinstance(model.inter_arrival, ExponentialInterArrival):
        return model.inter_arrival.inspection_distribution(stage_pairs)
    return model.inter_arrival.inspection_distribution(
        stage_pairs, sample_count=sample_count, seed=seed)
