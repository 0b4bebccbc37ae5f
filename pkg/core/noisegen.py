# core/noisegen.py
"""Reproducible noise, impulse and bad-data generators for the experiment scenarios."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .errors import ConfigError

logger = logging.getLogger(__name__)

STREAM_ROLES = {'process': 0, 'measurement': 1, 'impulse': 2, 'initial': 3}


def stream(base_seed: int, experiment_index: int, role: str) -> np.random.Generator:
    """Independent generator for one (seed, experiment, role) triple."""
    if role not in STREAM_ROLES:
        raise ValueError(f"unknown stream role {role!r}")
    return np.random.default_rng(np.random.SeedSequence([base_seed, experiment_index, STREAM_ROLES[role]]))


@dataclass
class ScenarioStreams:
    """The generators one Monte Carlo experiment draws from."""
    process: np.random.Generator
    measurement: np.random.Generator
    impulse: np.random.Generator
    initial: np.random.Generator

    @classmethod
    def derive(cls, base_seed: int, experiment_index: int) -> "ScenarioStreams":
        return cls(**{role: stream(base_seed, experiment_index, role) for role in STREAM_ROLES})


class NoiseSource(Protocol):
    def sample(self, rng: np.random.Generator, d: int,
               impulse_rng: Optional[np.random.Generator] = None) -> np.ndarray:
        ...


@dataclass
class MixtureSpec:
    """Per-component Gaussian mixture given as (weight, mean, variance) triples."""
    components: List[Tuple[float, float, float]]

    def __post_init__(self):
        self.components = [tuple(float(x) for x in c) for c in self.components]
        if not self.components:
            raise ConfigError("mixture needs at least one component")
        weights = [w for w, _, _ in self.components]
        if any(w < 0 or w > 1 for w in weights):
            raise ConfigError("mixture weights must lie in [0, 1]")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ConfigError(f"mixture weights sum to {sum(weights)}, expected 1")
        if any(var < 0 for _, _, var in self.components):
            raise ConfigError("mixture variances must be non-negative")

    @classmethod
    def gaussian(cls, variance: float, mean: float = 0.0) -> "MixtureSpec":
        return cls([(1.0, mean, variance)])

    def mean(self) -> float:
        return sum(w * mu for w, mu, _ in self.components)

    def variance(self) -> float:
        second = sum(w * (var + mu * mu) for w, mu, var in self.components)
        return second - self.mean() ** 2

    def sample(self, rng: np.random.Generator, d: int,
               impulse_rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return sample_mixture(self, rng, d)


@dataclass
class ImpulseSpec:
    """
    Base noise plus sparse impulses.

    Each step, ``ceil(impulse_fraction * d)`` components are chosen uniformly;
    each chosen component independently receives, with probability
    ``impulse_prob``, a Gaussian impulse whose standard deviation is
    ``impulse_scale`` times the base standard deviation.
    """
    base: MixtureSpec = field(default_factory=lambda: MixtureSpec.gaussian(1.0))
    impulse_prob: float = 0.05
    impulse_scale: float = 10.0
    impulse_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.impulse_prob <= 1.0:
            raise ConfigError("impulse_prob must lie in [0, 1]")
        if self.impulse_scale <= 0:
            raise ConfigError("impulse_scale must be positive")
        if not 0.0 < self.impulse_fraction <= 1.0:
            raise ConfigError("impulse_fraction must lie in (0, 1]")

    @property
    def impulse_std(self) -> float:
        return self.impulse_scale * math.sqrt(self.base.variance())

    def sample(self, rng: np.random.Generator, d: int,
               impulse_rng: Optional[np.random.Generator] = None) -> np.ndarray:
        return sample_impulse(self, rng, d, impulse_rng=impulse_rng)


def sample_mixture(spec: MixtureSpec, rng: np.random.Generator, d: int) -> np.ndarray:
    """Draw ``d`` independent components, each from a mixture member picked by weight."""
    weights = np.array([w for w, _, _ in spec.components])
    means = np.array([mu for _, mu, _ in spec.components])
    stds = np.sqrt(np.array([var for _, _, var in spec.components]))
    if len(weights) == 1:
        which = np.zeros(d, dtype=int)
    else:
        which = rng.choice(len(weights), size=d, p=weights / weights.sum())
    return means[which] + stds[which] * rng.standard_normal(d)


def sample_impulse(spec: ImpulseSpec, rng: np.random.Generator, d: int,
                   impulse_rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Base draw from ``rng`` plus impulses whose locations and sizes come from ``impulse_rng``."""
    out = sample_mixture(spec.base, rng, d)
    if spec.impulse_prob <= 0.0:
        return out
    irng = impulse_rng if impulse_rng is not None else rng
    k = min(d, math.ceil(spec.impulse_fraction * d))
    candidates = np.arange(d) if k == d else irng.choice(d, size=k, replace=False)
    hit = irng.random(k) < spec.impulse_prob
    out[candidates[hit]] += spec.impulse_std * irng.standard_normal(int(hit.sum()))
    return out


@dataclass(frozen=True)
class BadDataEvent:
    time_index: int
    multiplier: float
    measurement_class: str = "power"


@dataclass
class BadDataSchedule:
    """Multiplicative corruption of power meters at given 1-based steps."""
    events: List[BadDataEvent] = field(default_factory=list)

    def __post_init__(self):
        for ev in self.events:
            if ev.measurement_class != "power":
                raise ConfigError(f"unsupported bad-data class {ev.measurement_class!r}")

    def validate(self, horizon: int) -> None:
        for ev in self.events:
            if not 1 <= ev.time_index <= horizon:
                raise ConfigError(f"bad-data event at t={ev.time_index} lies outside the horizon 1..{horizon}")

    def multipliers_at(self, t: int) -> List[float]:
        return [ev.multiplier for ev in self.events if ev.time_index == t]


def apply_bad_data(v_t: np.ndarray, t: int, schedule: Optional[BadDataSchedule],
                   power_mask: np.ndarray) -> np.ndarray:
    """
    Corrupt injection and flow readings scheduled at step ``t``.

    Args:
        v_t: Measurement vector
        t: 1-based step index
        schedule: Bad-data schedule (None means no corruption)
        power_mask: Boolean mask of power entries (voltage magnitudes untouched)

    Returns:
        Corrupted copy of ``v_t`` (or ``v_t`` itself when nothing is scheduled)
    """
    if schedule is None:
        return v_t
    factors = schedule.multipliers_at(t)
    if not factors:
        return v_t
    out = np.array(v_t, dtype=float, copy=True)
    for factor in factors:
        out[power_mask] *= factor
    return out


@dataclass
class Scenario:
    """Noise sources and faults of one experimental scenario."""
    name: str
    process: Optional[NoiseSource]
    measurement: Optional[NoiseSource]
    bad_data: Optional[BadDataSchedule] = None


# Bimodal mixtures with heavy outlier component
SCENARIO2_PROCESS = [(0.4, 0.2, 1e-4), (0.2, 0.0, 1e-2), (0.4, -0.2, 1e-4)]
SCENARIO2_MEASUREMENT = [(0.4, 0.2, 0.3), (0.2, 0.0, 20.0), (0.4, -0.2, 0.3)]
# Asymmetric mixtures
SCENARIO3_PROCESS = [(0.4, 0.3, 1e-3), (0.2, 0.0, 1e-2), (0.4, -0.1, 1e-4)]
SCENARIO3_MEASUREMENT = [(0.4, 0.3, 0.2), (0.2, 0.0, 20.0), (0.4, -0.1, 0.3)]

DEFAULT_BAD_DATA = [(20, 1.15), (40, 0.85)]

SCENARIO_NAMES = ('noise-free', 'scenario1', 'scenario2', 'scenario3', 'scenario4')


def scenario_preset(
    name: str,
    q0: float = 1e-5,
    r0: float = 1e-2,
    impulse_prob: float = 0.05,
    impulse_scale: float = 10.0,
    impulse_fraction: float = 0.1,
    bad_data: Optional[Sequence[Tuple[int, float]]] = None,
) -> Scenario:
    """
    Build a named scenario.

    Args:
        name: One of SCENARIO_NAMES
        q0: Process noise variance of the Gaussian base (scenarios 1 and 4)
        r0: Measurement noise variance of the Gaussian base (scenarios 1 and 4)
        impulse_prob: Per-component impulse probability
        impulse_scale: Impulse std as a multiple of the base std
        impulse_fraction: Share of components eligible for an impulse each step
        bad_data: (t, multiplier) events for scenario 4

    Returns:
        Scenario
    """
    if name == 'noise-free':
        return Scenario(name, None, None)

    if name in ('scenario1', 'scenario4'):
        def impulsive(variance: float) -> ImpulseSpec:
            return ImpulseSpec(base=MixtureSpec.gaussian(variance), impulse_prob=impulse_prob,
                               impulse_scale=impulse_scale, impulse_fraction=impulse_fraction)

        schedule = None
        if name == 'scenario4':
            events = bad_data if bad_data is not None else DEFAULT_BAD_DATA
            schedule = BadDataSchedule([BadDataEvent(int(t), float(k)) for t, k in events])
        return Scenario(name, impulsive(q0), impulsive(r0), schedule)

    if name == 'scenario2':
        return Scenario(name, MixtureSpec(SCENARIO2_PROCESS), MixtureSpec(SCENARIO2_MEASUREMENT))
    if name == 'scenario3':
        return Scenario(name, MixtureSpec(SCENARIO3_PROCESS), MixtureSpec(SCENARIO3_MEASUREMENT))

    raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}")
