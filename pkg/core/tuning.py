# core/tuning.py
"""Offline coefficient tuning of the filters with the population optimizers."""

import logging
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .harness import InitializationSpec, initial_filter_state, simulate_experiment
from .isga import OptimizationResult, OptimizerConfig, run
from .metrics import ErrorAccumulator, RmseConvention
from .noisegen import Scenario
from .psmodel import PowerSystemModel

logger = logging.getLogger(__name__)

# Coordinate order of the search vector and the estimator parameter each one sets
PARAM_KEYS = ('ut_alpha', 'ut_beta', 'shape_1', 'shape_2', 'shape_3',
              'bandwidth_1', 'bandwidth_2', 'bandwidth_3', 'theta')

DEFAULT_BOUNDS: Tuple[Tuple[float, float], ...] = (
    (1e-4, 1.0), (0.0, 3.0),
    (1.5, 4.0), (1.5, 4.0), (1.5, 4.0),
    (0.5, 20.0), (0.5, 20.0), (0.5, 20.0),
    (0.05, 0.95),
)

# Coordinates a GAUSSIAN-criterion target actually uses
GAUSSIAN_KEYS = ('ut_alpha', 'ut_beta', 'theta')


@dataclass(frozen=True)
class TuningVector:
    """Unscented scaling, kernel shapes and bandwidths, and the noise forgetting factor."""
    alpha: float = 1e-2
    beta: float = 1.0
    shape_1: float = 2.1
    shape_2: float = 2.1
    shape_3: float = 2.9
    bandwidth_1: float = 6.3
    bandwidth_2: float = 6.3
    bandwidth_3: float = 3.2
    theta: float = 0.5

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "TuningVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (len(PARAM_KEYS),):
            raise ValueError(f"tuning vector needs {len(PARAM_KEYS)} entries, got {x.shape}")
        return cls(*(float(v) for v in x))

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])

    def to_params(self, target: str = 'gmmeef_aukf') -> Dict[str, float]:
        """Estimator parameters set by this vector (only α, β, θ for GAUSSIAN targets)."""
        params = dict(zip(PARAM_KEYS, self.to_array().tolist()))
        if target in ('aukf', 'ukf'):
            params = {k: params[k] for k in GAUSSIAN_KEYS}
        return params

    @classmethod
    def from_params(cls, params: Dict[str, Any]) -> "TuningVector":
        defaults = cls().to_array()
        return cls.from_array([params.get(k, d) for k, d in zip(PARAM_KEYS, defaults)])


@dataclass
class SearchBounds:
    """Per-coordinate box; lo == hi pins a coordinate."""
    lower: np.ndarray = field(default_factory=lambda: np.array([lo for lo, _ in DEFAULT_BOUNDS]))
    upper: np.ndarray = field(default_factory=lambda: np.array([hi for _, hi in DEFAULT_BOUNDS]))

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != (len(PARAM_KEYS),) or self.upper.shape != (len(PARAM_KEYS),):
            raise ValueError(f"search bounds need {len(PARAM_KEYS)} coordinates")
        if np.any(self.lower > self.upper):
            raise ValueError("every lower bound must not exceed its upper bound")

    @classmethod
    def pinned(cls, vector: TuningVector) -> "SearchBounds":
        x = vector.to_array()
        return cls(lower=x.copy(), upper=x.copy())

    @classmethod
    def from_mapping(cls, bounds: Dict[str, Sequence[float]]) -> "SearchBounds":
        """Default box with some coordinates replaced, keyed by parameter name."""
        out = cls()
        for key, (lo, hi) in bounds.items():
            if key not in PARAM_KEYS:
                raise KeyError(f"unknown tuning coordinate {key!r}")
            i = PARAM_KEYS.index(key)
            out.lower[i], out.upper[i] = float(lo), float(hi)
        out.__post_init__()
        return out

    def contains(self, vector: TuningVector) -> bool:
        x = vector.to_array()
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class FitnessBudget:
    """Monte Carlo repeats and horizon of one fitness evaluation."""
    runs: int = 10
    horizon: int = 60


class FilterFitness:
    """
    ARMSE_V + ARMSE_phi of a filter configured from a tuning vector.

    Trajectories are simulated once and reused for every evaluation, so two
    candidate vectors are compared on identical noise.
    """

    def __init__(
        self,
        model: PowerSystemModel,
        scenario: Scenario,
        estimator,
        budget: FitnessBudget = FitnessBudget(),
        base_seed: int = 0,
        initialization: InitializationSpec = InitializationSpec(),
        target: str = 'gmmeef_aukf',
        rmse_convention: RmseConvention = RmseConvention.AS_PRINTED,
    ):
        self.model = model
        self.estimator = estimator
        self.budget = budget
        self.initialization = initialization
        self.target = target
        self.rmse_convention = rmse_convention
        self.experiments = [
            simulate_experiment(model, scenario, budget.horizon, base_seed, i, initialization)
            for i in range(budget.runs)
        ]

    def evaluate(self, vector: TuningVector) -> float:
        estimator = self.estimator.with_params(vector.to_params(self.target))
        acc = ErrorAccumulator(self.budget.horizon, self.model.net.n_buses)
        for exp in self.experiments:
            initial = initial_filter_state(self.model, exp.initial_estimate, self.initialization)
            result = estimator.run(self.model, exp.measurements, initial)
            k = result.completed_steps
            if k == 0:
                return float('inf')
            mag, phase = self.model.bus_errors(result.estimates, exp.truth.states[:k])
            acc.add(mag, phase)
        armse_v, armse_phi = acc.armse(self.rmse_convention)
        return armse_v + armse_phi

    def __call__(self, x: np.ndarray) -> float:
        return self.evaluate(TuningVector.from_array(x))


@dataclass
class TuningResult:
    """Best vector, its fitness, the optimizer curve and an optional re-tune schedule."""
    vector: TuningVector
    fitness: float
    curve: np.ndarray
    target: str
    optimization: Optional[OptimizationResult] = None
    schedule: List[Tuple[int, TuningVector]] = field(default_factory=list)

    def to_overlay(self) -> Dict[str, Any]:
        """Filter-block overlay holding the tuned parameters."""
        overlay = {
            'target': self.target,
            'fitness': float(self.fitness),
            'params': self.vector.to_params(self.target),
        }
        if self.schedule:
            overlay['schedule'] = [{'start_step': s, 'params': v.to_params(self.target)}
                                   for s, v in self.schedule]
        return overlay


def tune_filter(
    model: PowerSystemModel,
    scenario: Scenario,
    estimator,
    opt_cfg: OptimizerConfig,
    budget: FitnessBudget = FitnessBudget(),
    base_seed: int = 0,
    initialization: InitializationSpec = InitializationSpec(),
    target: str = 'gmmeef_aukf',
    retune_every: Optional[int] = None,
    rmse_convention: RmseConvention = RmseConvention.AS_PRINTED,
    progress_callback=None,
) -> TuningResult:
    """
    Search the coefficient box for the lowest ARMSE_V + ARMSE_phi.

    Args:
        model: State-space model of the case
        scenario: Noise scenario to tune on
        estimator: Estimator whose parameters are tuned (defaults fill the rest)
        opt_cfg: Optimizer configuration; its box must be 9-dimensional
        budget: Runs and horizon of each fitness evaluation
        base_seed: Seed of the tuning trajectories
        initialization: Starting covariances
        target: Estimator key; GAUSSIAN targets only use α, β, θ
        retune_every: When set, tune again on each window of this many steps
        rmse_convention: Placement of the time average in ARMSE
        progress_callback: Forwarded to the optimizer

    Returns:
        TuningResult
    """
    if opt_cfg.dim != len(PARAM_KEYS):
        raise ValueError(f"optimizer box has {opt_cfg.dim} coordinates, expected {len(PARAM_KEYS)}")

    fitness = FilterFitness(model, scenario, estimator, budget, base_seed, initialization, target,
                            rmse_convention)
    logger.info("tuning %s with %s: %d runs x %d steps per evaluation",
                target, opt_cfg.variant.value, budget.runs, budget.horizon)
    opt = run(fitness, opt_cfg, progress_callback=progress_callback)
    best = TuningVector.from_array(opt.best_position)
    logger.info("best fitness %.6g at %s", opt.best_fitness, best)
    result = TuningResult(vector=best, fitness=opt.best_fitness, curve=opt.curve, target=target,
                          optimization=opt)

    if retune_every:
        result.schedule = _rolling_schedule(model, scenario, estimator, opt_cfg, budget, base_seed,
                                            initialization, target, retune_every, rmse_convention, best)
    return result


def _rolling_schedule(model, scenario, estimator, opt_cfg, budget, base_seed, initialization, target,
                      every, rmse_convention, first) -> List[Tuple[int, TuningVector]]:
    """
    Re-tune on growing horizons: the vector used from step s on is the best
    for the trajectories truncated at s + every - 1.
    """
    schedule = [(1, first)]
    for start in range(1 + every, budget.horizon + 1, every):
        window = FitnessBudget(runs=budget.runs, horizon=min(start + every - 1, budget.horizon))
        fitness = FilterFitness(model, scenario, estimator, window, base_seed, initialization, target,
                                rmse_convention)
        opt = run(fitness, opt_cfg)
        schedule.append((start, TuningVector.from_array(opt.best_position)))
        logger.info("re-tuned for steps from %d: fitness %.6g", start, opt.best_fitness)
    return schedule


def schedule_configs(estimator, schedule: Sequence[Tuple[int, TuningVector]],
                     target: str = 'gmmeef_aukf') -> list:
    """Turn a re-tune schedule into the (start step, FilterConfig) pairs run_filter consumes."""
    return [(start, estimator.with_params(vector.to_params(target)).build_config())
            for start, vector in schedule]
