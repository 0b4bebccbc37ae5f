# core/isga.py
"""
Population optimizers for coefficient search.

Snow-geese search (herringbone exploration, straight-line exploitation), the
improved variant whose exploitation uses bat echolocation, plain bat search
and particle swarm as a reference. All variants clamp positions to the box
and track the incumbent greedily.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

VELOCITY_DRAG = 1.29e-2
PSO_INERTIA = 0.729
PSO_ACCEL = 1.49445

Objective = Callable[[np.ndarray], float]


class Variant(str, Enum):
    SGA = "SGA"
    ISGA = "ISGA"
    BAT = "BAT"
    PSO = "PSO"


class SgaDamping(str, Enum):
    AS_PRINTED = "as_printed"   # 4t / (M e^M)
    EXP_RATIO = "exp_ratio"     # 4t / (M e^(t/M))


class TailTerm(str, Enum):
    DIFFERENCE = "difference"   # X_n - X_i
    AS_PRINTED = "as_printed"   # X_n + X_i


@dataclass
class OptimizerConfig:
    """Population, iteration budget, search box and variant switches."""
    lower: np.ndarray
    upper: np.ndarray
    population: int = 30
    max_iters: int = 500
    variant: Variant = Variant.ISGA
    f_min: float = 10.0
    f_max: float = 100.0
    seed: int = 0
    sga_damping: SgaDamping = SgaDamping.AS_PRINTED
    sga_tail_term: TailTerm = TailTerm.AS_PRINTED
    jobs: int = 1

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        self.variant = Variant(self.variant)
        self.sga_damping = SgaDamping(self.sga_damping)
        self.sga_tail_term = TailTerm(self.sga_tail_term)
        errors = self.validate()
        if errors:
            raise ValueError("; ".join(errors))

    def validate(self) -> List[str]:
        errors = []
        if self.population < 5:
            errors.append("population must be at least 5")
        if self.max_iters < 1:
            errors.append("max_iters must be at least 1")
        if self.lower.shape != self.upper.shape:
            errors.append("lower and upper bounds differ in length")
        elif np.any(self.lower > self.upper):
            errors.append("every lower bound must not exceed its upper bound")
        if self.f_min > self.f_max:
            errors.append("f_min must not exceed f_max")
        if self.jobs < 1:
            errors.append("jobs must be at least 1")
        return errors

    @property
    def dim(self) -> int:
        return self.lower.size

    def clamp(self, X: np.ndarray) -> np.ndarray:
        return np.clip(X, self.lower, self.upper)


@dataclass
class Swarm:
    """Row i of each array belongs to agent i."""
    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray
    personal_best: Optional[np.ndarray] = None
    personal_best_fitness: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.positions.shape[0]


@dataclass
class OptimizationResult:
    best_position: np.ndarray
    best_fitness: float
    curve: np.ndarray
    variant: Variant
    evaluations: int = 0
    failed_evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            'variant': self.variant.value,
            'best_fitness': self.best_fitness,
            'best_position': self.best_position.tolist(),
            'evaluations': self.evaluations,
            'failed_evaluations': self.failed_evaluations,
        }


def omega_phase(t: int, M: int) -> float:
    """Phase angle of iteration ``t``; exploration while below π."""
    if not 0 <= t <= M:
        raise ValueError(f"iteration {t} outside 0..{M}")
    return 2.0 * math.pi * t / M


def velocity_damping(t: int, M: int, mode: SgaDamping) -> float:
    if mode == SgaDamping.EXP_RATIO:
        return 4.0 * t / (M * math.exp(t / M))
    # e^-M underflows to zero for large budgets
    return 4.0 * t / M * math.exp(-M) if M < 745 else 0.0


def weighted_centroid(positions: np.ndarray, fitness: np.ndarray) -> np.ndarray:
    """
    Fitness-weighted mean position.

    Falls back to the arithmetic mean when the weights are not all of one sign,
    sum to zero or are not finite.
    """
    f = np.asarray(fitness, dtype=float)
    total = f.sum()
    if np.all(np.isfinite(f)) and (np.all(f >= 0) or np.all(f <= 0)) and total != 0.0:
        return (f @ positions) / total
    return positions.mean(axis=0)


def _coefficients(rng: np.random.Generator, n: int,
                  override: Optional[Tuple[float, float, float]]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if override is not None:
        b, d, eta = override
        return np.full(n, b, dtype=float), np.full(n, d, dtype=float), np.full(n, eta, dtype=float)
    return 4.0 * rng.random(n) - 2.0, 3.0 * rng.random(n) - 1.5, 2.0 * rng.random(n) - 1.0


def explore_step(swarm: Swarm, best: np.ndarray, t: int, cfg: OptimizerConfig, rng: np.random.Generator,
                 coefficients: Optional[Tuple[float, float, float]] = None) -> Swarm:
    """
    Herringbone exploration.

    Agents are ranked by fitness: the leading fifth follows the best goose,
    the midsection is also pushed away from the centroid, the tail is pulled
    towards the centroid and steered relative to the last goose.

    Args:
        swarm: Current swarm
        best: Incumbent position X_b
        t: Iteration index
        cfg: Optimizer configuration
        rng: Generator for the b, d, η draws
        coefficients: Optional fixed (b, d, η)

    Returns:
        New swarm (fitness not yet re-evaluated)
    """
    n = swarm.size
    X, V = swarm.positions, swarm.velocities
    order = np.argsort(swarm.fitness, kind='stable')
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    lead, mid = n // 5, 4 * n // 5

    omega = omega_phase(t, cfg.max_iters)
    centroid = weighted_centroid(X, swarm.fitness)
    V_new = (velocity_damping(t, cfg.max_iters, cfg.sga_damping) * V + (best - X)
             - VELOCITY_DRAG * V ** 2 * math.sin(omega) / 2.0)

    b, d, eta = (c[:, None] for c in _coefficients(rng, n, coefficients))
    toward_best = X + b * (best - X)
    last = X[order[-1]]
    tail = last - X if cfg.sga_tail_term == TailTerm.DIFFERENCE else last + X

    r = rank[:, None]
    X_new = np.where(
        r < lead, toward_best + V_new,
        np.where(r < mid,
                 toward_best - d * (centroid - X) + V_new,
                 toward_best + d * (centroid - X) - eta * tail + V_new))
    return replace(swarm, positions=cfg.clamp(X_new), velocities=V_new)


def exploit_step_sga(swarm: Swarm, best: np.ndarray, cfg: OptimizerConfig, rng: np.random.Generator,
                     r: Optional[np.ndarray] = None) -> Swarm:
    """Straight-line exploitation: multiplicative step, or a Brownian step scaled by the same factor."""
    n, d = swarm.positions.shape
    X = swarm.positions
    r = rng.random(n) if r is None else np.broadcast_to(np.asarray(r, dtype=float), (n,))
    brownian = rng.standard_normal((n, d))
    away = X - best
    step = np.where(r[:, None] > 0.5, away * r[:, None], away * r[:, None] * brownian)
    return replace(swarm, positions=cfg.clamp(X + step))


def exploit_step_bat(swarm: Swarm, best: np.ndarray, cfg: OptimizerConfig, rng: np.random.Generator,
                     xi: Optional[np.ndarray] = None) -> Swarm:
    """Echolocation update: fresh frequency per agent, velocity then position."""
    n = swarm.size
    xi = rng.random(n) if xi is None else np.broadcast_to(np.asarray(xi, dtype=float), (n,))
    freq = cfg.f_min + (cfg.f_max - cfg.f_min) * xi
    V = swarm.velocities + (swarm.positions - best) * freq[:, None]
    return replace(swarm, positions=cfg.clamp(swarm.positions + V), velocities=V)


def pso_step(swarm: Swarm, best: np.ndarray, cfg: OptimizerConfig, rng: np.random.Generator) -> Swarm:
    n, d = swarm.positions.shape
    X = swarm.positions
    r1, r2 = rng.random((n, d)), rng.random((n, d))
    V = (PSO_INERTIA * swarm.velocities
         + PSO_ACCEL * r1 * (swarm.personal_best - X)
         + PSO_ACCEL * r2 * (best - X))
    return replace(swarm, positions=cfg.clamp(X + V), velocities=V)


class _Evaluator:
    """Objective wrapper that keeps the previous fitness on failure."""

    def __init__(self, objective: Objective, jobs: int = 1):
        self.objective = objective
        self.jobs = jobs
        self.calls = 0
        self.failures = 0

    def _one(self, x: np.ndarray) -> Optional[float]:
        try:
            value = float(self.objective(x))
        except Exception as e:
            logger.debug("objective failed at %s: %s", x, e)
            return None
        return value if not math.isnan(value) else None

    def __call__(self, X: np.ndarray, previous: Optional[np.ndarray] = None) -> np.ndarray:
        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as executor:
                values = list(executor.map(self._one, X))
        else:
            values = [self._one(x) for x in X]
        self.calls += len(values)
        out = np.empty(len(values))
        for i, v in enumerate(values):
            if v is None:
                self.failures += 1
                v = previous[i] if previous is not None else math.inf
            out[i] = v
        return out


def run(objective: Objective, cfg: OptimizerConfig,
        progress_callback: Optional[Callable[[int, int, float], None]] = None) -> OptimizationResult:
    """
    Minimize ``objective`` over the box of ``cfg``.

    Args:
        objective: Map from a position vector to a real fitness
        cfg: Optimizer configuration
        progress_callback: Optional callback(iteration, total, best fitness)

    Returns:
        OptimizationResult with the per-iteration incumbent curve
    """
    rng = np.random.default_rng(cfg.seed)
    n, d, M = cfg.population, cfg.dim, cfg.max_iters
    evaluate = _Evaluator(objective, cfg.jobs)

    X = cfg.lower + (cfg.upper - cfg.lower) * rng.random((n, d))
    fitness = evaluate(X)
    swarm = Swarm(positions=X, velocities=np.zeros((n, d)), fitness=fitness)
    if cfg.variant == Variant.PSO:
        swarm.personal_best = X.copy()
        swarm.personal_best_fitness = fitness.copy()

    i = int(np.argmin(fitness))
    best_x, best_f = X[i].copy(), float(fitness[i])
    curve = np.empty(M)

    logger.info("%s: n=%d d=%d M=%d", cfg.variant.value, n, d, M)
    for t in range(M):
        if cfg.variant == Variant.PSO:
            swarm = pso_step(swarm, best_x, cfg, rng)
        elif cfg.variant == Variant.BAT:
            swarm = exploit_step_bat(swarm, best_x, cfg, rng)
        elif omega_phase(t, M) < math.pi:
            swarm = explore_step(swarm, best_x, t, cfg, rng)
        elif cfg.variant == Variant.ISGA:
            swarm = exploit_step_bat(swarm, best_x, cfg, rng)
        else:
            swarm = exploit_step_sga(swarm, best_x, cfg, rng)

        swarm.fitness = evaluate(swarm.positions, previous=swarm.fitness)
        if cfg.variant == Variant.PSO:
            improved = swarm.fitness < swarm.personal_best_fitness
            swarm.personal_best[improved] = swarm.positions[improved]
            swarm.personal_best_fitness[improved] = swarm.fitness[improved]

        i = int(np.argmin(swarm.fitness))
        if swarm.fitness[i] < best_f:
            best_x, best_f = swarm.positions[i].copy(), float(swarm.fitness[i])
        curve[t] = best_f

        logger.debug("iteration %d/%d best %.6g", t + 1, M, best_f)
        if progress_callback:
            progress_callback(t + 1, M, best_f)

    if evaluate.failures:
        logger.warning("%d objective evaluations failed", evaluate.failures)
    return OptimizationResult(best_position=best_x, best_fitness=best_f, curve=curve,
                              variant=cfg.variant, evaluations=evaluate.calls,
                              failed_evaluations=evaluate.failures)
