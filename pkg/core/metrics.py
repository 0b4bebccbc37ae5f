# core/metrics.py
"""Estimation accuracy metrics: per-time RMSE series and averaged RMSE."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import DimensionError


class RmseConvention(str, Enum):
    AS_PRINTED = "as_printed"    # per-time RMSE summed over time, divided by N
    INSIDE_ROOT = "inside_root"  # sqrt of the mean over experiments, buses and time


@dataclass
class ErrorMetrics:
    """Container for the accuracy figures of one filter."""
    armse_v: float = 0.0
    armse_phi: float = 0.0
    rmse_v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rmse_phi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    experiments: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'armse_v': self.armse_v,
            'armse_phi': self.armse_phi,
            'experiments': self.experiments,
            'horizon': int(self.rmse_v.size),
        }


class ErrorAccumulator:
    """
    Running sums of squared bus errors over Monte Carlo experiments.

    Each experiment contributes (k, A) arrays of magnitude and phase errors
    for steps 1..k with k <= T; a truncated run only counts where it has data.
    """

    def __init__(self, horizon: int, n_buses: int):
        self.horizon = horizon
        self.n_buses = n_buses
        self.sq_v = np.zeros(horizon)
        self.sq_phi = np.zeros(horizon)
        self.counts = np.zeros(horizon, dtype=int)
        self.experiments = 0

    def add(self, mag_errors: np.ndarray, phase_errors: np.ndarray) -> None:
        k = mag_errors.shape[0]
        if (mag_errors.shape != phase_errors.shape or mag_errors.ndim != 2
                or mag_errors.shape[1] != self.n_buses or k > self.horizon):
            raise DimensionError(f"error arrays {mag_errors.shape}, {phase_errors.shape} do not fit "
                                 f"({self.horizon}, {self.n_buses})")
        self.sq_v[:k] += np.sum(mag_errors ** 2, axis=1)
        self.sq_phi[:k] += np.sum(phase_errors ** 2, axis=1)
        self.counts[:k] += 1
        self.experiments += 1

    @property
    def covered(self) -> np.ndarray:
        return self.counts > 0

    def rmse_series(self, A: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Per-time RMSE of magnitudes and phases (NaN where no run reached the step)."""
        if self.experiments == 0:
            raise ValueError("no experiments accumulated")
        scale = (A or self.n_buses) * np.where(self.covered, self.counts, np.nan)
        return np.sqrt(self.sq_v / scale), np.sqrt(self.sq_phi / scale)

    def armse(self, convention: RmseConvention = RmseConvention.AS_PRINTED,
              A: Optional[int] = None, N: Optional[int] = None) -> Tuple[float, float]:
        """ARMSE over the covered steps; N defaults to their number."""
        if not np.any(self.covered):
            raise ValueError("no steps accumulated")
        mask = self.covered
        A = A or self.n_buses
        N = N or int(mask.sum())
        counts = self.counts[mask]
        return (_average(self.sq_v[mask], counts, A, N, convention),
                _average(self.sq_phi[mask], counts, A, N, convention))

    def metrics(self, convention: RmseConvention = RmseConvention.AS_PRINTED,
                A: Optional[int] = None, N: Optional[int] = None) -> ErrorMetrics:
        rmse_v, rmse_phi = self.rmse_series(A)
        if np.any(self.covered):
            armse_v, armse_phi = self.armse(convention, A, N)
        else:
            armse_v = armse_phi = float('nan')
        return ErrorMetrics(armse_v=armse_v, armse_phi=armse_phi, rmse_v=rmse_v, rmse_phi=rmse_phi,
                            experiments=self.experiments)


def _average(sq_sums: np.ndarray, counts: np.ndarray, A: int, N: int, convention: RmseConvention) -> float:
    if RmseConvention(convention) == RmseConvention.INSIDE_ROOT:
        return float(np.sqrt(np.sum(sq_sums / (A * counts)) / N))
    return float(np.sum(np.sqrt(sq_sums / (A * counts))) / N)


def armse(
    estimates: np.ndarray,
    truths: np.ndarray,
    n_buses: int,
    convention: RmseConvention = RmseConvention.AS_PRINTED,
    A: Optional[int] = None,
    N: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Averaged RMSE of voltage magnitudes and phases.

    Args:
        estimates: (D, T, 2A) or (T, 2A) bus-form arrays, magnitudes then phases
        truths: Same shape as ``estimates``
        n_buses: Bus count A of the case
        convention: Placement of the time average
        A: Override for the bus count in the normalization
        N: Override for the sample count (defaults to T)

    Returns:
        (ARMSE_V, ARMSE_phi)
    """
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape:
        raise DimensionError(f"estimate shape {est.shape} does not match truth shape {tru.shape}")
    if est.ndim == 2:
        est, tru = est[None], tru[None]
    if est.ndim != 3 or est.shape[2] != 2 * n_buses:
        raise DimensionError(f"expected (D, T, {2 * n_buses}) arrays, got {est.shape}")

    acc = ErrorAccumulator(est.shape[1], n_buses)
    for e, t in zip(est, tru):
        err = e - t
        acc.add(err[:, :n_buses], err[:, n_buses:])
    return acc.armse(convention, A, N)


def improvement_pct(baseline: float, proposed: float) -> float:
    """Relative error reduction of ``proposed`` against ``baseline`` in percent."""
    if baseline == 0:
        return 0.0
    return 100.0 * (baseline - proposed) / baseline


def timing_ratio(proposed_ms: float, baseline_ms: float) -> float:
    if baseline_ms <= 0:
        return float('nan')
    return proposed_ms / baseline_ms
