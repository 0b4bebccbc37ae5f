# core/harness.py
"""Monte Carlo experiment runner comparing filter variants on shared measurement streams."""

import concurrent.futures
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np
import pandas as pd

from .errors import ExperimentAborted
from .filters import ConfigSchedule, FilterState
from .metrics import ErrorAccumulator, ErrorMetrics, RmseConvention
from .noisegen import Scenario, apply_bad_data, stream
from .psmodel import DEFAULT_MAGNITUDE_FLOOR, PowerSystemModel, TruthTrajectory, simulate_truth

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InitializationSpec:
    """Isotropic starting covariances of every filter."""
    p0: float = 1e-2
    q0: float = 1e-5
    r0: float = 1e-2
    perturb_initial: bool = True


@dataclass
class ExperimentSpec:
    """
    Everything one comparison run needs.

    ``estimators`` maps report names to estimator objects exposing
    ``run(model, measurements, initial, schedule)`` (see estimators.BaseEstimator).
    """
    model: PowerSystemModel
    scenario: Scenario
    estimators: Mapping[str, Any]
    runs: int = 200
    horizon: int = 60
    base_seed: int = 0
    initialization: InitializationSpec = field(default_factory=InitializationSpec)
    rmse_convention: RmseConvention = RmseConvention.AS_PRINTED
    bus_count: Optional[int] = None
    sample_count: Optional[int] = None
    track_bus: Optional[int] = None
    magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR
    schedules: Dict[str, ConfigSchedule] = field(default_factory=dict)
    jobs: int = 1
    provenance: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> List[str]:
        errors = []
        if self.runs < 1:
            errors.append("runs must be at least 1")
        if self.horizon < 1:
            errors.append("horizon must be at least 1")
        if not self.estimators:
            errors.append("at least one filter is required")
        if self.jobs < 1:
            errors.append("jobs must be at least 1")
        if self.track_bus is not None:
            try:
                self.model.net.bus_index(self.track_bus)
            except KeyError:
                errors.append(f"track_bus {self.track_bus} is not a bus of the case")
        if self.scenario.bad_data is not None:
            for ev in self.scenario.bad_data.events:
                if not 1 <= ev.time_index <= self.horizon:
                    errors.append(f"bad-data event at t={ev.time_index} lies outside 1..{self.horizon}")
        return errors


@dataclass
class Experiment:
    """One simulated truth with the measurements every filter receives and the shared start."""
    index: int
    truth: TruthTrajectory
    measurements: np.ndarray
    initial_estimate: np.ndarray


def simulate_experiment(
    model: PowerSystemModel,
    scenario: Scenario,
    horizon: int,
    base_seed: int,
    index: int,
    initialization: InitializationSpec = InitializationSpec(),
    magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR,
) -> Experiment:
    """
    Simulate experiment ``index``: truth, measurements with bad data applied,
    and the perturbed initial estimate drawn from the 'initial' stream.
    """
    u0 = model.initial_state()
    truth = simulate_truth(model.net, model.plan, u0, horizon, scenario.process, scenario.measurement,
                           seed=base_seed, experiment_index=index,
                           level_coeff=model.level_coeff, trend_coeff=model.trend_coeff,
                           magnitude_floor=magnitude_floor)
    measurements = truth.measurements
    if scenario.bad_data is not None:
        mask = model.plan.power_mask()
        measurements = np.array([apply_bad_data(measurements[k], k + 1, scenario.bad_data, mask)
                                 for k in range(horizon)])

    start = u0.copy()
    if initialization.perturb_initial:
        rng = stream(base_seed, index, 'initial')
        start = start + np.sqrt(initialization.p0) * rng.standard_normal(u0.size)
    return Experiment(index=index, truth=truth, measurements=measurements, initial_estimate=start)


def initial_filter_state(model: PowerSystemModel, start: np.ndarray, init: InitializationSpec) -> FilterState:
    return FilterState.initial(model, start, init.p0, init.q0, init.r0, holt=model.initial_holt(start))


@dataclass
class FilterRun:
    """Per-filter reduction over all experiments."""
    name: str
    accumulator: ErrorAccumulator
    step_seconds: float = 0.0
    steps: int = 0
    fallbacks: int = 0
    jitter_events: int = 0
    failed_runs: int = 0
    iterations: Counter = field(default_factory=Counter)
    tracked_abs: Optional[np.ndarray] = None
    tracked_counts: Optional[np.ndarray] = None

    @property
    def mean_step_ms(self) -> float:
        return 1000.0 * self.step_seconds / self.steps if self.steps else 0.0

    def absorb(self, part: "_FilterPart") -> None:
        self.accumulator.add(part.mag_errors, part.phase_errors)
        self.step_seconds += part.step_seconds
        self.steps += part.steps
        self.fallbacks += part.fallbacks
        self.jitter_events += part.jitter_events
        self.failed_runs += int(part.failed)
        self.iterations.update(part.iterations)
        if part.tracked is not None:
            if self.tracked_abs is None:
                self.tracked_abs = np.zeros((self.accumulator.horizon, 2))
                self.tracked_counts = np.zeros(self.accumulator.horizon, dtype=int)
            k = part.tracked.shape[0]
            self.tracked_abs[:k] += part.tracked
            self.tracked_counts[:k] += 1

    def tracked_mean(self) -> Optional[np.ndarray]:
        """Mean absolute errors of the tracked bus per step (NaN where no run reached the step)."""
        if self.tracked_abs is None:
            return None
        counts = np.where(self.tracked_counts > 0, self.tracked_counts, np.nan)
        return self.tracked_abs / counts[:, None]


@dataclass
class _FilterPart:
    mag_errors: np.ndarray
    phase_errors: np.ndarray
    step_seconds: float
    steps: int
    fallbacks: int
    jitter_events: int
    failed: bool
    iterations: Dict[int, int]
    tracked: Optional[np.ndarray]


@dataclass
class FilterSummary:
    name: str
    metrics: ErrorMetrics
    mean_step_ms: float
    fallbacks: int
    jitter_events: int
    failed_runs: int
    iteration_histogram: Dict[int, int]
    tracked_bus_errors: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'filter': self.name,
            'armse_v': self.metrics.armse_v,
            'armse_phi': self.metrics.armse_phi,
            'mean_step_ms': self.mean_step_ms,
            'fallbacks': self.fallbacks,
            'jitter_events': self.jitter_events,
            'failed_runs': self.failed_runs,
            'iteration_histogram': {str(k): v for k, v in sorted(self.iteration_histogram.items())},
        }


@dataclass
class RunReport:
    """Result of run_experiment: one summary per filter plus provenance."""
    filters: Dict[str, FilterSummary]
    runs: int
    horizon: int
    floor_events: int = 0
    provenance: Dict[str, Any] = field(default_factory=dict)
    failed_experiments: Dict[int, str] = field(default_factory=dict)

    def summary_frame(self) -> pd.DataFrame:
        """One row per filter: filter, armse_v, armse_phi, mean_step_ms, fallbacks, failed_runs."""
        rows = [{
            'filter': s.name,
            'armse_v': s.metrics.armse_v,
            'armse_phi': s.metrics.armse_phi,
            'mean_step_ms': s.mean_step_ms,
            'fallbacks': s.fallbacks,
            'failed_runs': s.failed_runs,
        } for s in self.filters.values()]
        return pd.DataFrame(rows, columns=['filter', 'armse_v', 'armse_phi', 'mean_step_ms', 'fallbacks',
                                           'failed_runs'])

    def series_frame(self) -> pd.DataFrame:
        """Long format: filter, metric, t, value with metrics rmse_v and rmse_phi."""
        t = np.arange(1, self.horizon + 1)
        frames = []
        for s in self.filters.values():
            for metric, values in (('rmse_v', s.metrics.rmse_v), ('rmse_phi', s.metrics.rmse_phi)):
                frames.append(pd.DataFrame({'filter': s.name, 'metric': metric, 't': t, 'value': values}))
        if not frames:
            return pd.DataFrame(columns=['filter', 'metric', 't', 'value'])
        return pd.concat(frames, ignore_index=True)

    def tracked_frame(self) -> pd.DataFrame:
        """Mean absolute magnitude and phase error of the tracked bus per step."""
        rows = []
        for s in self.filters.values():
            if s.tracked_bus_errors is None:
                continue
            for k, (ev, ephi) in enumerate(s.tracked_bus_errors, start=1):
                rows.append({'filter': s.name, 't': k, 'abs_error_v': ev, 'abs_error_phi': ephi})
        return pd.DataFrame(rows, columns=['filter', 't', 'abs_error_v', 'abs_error_phi'])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'runs': self.runs,
            'horizon': self.horizon,
            'floor_events': self.floor_events,
            'provenance': self.provenance,
            'failed_experiments': {str(k): v for k, v in self.failed_experiments.items()},
            'filters': [s.to_dict() for s in self.filters.values()],
        }


def _run_one(spec: ExperimentSpec, index: int) -> Dict[str, Any]:
    exp = simulate_experiment(spec.model, spec.scenario, spec.horizon, spec.base_seed, index,
                              spec.initialization, spec.magnitude_floor)
    tracked_col = None if spec.track_bus is None else spec.model.net.bus_index(spec.track_bus)

    parts = {}
    for name, estimator in spec.estimators.items():
        initial = initial_filter_state(spec.model, exp.initial_estimate, spec.initialization)
        result = estimator.run(spec.model, exp.measurements, initial, schedule=spec.schedules.get(name))
        if result.error:
            logger.warning("experiment %d, %s: %s", index, name, result.error)
        done = result.completed_steps
        mag, phase = spec.model.bus_errors(result.estimates[:done], exp.truth.states[:done])
        tracked = None
        if tracked_col is not None:
            tracked = np.column_stack([np.abs(mag[:, tracked_col]), np.abs(phase[:, tracked_col])])
        parts[name] = _FilterPart(
            mag_errors=mag, phase_errors=phase,
            step_seconds=float(np.sum(result.step_times)), steps=result.completed_steps,
            fallbacks=result.fallback_count, jitter_events=result.jitter_count,
            failed=result.error is not None, iterations=result.iteration_histogram(),
            tracked=tracked,
        )
    return {'index': index, 'floor_events': exp.truth.floor_events, 'parts': parts}


def run_experiment(spec: ExperimentSpec,
                   progress_callback: Optional[Callable[[int, int], None]] = None) -> RunReport:
    """
    Run ``spec.runs`` experiments, feeding each simulated measurement stream to every filter.

    Experiments run on a thread pool; the reduction happens in experiment
    order so repeated runs give identical figures.

    Args:
        spec: Experiment specification
        progress_callback: Optional callback(completed, total)

    Returns:
        RunReport

    Raises:
        ValueError: invalid spec
        ExperimentAborted: an experiment raised; the exception carries the report of the rest
    """
    errors = spec.validate()
    if errors:
        raise ValueError("; ".join(errors))

    n_buses = spec.model.net.n_buses
    logger.info("running %d experiments of %d steps for %d filters (%s)",
                spec.runs, spec.horizon, len(spec.estimators), spec.scenario.name)

    outputs: Dict[int, Dict[str, Any]] = {}
    failures: Dict[int, str] = {}
    completed = 0
    with concurrent.futures.ThreadPoolExecutor(max_workers=spec.jobs) as executor:
        futures = {executor.submit(_run_one, spec, i): i for i in range(spec.runs)}
        for future in concurrent.futures.as_completed(futures):
            index = futures[future]
            try:
                outputs[index] = future.result()
            except Exception as e:
                logger.error("experiment %d raised: %s", index, e)
                failures[index] = f"{type(e).__name__}: {e}"
            completed += 1
            if progress_callback:
                progress_callback(completed, spec.runs)

    report = _reduce(spec, outputs, n_buses)
    if failures:
        report.provenance['aborted'] = True
        report.failed_experiments = dict(sorted(failures.items()))
        raise ExperimentAborted(f"{len(failures)} of {spec.runs} experiments raised", report=report,
                                failed_experiments=sorted(failures))
    return report


def _reduce(spec: ExperimentSpec, outputs: Dict[int, Dict[str, Any]], n_buses: int) -> RunReport:
    """Fold the finished experiments in index order."""
    runs = {name: FilterRun(name, ErrorAccumulator(spec.horizon, n_buses)) for name in spec.estimators}
    floor_events = 0
    for i in sorted(outputs):
        floor_events += outputs[i]['floor_events']
        for name, part in outputs[i]['parts'].items():
            runs[name].absorb(part)

    summaries = {}
    for name, fr in runs.items():
        if fr.accumulator.experiments:
            metrics = fr.accumulator.metrics(spec.rmse_convention, spec.bus_count, spec.sample_count)
        else:
            empty = np.full(spec.horizon, np.nan)
            metrics = ErrorMetrics(armse_v=float('nan'), armse_phi=float('nan'), rmse_v=empty, rmse_phi=empty)
        summaries[name] = FilterSummary(
            name=name,
            metrics=metrics,
            mean_step_ms=fr.mean_step_ms,
            fallbacks=fr.fallbacks,
            jitter_events=fr.jitter_events,
            failed_runs=fr.failed_runs,
            iteration_histogram=dict(fr.iterations),
            tracked_bus_errors=fr.tracked_mean(),
        )
        logger.info("%s: ARMSE V %.6g, phase %.6g, %.3f ms/step, %d fallbacks",
                    name, metrics.armse_v, metrics.armse_phi, fr.mean_step_ms, fr.fallbacks)

    provenance = {'seed': spec.base_seed, **spec.provenance}
    return RunReport(filters=summaries, runs=len(outputs), horizon=spec.horizon,
                     floor_events=floor_events, provenance=provenance)
