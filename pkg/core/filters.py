# core/filters.py
"""
Unscented filter engine.

One engine covers the plain UKF, the Sage-Husa adaptive UKF and the robust
variants whose measurement update is a fixed-point iteration on an augmented
regression (correntropy, error entropy, error entropy with fiducial points,
and the generalized mixture of those). The variant is selected by the
criterion mode and the adaptation switch of FilterConfig.
"""

import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import linalg

from .criteria import CriterionConfig, CriterionMode, LambdaPrefactor, weight_matrices
from .errors import (
    DecompositionError,
    DimensionError,
    FilterStepError,
    FixedPointDivergence,
)
from .psmodel import HoltState
from .unscented import UtParams, SigmaSet, chol_with_jitter, qr_cov_sqrt, sigma_points, ut_propagate

logger = logging.getLogger(__name__)


class ThetaMode(str, Enum):
    CONSTANT = "constant"
    FORGETTING = "forgetting"


class StateSpaceModel(Protocol):
    """What the engine needs from a model: Holt-style forecast and a batched measurement map."""

    @property
    def n_states(self) -> int: ...

    @property
    def n_measurements(self) -> int: ...

    def forecast(self, points: np.ndarray, holt: HoltState) -> np.ndarray: ...

    def advance(self, mean: np.ndarray, holt: HoltState) -> HoltState: ...

    def measure(self, points: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class FilterConfig:
    """Complete description of one filter variant."""
    ut: UtParams = field(default_factory=UtParams)
    criterion: CriterionConfig = field(default_factory=CriterionConfig)
    adapt_noise: bool = True
    theta_mode: ThetaMode = ThetaMode.FORGETTING
    theta: float = 0.5                   # constant θ, or forgetting factor s
    fixed_point_tol: float = 1e-6
    fixed_point_max_iters: int = 100
    fallback_on_divergence: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'theta_mode', ThetaMode(self.theta_mode))
        if not self.fixed_point_tol > 0:
            raise ValueError("fixed_point_tol must be positive")
        if self.fixed_point_max_iters < 1:
            raise ValueError("fixed_point_max_iters must be at least 1")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta / forgetting factor must lie in (0, 1), got {self.theta}")

    @property
    def mode(self) -> CriterionMode:
        return self.criterion.mode

    @property
    def lambda_prefactor(self) -> LambdaPrefactor:
        return self.criterion.lambda_prefactor

    def theta_at(self, t: int) -> float:
        """Adaptation weight at 1-based step ``t``."""
        if self.theta_mode == ThetaMode.CONSTANT:
            return self.theta
        s = self.theta
        return (1.0 - s) / (1.0 - s ** (t + 1))


@dataclass
class StepDiagnostics:
    step: int
    iterations: int = 0
    fallback: bool = False
    jitter_events: int = 0
    relative_change: float = 0.0


@dataclass
class FilterState:
    """Posterior of one step plus the adaptive noise estimates and Holt internals."""
    mean: np.ndarray
    cov: np.ndarray
    q_hat: np.ndarray
    r_hat: np.ndarray
    holt: HoltState
    step_index: int = 0
    cov_sqrt: Optional[np.ndarray] = None
    diagnostics: Optional[StepDiagnostics] = None

    @classmethod
    def initial(cls, model: StateSpaceModel, mean: np.ndarray, p0: float, q0: float, r0: float,
                holt: Optional[HoltState] = None) -> "FilterState":
        """Isotropic start: P = p0·I, Q̂ = q0·I, R̂ = r0·I."""
        n, m = model.n_states, model.n_measurements
        mean = np.asarray(mean, dtype=float)
        if mean.shape != (n,):
            raise DimensionError(f"initial estimate has shape {mean.shape}, expected ({n},)")
        if holt is None:
            holt = HoltState.initial(mean)
        return cls(mean=mean.copy(), cov=p0 * np.eye(n), q_hat=q0 * np.eye(n),
                   r_hat=r0 * np.eye(m), holt=holt)


@dataclass
class Prior:
    """Time-update output."""
    mean: np.ndarray
    cov: np.ndarray
    sigma: SigmaSet
    holt: HoltState


@dataclass
class MeasurementStats:
    v_hat: np.ndarray
    p_uv: np.ndarray
    p_vv: np.ndarray


@dataclass
class AremSystem:
    """
    Whitened stacked regression of the prior and the measurement.

    ``L`` and ``D`` are the stacked targets and design, ``b_p``/``b_r`` the
    lower factors of the prior covariance and of R̂, and ``slope`` the
    statistical linearization of the measurement map around the prior.
    """
    L: np.ndarray
    D: np.ndarray
    b_p: np.ndarray
    b_r: np.ndarray
    slope: np.ndarray
    prior_mean: np.ndarray
    v_hat: np.ndarray
    innovation: np.ndarray

    @property
    def n(self) -> int:
        return self.b_p.shape[0]

    @property
    def m(self) -> int:
        return self.b_r.shape[0]

    @property
    def B(self) -> np.ndarray:
        return linalg.block_diag(self.b_p, self.b_r)

    def residual(self, u: np.ndarray) -> np.ndarray:
        return self.L - self.D @ u


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _factor(M: np.ndarray, label: str, diag: Optional[StepDiagnostics]) -> np.ndarray:
    """Lower factor with the jitter retry; zero matrices factor to zero."""
    if not np.any(M):
        return np.zeros_like(M)
    factor, jittered = chol_with_jitter(M, label)
    if jittered and diag is not None:
        diag.jitter_events += 1
    return factor


def time_update(state: FilterState, model: StateSpaceModel, cfg: FilterConfig,
                diag: Optional[StepDiagnostics] = None) -> Prior:
    """
    Propagate the posterior through the Holt forecast and add Q̂.

    Raises:
        DecompositionError: covariance not factorizable even after jitter
    """
    sqrt = state.cov_sqrt
    if sqrt is None or np.any(np.diag(sqrt) <= 0):
        sqrt = _factor(state.cov, "posterior covariance", diag)
    sigma = sigma_points(state.mean, state.cov, cfg.ut, sqrt_cov=sqrt)
    mean, cov, _ = ut_propagate(sigma, lambda pts: model.forecast(pts, state.holt), state.q_hat)
    holt = model.advance(state.mean, state.holt)
    return Prior(mean=mean, cov=_symmetrize(cov), sigma=sigma, holt=holt)


def measurement_stats(prior: Prior, model: StateSpaceModel, cfg: FilterConfig, r_hat: np.ndarray,
                      diag: Optional[StepDiagnostics] = None) -> MeasurementStats:
    """Second unscented pass around the prior; P_vv includes R̂."""
    sqrt = _factor(prior.cov, "prior covariance", diag)
    sigma = sigma_points(prior.mean, prior.cov, cfg.ut, sqrt_cov=sqrt)
    v_hat, p_vv, p_uv = ut_propagate(sigma, model.measure, r_hat)
    return MeasurementStats(v_hat=v_hat, p_uv=p_uv, p_vv=_symmetrize(p_vv))


def build_arem(prior: Prior, stats: MeasurementStats, v_t: np.ndarray, r_hat: np.ndarray,
               diag: Optional[StepDiagnostics] = None) -> AremSystem:
    """
    Assemble the whitened regression.

    Args:
        prior: Time-update output
        stats: Measurement statistics around the prior
        v_t: Measurement vector
        r_hat: Current measurement noise estimate
        diag: Optional diagnostics accumulator (jitter events)

    Returns:
        AremSystem
    """
    n, m = prior.mean.shape[0], stats.v_hat.shape[0]
    v_t = np.asarray(v_t, dtype=float)
    if v_t.shape != (m,):
        raise DimensionError(f"measurement has shape {v_t.shape}, expected ({m},)")

    slope = linalg.solve(prior.cov, stats.p_uv, assume_a='sym').T
    b_p = _factor(prior.cov, "prior covariance", diag)
    b_r = _factor(r_hat, "measurement noise estimate", diag)

    innovation = v_t - stats.v_hat
    L = np.concatenate([
        linalg.solve_triangular(b_p, prior.mean, lower=True),
        linalg.solve_triangular(b_r, innovation + slope @ prior.mean, lower=True),
    ])
    D = np.vstack([
        linalg.solve_triangular(b_p, np.eye(n), lower=True),
        linalg.solve_triangular(b_r, slope, lower=True),
    ])
    return AremSystem(L=L, D=D, b_p=b_p, b_r=b_r, slope=slope, prior_mean=prior.mean,
                      v_hat=stats.v_hat, innovation=innovation)


def _sandwich(left: np.ndarray, block: np.ndarray, right: np.ndarray) -> np.ndarray:
    """left⁻ᵀ · block · right⁻¹ with triangular solves."""
    w = linalg.solve_triangular(left, block, lower=True, trans='T')
    return linalg.solve_triangular(right, w.T, lower=True, trans='T').T


def gain_from_omega(omega: np.ndarray, arem: AremSystem) -> np.ndarray:
    """Robust gain for a given weight matrix Ω (invariant to positive scaling of Ω)."""
    n = arem.n
    om_uu, om_vu, om_uv, om_vv = omega[:n, :n], omega[:n, n:], omega[n:, :n], omega[n:, n:]
    U = arem.slope
    p_uu = _sandwich(arem.b_p, om_uu, arem.b_p)
    p_uv = _sandwich(arem.b_r, om_uv, arem.b_p)
    p_vu = _sandwich(arem.b_p, om_vu, arem.b_r)
    r_vv = _sandwich(arem.b_r, om_vv, arem.b_r)
    lhs = p_uu + U.T @ p_uv + p_vu @ U + U.T @ r_vv @ U
    rhs = p_vu + U.T @ r_vv
    return linalg.solve(lhs, rhs)


def fixed_point_update(arem: AremSystem, cfg: FilterConfig) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Iterate the robust measurement update until the relative change of the
    estimate drops to ``cfg.fixed_point_tol``.

    Returns:
        (posterior mean, final gain, iterations used)

    Raises:
        FixedPointDivergence: tolerance not met within ``fixed_point_max_iters``
            or the weighted system became singular
    """
    u_prev = arem.prior_mean
    change = np.inf
    for k in range(1, cfg.fixed_point_max_iters + 1):
        w = weight_matrices(arem.residual(u_prev), cfg.criterion)
        try:
            gain = gain_from_omega(w.omega, arem)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise FixedPointDivergence(f"weighted system singular at iteration {k}: {e}",
                                       last_iterate=u_prev, relative_change=change, iterations=k) from e
        u_next = arem.prior_mean + gain @ arem.innovation
        if not np.all(np.isfinite(u_next)):
            raise FixedPointDivergence(f"non-finite iterate at iteration {k}",
                                       last_iterate=u_prev, relative_change=np.inf, iterations=k)
        base = np.linalg.norm(u_prev)
        delta = np.linalg.norm(u_next - u_prev)
        change = delta / base if base > 0 else delta
        if change <= cfg.fixed_point_tol:
            return u_next, gain, k
        u_prev = u_next
    raise FixedPointDivergence(
        f"no convergence after {cfg.fixed_point_max_iters} iterations (relative change {change:.3e})",
        last_iterate=u_prev, relative_change=change, iterations=cfg.fixed_point_max_iters)


def gaussian_gain(stats: MeasurementStats) -> np.ndarray:
    """Standard Kalman gain P_uv · P_vv⁻¹."""
    return linalg.solve(stats.p_vv, stats.p_uv.T, assume_a='sym').T


def covariance_update_sqrt(prior: Prior, gain: np.ndarray, slope: np.ndarray, r_hat: np.ndarray,
                           b_p: Optional[np.ndarray] = None,
                           b_r: Optional[np.ndarray] = None) -> np.ndarray:
    """Upper-triangular A with AᵀA equal to the Joseph-form posterior covariance."""
    n = prior.mean.shape[0]
    if b_p is None:
        b_p = _factor(prior.cov, "prior covariance", None)
    if b_r is None:
        b_r = _factor(r_hat, "measurement noise estimate", None)
    S = np.hstack([(np.eye(n) - gain @ slope) @ b_p, gain @ b_r])
    return qr_cov_sqrt(S)


def covariance_update(prior: Prior, gain: np.ndarray, slope: np.ndarray, r_hat: np.ndarray,
                      b_p: Optional[np.ndarray] = None, b_r: Optional[np.ndarray] = None) -> np.ndarray:
    """Posterior covariance through the QR square root."""
    A = covariance_update_sqrt(prior, gain, slope, r_hat, b_p, b_r)
    return _symmetrize(A.T @ A)


def sage_husa_raw(q_prev: np.ndarray, r_prev: np.ndarray, innovation: np.ndarray, gain: np.ndarray,
                  p_post: np.ndarray, p_prior: np.ndarray, p_vv: np.ndarray,
                  theta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Exponentially weighted noise recursions before the diagonal revision."""
    correction = gain @ innovation
    q = (1.0 - theta) * q_prev + theta * (np.outer(correction, correction) + p_post - p_prior + q_prev)
    r = (1.0 - theta) * r_prev + theta * (np.outer(innovation, innovation) - p_vv + r_prev)
    return q, r


def revise_diagonal(M: np.ndarray) -> np.ndarray:
    """Diagonal matrix of the row norms of M."""
    return np.diag(np.sqrt(np.einsum('ij,ij->i', M, M)))


def adapt_noise(state: FilterState, innovation: np.ndarray, gain: np.ndarray, p_post: np.ndarray,
                p_prior: np.ndarray, p_vv: np.ndarray, cfg: FilterConfig,
                t: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sage-Husa update of the noise estimates.

    Args:
        state: State holding Q̂ of the previous step and R̂ of this step
        innovation: v_t - v̂
        gain: Gain used for this step
        p_post: Posterior covariance of this step
        p_prior: Prior covariance of this step
        p_vv: Innovation covariance (includes R̂)
        cfg: Filter configuration (θ rule)
        t: 1-based step index (defaults to state.step_index + 1)

    Returns:
        (Q̂ for this step, R̂ for the next step), both diagonal and nonnegative
    """
    t = state.step_index + 1 if t is None else t
    q, r = sage_husa_raw(state.q_hat, state.r_hat, innovation, gain, p_post, p_prior, p_vv,
                         cfg.theta_at(t))
    return revise_diagonal(q), revise_diagonal(r)


def step(state: FilterState, v_t: np.ndarray, model: StateSpaceModel, cfg: FilterConfig) -> FilterState:
    """
    One full filter cycle.

    Returns:
        The next FilterState; its ``diagnostics`` describe this step

    Raises:
        FilterStepError: unrecoverable numerical failure, or divergence with
            fallback disabled
    """
    t = state.step_index + 1
    diag = StepDiagnostics(step=t)
    try:
        prior = time_update(state, model, cfg, diag)
        stats = measurement_stats(prior, model, cfg, state.r_hat, diag)
        arem = build_arem(prior, stats, v_t, state.r_hat, diag)

        if cfg.criterion.uses_fixed_point:
            try:
                mean, gain, diag.iterations = fixed_point_update(arem, cfg)
            except FixedPointDivergence as e:
                if not cfg.fallback_on_divergence:
                    raise FilterStepError(str(e), t) from e
                logger.warning("step %d: %s; using the standard gain", t, e)
                diag.fallback = True
                diag.iterations = e.iterations
                gain = gaussian_gain(stats)
                mean = prior.mean + gain @ arem.innovation
        else:
            gain = gaussian_gain(stats)
            mean = prior.mean + gain @ arem.innovation

        A = covariance_update_sqrt(prior, gain, arem.slope, state.r_hat, arem.b_p, arem.b_r)
        cov = _symmetrize(A.T @ A)

        if cfg.adapt_noise:
            q_hat, r_hat = adapt_noise(state, arem.innovation, gain, cov, prior.cov, stats.p_vv, cfg, t)
        else:
            q_hat, r_hat = state.q_hat, state.r_hat
    except (DecompositionError, np.linalg.LinAlgError) as e:
        raise FilterStepError(str(e), t) from e

    logger.debug("step %d: iterations=%d fallback=%s jitter=%d",
                 t, diag.iterations, diag.fallback, diag.jitter_events)
    return FilterState(mean=mean, cov=cov, q_hat=q_hat, r_hat=r_hat, holt=prior.holt,
                       step_index=t, cov_sqrt=A.T.copy(), diagnostics=diag)


@dataclass
class EstimationResult:
    """Trajectory of posterior means with per-step timing and diagnostics."""
    estimates: np.ndarray
    step_times: np.ndarray
    diagnostics: List[StepDiagnostics] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def completed_steps(self) -> int:
        return self.estimates.shape[0]

    @property
    def fallback_count(self) -> int:
        return sum(d.fallback for d in self.diagnostics)

    @property
    def jitter_count(self) -> int:
        return sum(d.jitter_events for d in self.diagnostics)

    def iteration_histogram(self) -> Dict[int, int]:
        return dict(Counter(d.iterations for d in self.diagnostics))


ConfigSchedule = Sequence[Tuple[int, FilterConfig]]


def _config_for_step(cfg: FilterConfig, schedule: Optional[ConfigSchedule], t: int) -> FilterConfig:
    if not schedule:
        return cfg
    active = cfg
    for start, scheduled in schedule:
        if start <= t:
            active = scheduled
    return active


def run_filter(model: StateSpaceModel, measurements: np.ndarray, cfg: FilterConfig,
               initial: FilterState, schedule: Optional[ConfigSchedule] = None) -> EstimationResult:
    """
    Filter a whole measurement sequence.

    A step failure ends the run early; the result then holds the completed
    steps and the error message.

    Args:
        model: State-space model
        measurements: (T, m) measurement array
        cfg: Filter configuration
        initial: Starting state
        schedule: Optional (start step, config) pairs that replace ``cfg``
            from their start step on

    Returns:
        EstimationResult
    """
    measurements = np.atleast_2d(np.asarray(measurements, dtype=float))
    T = measurements.shape[0]
    estimates = np.empty((T, model.n_states))
    times = np.empty(T)
    diagnostics: List[StepDiagnostics] = []

    state = initial
    for k in range(T):
        active = _config_for_step(cfg, schedule, k + 1)
        start = time.perf_counter()
        try:
            state = step(state, measurements[k], model, active)
        except FilterStepError as e:
            logger.warning("filter stopped: %s", e)
            return EstimationResult(estimates=estimates[:k].copy(), step_times=times[:k].copy(),
                                    diagnostics=diagnostics, error=str(e))
        times[k] = time.perf_counter() - start
        estimates[k] = state.mean
        diagnostics.append(state.diagnostics)

    return EstimationResult(estimates=estimates, step_times=times, diagnostics=diagnostics)
