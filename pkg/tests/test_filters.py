# tests/test_filters.py
"""Tests for the filter engine on a small linear model and on the 14-bus case."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

CASE_PATH = Path(__file__).parent.parent / "data" / "cases" / "ieee14cdf.txt"


class LinearModel:
    """x_t = F x_{t-1} + w, y_t = H x_t + v; Holt internals are carried but unused."""

    def __init__(self, F, H):
        self.F = np.asarray(F, dtype=float)
        self.H = np.asarray(H, dtype=float)

    @property
    def n_states(self):
        return self.F.shape[0]

    @property
    def n_measurements(self):
        return self.H.shape[0]

    def forecast(self, points, holt):
        return points @ self.F.T

    def advance(self, mean, holt):
        return holt

    def measure(self, points):
        return points @ self.H.T


def _linear_setup(T=8, seed=0):
    rng = np.random.default_rng(seed)
    F = np.array([[1.0, 0.1, 0.0], [0.0, 0.95, 0.05], [0.0, 0.0, 0.9]])
    H = rng.standard_normal((5, 3))
    model = LinearModel(F, H)
    x = np.array([1.0, -0.5, 0.2])
    ys = []
    for _ in range(T):
        x = F @ x + 0.01 * rng.standard_normal(3)
        ys.append(H @ x + 0.1 * rng.standard_normal(5))
    return model, np.array(ys)


def _gaussian_cfg(adapt=False):
    from core.criteria import CriterionConfig, CriterionMode
    from core.filters import FilterConfig
    from core.unscented import UtParams

    return FilterConfig(ut=UtParams(alpha=1.0), criterion=CriterionConfig(mode=CriterionMode.GAUSSIAN),
                        adapt_noise=adapt)


def _spd(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


def test_theta_schedule():
    from core.filters import FilterConfig, ThetaMode

    cfg = FilterConfig(theta=0.5)
    assert cfg.theta_at(1) == pytest.approx(2.0 / 3.0)
    assert cfg.theta_at(50) == pytest.approx(0.5, abs=1e-9)
    assert FilterConfig(theta_mode=ThetaMode.CONSTANT, theta=0.3).theta_at(7) == 0.3

    with pytest.raises(ValueError):
        FilterConfig(theta=1.0)
    with pytest.raises(ValueError):
        FilterConfig(fixed_point_max_iters=0)


def test_initial_state_shape_checked():
    from core.errors import DimensionError
    from core.filters import FilterState

    model, _ = _linear_setup()
    state = FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2)
    assert state.cov.shape == (3, 3)
    assert state.r_hat.shape == (5, 5)
    with pytest.raises(DimensionError):
        FilterState.initial(model, np.zeros(4), 1.0, 1e-4, 1e-2)


def test_gaussian_filter_matches_kalman():
    """On a linear model the unscented filter reproduces the Kalman filter."""
    from core.filters import FilterState, run_filter

    model, ys = _linear_setup()
    Q, R = 1e-4 * np.eye(3), 1e-2 * np.eye(5)
    result = run_filter(model, ys, _gaussian_cfg(), FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2))

    x, P = np.zeros(3), np.eye(3)
    for k, y in enumerate(ys):
        x = model.F @ x
        P = model.F @ P @ model.F.T + Q
        S = model.H @ P @ model.H.T + R
        K = P @ model.H.T @ np.linalg.inv(S)
        x = x + K @ (y - model.H @ x)
        P = (np.eye(3) - K @ model.H) @ P
        np.testing.assert_allclose(result.estimates[k], x, rtol=1e-8, atol=1e-10)

    assert result.error is None
    assert result.completed_steps == len(ys)

    print("✅ Gaussian update equals the Kalman filter")


def test_wide_kernel_reduces_to_gaussian():
    """Pure correntropy with a very wide Gaussian kernel gives the standard update."""
    from core.criteria import CriterionConfig, CriterionMode, KernelParams
    from core.filters import FilterConfig, FilterState, run_filter
    from core.unscented import UtParams

    model, ys = _linear_setup()
    wide = KernelParams(2.0, 1e12)
    robust = FilterConfig(ut=UtParams(alpha=1.0),
                          criterion=CriterionConfig(kappa=1.0, phi=1.0, fiducial_kernel_1=wide,
                                                    fiducial_kernel_2=wide, mode=CriterionMode.MCC),
                          adapt_noise=False)

    def start():
        return FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2)

    base = run_filter(model, ys, _gaussian_cfg(), start())
    mcc = run_filter(model, ys, robust, start())

    assert mcc.error is None
    assert mcc.fallback_count == 0
    np.testing.assert_allclose(mcc.estimates, base.estimates, rtol=1e-6, atol=1e-8)

    print("✅ Wide-kernel criterion reduces to the Gaussian update")


def test_update_components_on_linear_model():
    """One step taken piece by piece: exact moments, slope H, and the fixed point at the Kalman update."""
    from core.criteria import CriterionConfig, CriterionMode, KernelParams
    from core.filters import (
        FilterConfig,
        FilterState,
        build_arem,
        fixed_point_update,
        gaussian_gain,
        measurement_stats,
        time_update,
    )
    from core.unscented import UtParams

    model, ys = _linear_setup()
    state = FilterState.initial(model, np.array([0.2, 0.1, -0.1]), 1.0, 1e-4, 1e-2)
    cfg = _gaussian_cfg()

    prior = time_update(state, model, cfg)
    np.testing.assert_allclose(prior.mean, model.F @ state.mean, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(prior.cov, model.F @ model.F.T + 1e-4 * np.eye(3), rtol=1e-10, atol=1e-12)

    stats = measurement_stats(prior, model, cfg, state.r_hat)
    np.testing.assert_allclose(stats.v_hat, model.H @ prior.mean, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(stats.p_vv, model.H @ prior.cov @ model.H.T + state.r_hat, rtol=1e-9)

    arem = build_arem(prior, stats, ys[0], state.r_hat)
    np.testing.assert_allclose(arem.slope, model.H, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(arem.residual(prior.mean)[:3], 0.0, atol=1e-12)

    wide = KernelParams(2.0, 1e12)
    robust = FilterConfig(ut=UtParams(alpha=1.0),
                          criterion=CriterionConfig(kappa=1.0, phi=1.0, fiducial_kernel_1=wide,
                                                    fiducial_kernel_2=wide, mode=CriterionMode.MCC),
                          adapt_noise=False)
    u, gain, iterations = fixed_point_update(arem, robust)
    expected = prior.mean + gaussian_gain(stats) @ arem.innovation
    np.testing.assert_allclose(u, expected, rtol=1e-6, atol=1e-8)
    assert gain.shape == (3, 5)
    assert iterations >= 1


def _random_arem(seed, n=3, m=5):
    """Whitened regression built straight from random P, R, slope, prior mean and innovation."""
    from scipy import linalg

    from core.filters import AremSystem

    rng = np.random.default_rng(seed)
    P, R = _spd(n, seed), _spd(m, seed + 100)
    U = rng.standard_normal((m, n))
    mean = rng.standard_normal(n)
    innovation = rng.standard_normal(m)
    b_p, b_r = np.linalg.cholesky(P), np.linalg.cholesky(R)
    L = np.concatenate([linalg.solve_triangular(b_p, mean, lower=True),
                        linalg.solve_triangular(b_r, innovation + U @ mean, lower=True)])
    D = np.vstack([linalg.solve_triangular(b_p, np.eye(n), lower=True),
                   linalg.solve_triangular(b_r, U, lower=True)])
    return AremSystem(L=L, D=D, b_p=b_p, b_r=b_r, slope=U, prior_mean=mean, v_hat=np.zeros(m),
                      innovation=innovation)


def _reference_fixed_point(arem, omega_of, iterations=2000):
    """Weighted least squares on the stacked regression, reweighted until it stops moving."""
    u = arem.prior_mean.copy()
    for _ in range(iterations):
        omega = omega_of(arem.L - arem.D @ u)
        u_next = np.linalg.solve(arem.D.T @ omega @ arem.D, arem.D.T @ omega @ arem.L)
        if np.linalg.norm(u_next - u) <= 1e-14 * np.linalg.norm(u_next):
            return u_next
        u = u_next
    return u


def _pair_laplacian(e, bandwidth, scale=1.0):
    G = scale * np.exp(-(e[:, None] - e[None, :]) ** 2 / bandwidth)
    return np.diag(G.sum(axis=1)) - G


def test_gain_invariant_to_omega_scaling(monkeypatch):
    """Multiplying every weight by c > 0 changes neither the gain nor the posterior mean."""
    from dataclasses import replace

    from core import filters
    from core.criteria import CriterionConfig, weight_matrices
    from core.filters import FilterConfig, fixed_point_update, gain_from_omega

    for seed in range(3):
        arem = _random_arem(seed)
        omega = weight_matrices(arem.residual(arem.prior_mean + 0.1), CriterionConfig()).omega
        base = gain_from_omega(omega, arem)
        for c in (2.0 ** -30, 3.7, 1e6):
            np.testing.assert_allclose(gain_from_omega(c * omega, arem), base, rtol=1e-10,
                                       atol=1e-10 * np.abs(base).max())

    cfg = FilterConfig(adapt_noise=False, fixed_point_tol=1e-12, fixed_point_max_iters=500)
    arem = _random_arem(7)
    u_base, _, _ = fixed_point_update(arem, cfg)
    for c in (1e-3, 250.0):
        def scaled(e, crit, c=c):
            w = weight_matrices(e, crit)
            return replace(w, omega=c * w.omega)

        monkeypatch.setattr(filters, 'weight_matrices', scaled)
        u_scaled, _, _ = fixed_point_update(arem, cfg)
        np.testing.assert_allclose(u_scaled, u_base, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("kind", ["MCC", "MEE", "MEEF"])
def test_classical_criteria_match_reference_updates(kind):
    """The fixed point of each classical mode equals reweighted least squares with its textbook weights."""
    from core.criteria import CriterionConfig, CriterionMode, KernelParams
    from core.filters import FilterConfig, fixed_point_update

    b1, b3, kappa = 4.0, 6.0, 0.6
    if kind == "MCC":
        k = KernelParams(2.0, b1)
        criterion = CriterionConfig(kappa=1.0, phi=1.0, fiducial_kernel_1=k, fiducial_kernel_2=k,
                                    mode=CriterionMode.MCC)

        def omega_of(e):
            return np.diag(np.exp(-e ** 2 / b1))
    elif kind == "MEE":
        criterion = CriterionConfig(kappa=0.0, entropy_kernel=KernelParams(2.0, b3), mode=CriterionMode.MEE)

        def omega_of(e):
            return _pair_laplacian(e, b3)
    else:
        criterion = CriterionConfig(kappa=kappa, phi=1.0, fiducial_kernel_1=KernelParams(2.0, b1),
                                    entropy_kernel=KernelParams(2.0, b3), mode=CriterionMode.MEEF)

        def omega_of(e):
            lam = 2.0 / b1 ** 2 * np.exp(-e ** 2 / b1) / (b1 * np.sqrt(np.pi))
            return kappa * np.diag(lam) + (1.0 - kappa) * _pair_laplacian(e, b3, 1.0 / (b3 * np.sqrt(np.pi)))

    cfg = FilterConfig(criterion=criterion, adapt_noise=False, fixed_point_tol=1e-12, fixed_point_max_iters=500)
    for seed in range(3):
        arem = _random_arem(seed + 20)
        u, gain, _ = fixed_point_update(arem, cfg)
        np.testing.assert_allclose(u, _reference_fixed_point(arem, omega_of), rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(u, arem.prior_mean + gain @ arem.innovation, rtol=1e-12, atol=1e-12)


def test_joseph_covariance():
    """The square-root update equals the Joseph form for any gain."""
    from core.filters import Prior, covariance_update

    rng = np.random.default_rng(4)
    for seed in range(3):
        P = _spd(4, seed)
        R = _spd(3, seed + 10)
        U = rng.standard_normal((3, 4))
        K = rng.standard_normal((4, 3))
        prior = Prior(np.zeros(4), P, None, None)
        cov = covariance_update(prior, K, U, R)
        I_KU = np.eye(4) - K @ U
        expected = I_KU @ P @ I_KU.T + K @ R @ K.T
        np.testing.assert_allclose(cov, expected, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(cov, cov.T)


def test_sage_husa_fixed_point():
    """Zero innovation with matching covariances leaves the noise estimates unchanged."""
    from core.filters import revise_diagonal, sage_husa_raw

    Q = np.diag([1e-4, 2e-4])
    R = np.diag([1e-2, 3e-2, 2e-2])
    P = _spd(2, 1)
    q, r = sage_husa_raw(Q, R, np.zeros(3), np.ones((2, 3)), P, P, np.zeros((3, 3)), theta=0.4)
    np.testing.assert_allclose(q, Q)
    np.testing.assert_allclose(r, R)

    np.testing.assert_allclose(revise_diagonal(np.diag([-2.0, 3.0])), np.diag([2.0, 3.0]))
    M = np.array([[3.0, 4.0], [0.0, -1.0]])
    np.testing.assert_allclose(revise_diagonal(M), np.diag([5.0, 1.0]))


def test_adaptive_noise_stays_diagonal():
    from core.filters import FilterState, step

    model, ys = _linear_setup(T=5, seed=2)
    cfg = _gaussian_cfg(adapt=True)
    state = FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2)
    for y in ys:
        state = step(state, y, model, cfg)
        for M in (state.q_hat, state.r_hat):
            assert np.allclose(M, np.diag(np.diag(M)))
            assert np.all(np.diag(M) >= 0)
    assert state.step_index == 5


def test_divergence_fallback():
    """A fixed point that cannot converge falls back to the standard gain."""
    from core.criteria import CriterionConfig
    from core.filters import FilterConfig, FilterState, run_filter
    from core.unscented import UtParams

    model, ys = _linear_setup(T=3)
    cfg = FilterConfig(ut=UtParams(alpha=1.0), criterion=CriterionConfig(),
                       adapt_noise=False, fixed_point_max_iters=1, fixed_point_tol=1e-15)
    result = run_filter(model, ys, cfg, FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2))

    assert result.error is None
    assert result.fallback_count == 3
    assert all(d.fallback for d in result.diagnostics)


def test_divergence_without_fallback_stops_run():
    from core.criteria import CriterionConfig
    from core.filters import FilterConfig, FilterState, run_filter
    from core.unscented import UtParams

    model, ys = _linear_setup(T=3)
    cfg = FilterConfig(ut=UtParams(alpha=1.0), criterion=CriterionConfig(), adapt_noise=False,
                       fixed_point_max_iters=1, fixed_point_tol=1e-15, fallback_on_divergence=False)
    result = run_filter(model, ys, cfg, FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2))

    assert result.error is not None
    assert result.completed_steps == 0
    assert result.estimates.shape == (0, 3)


def test_config_schedule_switches():
    """A schedule entry replaces the configuration from its start step on."""
    from core.filters import FilterState, run_filter

    model, ys = _linear_setup(T=4)
    start = FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2)
    plain = run_filter(model, ys, _gaussian_cfg(), start)
    switched = run_filter(model, ys, _gaussian_cfg(), start, schedule=[(3, _gaussian_cfg(adapt=True))])

    np.testing.assert_allclose(switched.estimates[:3], plain.estimates[:3])
    assert not np.allclose(switched.estimates[3], plain.estimates[3])


def test_measurement_shape_checked():
    from core.errors import DimensionError
    from core.filters import FilterState, run_filter

    model, ys = _linear_setup(T=2)
    with pytest.raises(DimensionError):
        run_filter(model, ys[:, :4], _gaussian_cfg(),
                   FilterState.initial(model, np.zeros(3), 1.0, 1e-4, 1e-2))


def test_noise_free_tracking_on_ieee14():
    """Started at the truth with exact readings, every variant stays near the truth."""
    from core.casefile import parse_cdf
    from core.filters import FilterState
    from core.psmodel import PowerSystemModel, simulate_truth
    from estimators import create_estimator

    model = PowerSystemModel(parse_cdf(CASE_PATH.read_text(encoding='utf-8')))
    u0 = model.initial_state()
    truth = simulate_truth(model.net, model.plan, u0, 3, None, None, seed=0)

    for kind in ('ukf', 'gmmeef_aukf'):
        initial = FilterState.initial(model, u0, 1e-6, 1e-8, 1e-4, holt=model.initial_holt(u0))
        result = create_estimator(kind).run(model, truth.measurements, initial)
        assert result.error is None, kind
        assert np.max(np.abs(result.estimates - truth.states)) < 1e-3, kind

    print("✅ Noise-free tracking stays on the truth")
