# tests/test_basic.py
"""Basic tests to verify core functionality."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

CASE_PATH = Path(__file__).parent.parent / "data" / "cases" / "ieee14cdf.txt"


def test_estimators_import():
    """Test that all filter variants can be imported."""
    from estimators import (
        UKFEstimator,
        AUKFEstimator,
        MCCUKFEstimator,
        MEEUKFEstimator,
        MEEFUKFEstimator,
        GMMEEFAUKFEstimator,
    )

    # Check names
    assert UKFEstimator().short_name == "UKF"
    assert AUKFEstimator().short_name == "AUKF"
    assert MCCUKFEstimator().short_name == "MCC-UKF"
    assert MEEUKFEstimator().short_name == "MEE-UKF"
    assert MEEFUKFEstimator().short_name == "MEEF-UKF"
    assert GMMEEFAUKFEstimator().short_name == "GMMEEF-AUKF"
    assert all(cls().description for cls in (UKFEstimator, AUKFEstimator, MCCUKFEstimator,
                                             MEEUKFEstimator, MEEFUKFEstimator, GMMEEFAUKFEstimator))

    print("✅ All estimators imported successfully")


def test_estimator_defaults_are_valid():
    """Every registered variant builds a consistent FilterConfig from its defaults."""
    from core.criteria import CriterionMode
    from estimators import DEFAULT_ROSTER, create_estimator

    for kind in DEFAULT_ROSTER:
        est = create_estimator(kind)
        assert est.validate_params() == [], kind
        cfg = est.build_config()
        assert cfg.mode == est.mode
        assert cfg.adapt_noise == est.adapt_noise

    assert create_estimator('ukf').mode == CriterionMode.GAUSSIAN
    assert create_estimator('gmmeef_aukf').adapt_noise
    assert not create_estimator('mcc_ukf').adapt_noise

    print("✅ Estimator defaults are valid")


def test_estimator_params():
    """Unknown kinds and parameters are rejected; with_params copies."""
    from estimators import create_estimator

    with pytest.raises(KeyError):
        create_estimator('kalman')
    with pytest.raises(KeyError):
        create_estimator('ukf', {'no_such_param': 1.0})

    base = create_estimator('gmmeef_aukf')
    tuned = base.with_params({'theta': 0.3})
    assert tuned.get_param('theta') == 0.3
    assert base.get_param('theta') == 0.5

    # MCC needs kappa = 1
    broken = create_estimator('mcc_ukf', {'kappa': 0.5})
    assert broken.validate_params()

    print("✅ Estimator parameters handled correctly")


def test_case_loads():
    """Test the bundled 14-bus case parses."""
    from core.case_loader import CaseLoader

    net = CaseLoader(cache_enabled=False).load(CASE_PATH)
    assert net.summary() == "14 buses, 20 branches"
    assert net.state_dim == 27

    print("✅ 14-bus case loaded")


def test_single_filter_run():
    """One short noisy run of the proposed filter produces finite estimates."""
    from core.case_loader import CaseLoader
    from core.harness import InitializationSpec, initial_filter_state, simulate_experiment
    from core.noisegen import scenario_preset
    from core.psmodel import PowerSystemModel
    from estimators import create_estimator

    model = PowerSystemModel(CaseLoader(cache_enabled=False).load(CASE_PATH))
    init = InitializationSpec()
    exp = simulate_experiment(model, scenario_preset('scenario1'), horizon=3, base_seed=7, index=0,
                              initialization=init)
    initial = initial_filter_state(model, exp.initial_estimate, init)
    result = create_estimator('gmmeef_aukf').run(model, exp.measurements, initial)

    assert result.completed_steps <= 3
    assert np.all(np.isfinite(result.estimates))

    print("✅ Filter run works correctly")
    print(f"   Completed steps: {result.completed_steps}")
    print(f"   Fallbacks: {result.fallback_count}")


def run_all_tests():
    """Run all tests."""
    print("\n" + "="*50)
    print("Running state estimation smoke tests")
    print("="*50 + "\n")

    test_estimators_import()
    test_estimator_defaults_are_valid()
    test_estimator_params()
    test_case_loads()
    test_single_filter_run()

    print("\n" + "="*50)
    print("✅ All tests passed!")
    print("="*50 + "\n")


if __name__ == "__main__":
    run_all_tests()
