# tests/test_tuning.py
"""Tests for coefficient tuning: search vectors, bounds, fitness and overlays."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

CASE_PATH = Path(__file__).parent.parent / "data" / "cases" / "ieee14cdf.txt"


def _model():
    from core.casefile import parse_cdf
    from core.psmodel import PowerSystemModel
    return PowerSystemModel(parse_cdf(CASE_PATH.read_text(encoding='utf-8')))


def test_vector_round_trip():
    from core.tuning import PARAM_KEYS, TuningVector

    v = TuningVector(alpha=0.2, theta=0.4)
    assert TuningVector.from_array(v.to_array()) == v
    params = v.to_params()
    assert list(params) == list(PARAM_KEYS)
    assert params['ut_alpha'] == 0.2
    assert TuningVector.from_params(params) == v
    assert set(v.to_params('aukf')) == {'ut_alpha', 'ut_beta', 'theta'}

    with pytest.raises(ValueError):
        TuningVector.from_array([1.0, 2.0])


def test_search_bounds():
    from core.tuning import SearchBounds, TuningVector

    default = SearchBounds()
    assert default.contains(TuningVector())

    narrowed = SearchBounds.from_mapping({'theta': (0.2, 0.3)})
    assert not narrowed.contains(TuningVector(theta=0.5))
    assert narrowed.contains(TuningVector(theta=0.25))

    pinned = SearchBounds.pinned(TuningVector())
    np.testing.assert_array_equal(pinned.lower, pinned.upper)

    with pytest.raises(KeyError):
        SearchBounds.from_mapping({'gamma': (0.0, 1.0)})
    with pytest.raises(ValueError):
        SearchBounds.from_mapping({'theta': (0.9, 0.1)})


def test_fitness_is_repeatable():
    """The same vector scores the same on the cached trajectories."""
    from core.harness import InitializationSpec
    from core.noisegen import scenario_preset
    from core.tuning import FilterFitness, FitnessBudget, TuningVector
    from estimators import create_estimator

    fitness = FilterFitness(_model(), scenario_preset('scenario1'), create_estimator('aukf'),
                            FitnessBudget(runs=1, horizon=2), base_seed=4,
                            initialization=InitializationSpec(), target='aukf')
    first = fitness.evaluate(TuningVector())
    assert first == fitness.evaluate(TuningVector())
    assert first > 0


def test_pinned_tuning_returns_pinned_vector():
    """With a degenerate box the optimizer can only return the pinned coefficients."""
    from core.harness import InitializationSpec
    from core.isga import OptimizerConfig, Variant
    from core.noisegen import scenario_preset
    from core.tuning import FitnessBudget, SearchBounds, TuningVector, schedule_configs, tune_filter
    from estimators import create_estimator

    vector = TuningVector(alpha=0.5, beta=2.0, theta=0.4)
    bounds = SearchBounds.pinned(vector)
    opt_cfg = OptimizerConfig(lower=bounds.lower, upper=bounds.upper, population=5, max_iters=2,
                              variant=Variant.ISGA, seed=0)
    estimator = create_estimator('aukf')
    result = tune_filter(_model(), scenario_preset('scenario1'), estimator, opt_cfg,
                         budget=FitnessBudget(runs=1, horizon=2), base_seed=1,
                         initialization=InitializationSpec(), target='aukf', retune_every=1)

    assert result.vector == vector
    assert result.curve.shape == (2,)
    assert result.fitness > 0

    overlay = result.to_overlay()
    assert overlay['target'] == 'aukf'
    assert overlay['params'] == {'ut_alpha': 0.5, 'ut_beta': 2.0, 'theta': 0.4}
    assert [entry['start_step'] for entry in overlay['schedule']] == [1, 2]

    configs = schedule_configs(estimator, result.schedule, target='aukf')
    assert [start for start, _ in configs] == [1, 2]
    assert configs[0][1].ut.alpha == 0.5
    assert configs[0][1].theta == 0.4

    print("✅ Pinned tuning returns the pinned vector")


def test_tuning_rejects_wrong_box():
    from core.isga import OptimizerConfig
    from core.noisegen import scenario_preset
    from core.tuning import tune_filter
    from estimators import create_estimator

    with pytest.raises(ValueError):
        tune_filter(_model(), scenario_preset('noise-free'), create_estimator('aukf'),
                    OptimizerConfig(lower=np.zeros(3), upper=np.ones(3), population=5, max_iters=1))
