# tests/test_acceptance.py
"""Full-length runs on the 14-bus case. Deselected by default; run with ``pytest -m slow``."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import math

import numpy as np
import pytest

CASE_PATH = Path(__file__).parent.parent / "data" / "cases" / "ieee14cdf.txt"

pytestmark = pytest.mark.slow


def _model():
    from core.casefile import parse_cdf
    from core.psmodel import PowerSystemModel
    return PowerSystemModel(parse_cdf(CASE_PATH.read_text(encoding='utf-8')))


@pytest.mark.parametrize("scenario", ["scenario1", "scenario2", "scenario3", "scenario4"])
def test_full_roster_runs_every_scenario(scenario):
    from core.harness import ExperimentSpec, InitializationSpec, run_experiment
    from core.noisegen import scenario_preset
    from estimators import DEFAULT_ROSTER, create_estimator

    spec = ExperimentSpec(
        model=_model(),
        scenario=scenario_preset(scenario),
        estimators={create_estimator(k).short_name: create_estimator(k) for k in DEFAULT_ROSTER},
        runs=10, horizon=60, base_seed=0,
        initialization=InitializationSpec(),
        jobs=4,
    )
    report = run_experiment(spec)

    assert len(report.filters) == 6
    for summary in report.filters.values():
        assert math.isfinite(summary.metrics.armse_v), summary.name
        assert math.isfinite(summary.metrics.armse_phi), summary.name
        assert summary.metrics.armse_v > 0

    print(report.summary_frame().to_string(index=False))


def test_isga_reduces_sphere():
    from core.benchmarks import benchmark
    from core.isga import OptimizerConfig, Variant, run

    f = benchmark(1, 30)
    lower, upper = f.bounds(30)
    for variant in Variant:
        result = run(f, OptimizerConfig(lower=lower, upper=upper, population=30, max_iters=500,
                                        variant=variant, seed=0))
        assert result.curve[-1] < result.curve[0], variant
        assert np.all(np.diff(result.curve) <= 0)
