# tests/test_noisegen.py
"""Tests for noise sources, random streams, bad data and scenario presets."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest


def test_streams_are_independent_and_reproducible():
    from core.noisegen import stream

    a = stream(1, 0, 'process').standard_normal(5)
    b = stream(1, 0, 'process').standard_normal(5)
    c = stream(1, 0, 'measurement').standard_normal(5)
    d = stream(1, 1, 'process').standard_normal(5)

    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)

    with pytest.raises(ValueError):
        stream(1, 0, 'bogus')


def test_mixture_moments():
    """Mixture mean and variance match their closed forms and a large sample."""
    from core.noisegen import SCENARIO2_MEASUREMENT, MixtureSpec

    spec = MixtureSpec(SCENARIO2_MEASUREMENT)
    assert spec.mean() == pytest.approx(0.0)
    # 0.4*(0.3+0.04) * 2 + 0.2*20
    assert spec.variance() == pytest.approx(4.272)

    draws = spec.sample(np.random.default_rng(0), 200_000)
    assert draws.mean() == pytest.approx(0.0, abs=0.03)
    assert draws.var() == pytest.approx(4.272, rel=0.05)

    print("✅ Mixture moments check out")


def test_mixture_validation():
    from core.errors import ConfigError
    from core.noisegen import MixtureSpec

    with pytest.raises(ConfigError):
        MixtureSpec([(0.5, 0.0, 1.0), (0.4, 0.0, 1.0)])
    with pytest.raises(ConfigError):
        MixtureSpec([(1.0, 0.0, -1.0)])
    with pytest.raises(ConfigError):
        MixtureSpec([])


def test_impulse_without_probability_is_base_draw():
    from core.noisegen import ImpulseSpec, MixtureSpec, sample_impulse, sample_mixture

    base = MixtureSpec.gaussian(0.01)
    spec = ImpulseSpec(base=base, impulse_prob=0.0)
    a = sample_impulse(spec, np.random.default_rng(3), 50, impulse_rng=np.random.default_rng(4))
    b = sample_mixture(base, np.random.default_rng(3), 50)
    np.testing.assert_array_equal(a, b)


def test_impulses_only_touch_eligible_share():
    """With certain impulses and a 10% share, at most ceil(0.1 d) components change."""
    from core.noisegen import ImpulseSpec, MixtureSpec, sample_impulse, sample_mixture

    base = MixtureSpec.gaussian(1e-4)
    spec = ImpulseSpec(base=base, impulse_prob=1.0, impulse_scale=10.0, impulse_fraction=0.1)
    hit = sample_impulse(spec, np.random.default_rng(8), 82, impulse_rng=np.random.default_rng(9))
    plain = sample_mixture(base, np.random.default_rng(8), 82)

    changed = np.flatnonzero(hit != plain)
    assert 0 < changed.size <= 9
    assert spec.impulse_std == pytest.approx(0.1)


def test_bad_data_multiplies_power_only():
    from core.noisegen import BadDataEvent, BadDataSchedule, apply_bad_data

    v = np.array([1.0, 1.0, 2.0, -3.0])
    mask = np.array([False, False, True, True])
    schedule = BadDataSchedule([BadDataEvent(20, 1.15), BadDataEvent(40, 0.85)])

    out = apply_bad_data(v, 20, schedule, mask)
    np.testing.assert_allclose(out, [1.0, 1.0, 2.3, -3.45])
    np.testing.assert_allclose(v, [1.0, 1.0, 2.0, -3.0])
    assert apply_bad_data(v, 21, schedule, mask) is v
    assert apply_bad_data(v, 20, None, mask) is v


def test_bad_data_validation():
    from core.errors import ConfigError
    from core.noisegen import BadDataEvent, BadDataSchedule

    schedule = BadDataSchedule([BadDataEvent(40, 0.85)])
    schedule.validate(60)
    with pytest.raises(ConfigError):
        schedule.validate(30)
    with pytest.raises(ConfigError):
        BadDataSchedule([BadDataEvent(5, 1.1, measurement_class="voltage")])


def test_scenario_presets():
    from core.errors import ConfigError
    from core.noisegen import SCENARIO_NAMES, scenario_preset

    for name in SCENARIO_NAMES:
        scenario = scenario_preset(name)
        assert scenario.name == name

    free = scenario_preset('noise-free')
    assert free.process is None and free.measurement is None

    s4 = scenario_preset('scenario4')
    assert s4.bad_data is not None
    assert [ev.time_index for ev in s4.bad_data.events] == [20, 40]
    assert scenario_preset('scenario1').bad_data is None

    custom = scenario_preset('scenario4', bad_data=[(3, 2.0)])
    assert custom.bad_data.multipliers_at(3) == [2.0]

    with pytest.raises(ConfigError):
        scenario_preset('scenario9')

    print("✅ Scenario presets build")
