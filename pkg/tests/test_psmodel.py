# tests/test_psmodel.py
"""Tests for the state packing, Holt transition, measurement function and truth simulation."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

CASE_PATH = Path(__file__).parent.parent / "data" / "cases" / "ieee14cdf.txt"


def _network():
    from core.casefile import parse_cdf
    return parse_cdf(CASE_PATH.read_text(encoding='utf-8'))


def test_pack_unpack():
    """Packing drops the slack phase; unpacking restores it as zero."""
    from core.errors import DimensionError
    from core.psmodel import StateVector, pack_state, unpack_state

    vm = np.array([1.0, 1.01, 0.99])
    va = np.array([0.0, -0.1, -0.2])
    u = pack_state(vm, va, slack_index=0)
    assert u.shape == (5,)
    vm2, va2 = unpack_state(u, 0, 3)
    np.testing.assert_allclose(vm2, vm)
    np.testing.assert_allclose(va2, va)

    sv = StateVector.from_packed(u, 0, 3)
    np.testing.assert_allclose(sv.packed(0), u)
    assert sv.n_buses == 3

    with pytest.raises(DimensionError):
        unpack_state(np.zeros(4), 0, 3)


def test_holt_predict_example():
    """Holt step from u0 = 1 with a jump to 2 gives level 1.8, trend 0.4, forecast 2.2."""
    from core.psmodel import HoltState, holt_predict

    h = HoltState.initial(np.array([1.0]))
    predicted, h2 = holt_predict(np.array([2.0]), h)

    assert h2.level[0] == pytest.approx(1.8)
    assert h2.trend[0] == pytest.approx(0.4)
    assert predicted[0] == pytest.approx(2.2)
    assert h2.forecast[0] == pytest.approx(2.2)

    print("✅ Holt forecast matches hand computation")


def test_holt_fixed_point():
    """A constant state is a fixed point of the forecast."""
    from core.psmodel import HoltState, holt_predict

    u = np.array([1.0, 0.5, -0.2])
    h = HoltState.initial(u)
    for _ in range(5):
        predicted, h = holt_predict(u, h)
        np.testing.assert_allclose(predicted, u)


def test_holt_forecast_is_linear():
    """The forecast is linear in the latest state and the smoothing internals together."""
    from core.psmodel import HoltState, holt_predict

    rng = np.random.default_rng(11)

    def internals():
        v = rng.standard_normal((4, 3))
        return HoltState(level=v[0], prev_level=v[1], trend=v[2], forecast=v[3])

    def combine(a, h1, b, h2):
        return HoltState(level=a * h1.level + b * h2.level, prev_level=a * h1.prev_level + b * h2.prev_level,
                         trend=a * h1.trend + b * h2.trend, forecast=a * h1.forecast + b * h2.forecast)

    h1, h2 = internals(), internals()
    u1, u2 = rng.standard_normal(3), rng.standard_normal(3)
    a, b = 1.7, -0.4
    for _ in range(3):
        f1, n1 = holt_predict(u1, h1)
        f2, n2 = holt_predict(u2, h2)
        f, _ = holt_predict(a * u1 + b * u2, combine(a, h1, b, h2))
        np.testing.assert_allclose(f, a * f1 + b * f2, rtol=1e-12, atol=1e-12)
        h1, h2, u1, u2 = n1, n2, f1, f2

    # with the internals held, the forecast moves by level_coeff * (1 + trend_coeff) per unit of state
    h = internals()
    base, _ = holt_predict(np.zeros(3), h)
    shifted, _ = holt_predict(np.ones(3), h)
    np.testing.assert_allclose(shifted - base, h.level_coeff * (1.0 + h.trend_coeff), rtol=1e-12)


def test_descriptor_parsing():
    from core.errors import ConfigError
    from core.psmodel import MeasurementDescriptor, MeasurementKind

    d = MeasurementDescriptor.parse("Pflow 4-5")
    assert d.kind == MeasurementKind.P_FLOW
    assert (d.from_bus, d.to_bus) == (4, 5)
    assert str(d) == "Pflow 4-5"
    assert MeasurementDescriptor.parse("V 5").bus == 5

    for bad in ("V", "Xinj 3", "Pflow 4", "V five"):
        with pytest.raises(ConfigError):
            MeasurementDescriptor.parse(bad)


def test_default_plan():
    """Default plan: magnitudes, injections and from-end flows."""
    from core.psmodel import MeasurementPlan

    plan = MeasurementPlan.default(_network())
    assert plan.m == 82
    assert int(plan.power_mask().sum()) == 68
    assert plan.to_strings()[0] == "V 1"


def test_plan_rejects_bad_references():
    from core.errors import ConfigError
    from core.psmodel import MeasurementPlan

    net = _network()
    with pytest.raises(ConfigError):
        MeasurementPlan.build(net, ["V 99"], require_redundancy=False)
    with pytest.raises(ConfigError):
        MeasurementPlan.build(net, ["Pflow 1-14"], require_redundancy=False)
    with pytest.raises(ConfigError):
        MeasurementPlan.build(net, ["V 1", "V 2"])


def test_injection_equals_flow_sum():
    """Real injection at a bus equals the real flows leaving it on every incident branch."""
    from core.psmodel import MeasurementPlan, measure

    net = _network()
    descriptors = [f"Pinj {bus.id}" for bus in net.buses]
    for br in net.branches:
        descriptors += [f"Pflow {br.from_bus}-{br.to_bus}", f"Pflow {br.to_bus}-{br.from_bus}"]
    plan = MeasurementPlan.build(net, descriptors, require_redundancy=False)

    rng = np.random.default_rng(3)
    u = np.concatenate([1.0 + 0.05 * rng.standard_normal(net.n_buses),
                        0.1 * rng.standard_normal(net.n_buses - 1)])
    v = measure(net, u, plan)

    injections = v[:net.n_buses]
    flows = v[net.n_buses:]
    for i, bus in enumerate(net.buses):
        total = 0.0
        for k, br in enumerate(net.branches):
            if br.from_bus == bus.id:
                total += flows[2 * k]
            elif br.to_bus == bus.id:
                total += flows[2 * k + 1]
        assert injections[i] == pytest.approx(total, abs=1e-9)

    print("✅ Injections balance branch flows")


def test_measure_batch_matches_single():
    from core.psmodel import PowerSystemModel

    model = PowerSystemModel(_network())
    u0 = model.initial_state()
    batch = np.vstack([u0, u0 * 1.01])
    out = model.measure(batch)
    assert out.shape == (2, model.n_measurements)
    np.testing.assert_allclose(out[0], model.measure(u0))
    np.testing.assert_allclose(out[1], model.measure(u0 * 1.01))


def test_noise_free_truth_is_constant():
    """Without noise the Holt truth stays at the starting state."""
    from core.psmodel import PowerSystemModel, simulate_truth

    model = PowerSystemModel(_network())
    u0 = model.initial_state()
    truth = simulate_truth(model.net, model.plan, u0, 5, None, None, seed=0)

    assert truth.states.shape == (5, 27)
    assert truth.measurements.shape == (5, 82)
    np.testing.assert_allclose(truth.states, np.tile(u0, (5, 1)), atol=1e-12)
    np.testing.assert_allclose(truth.measurements[0], model.measure(u0), atol=1e-12)
    assert truth.floor_events == 0


def test_truth_is_reproducible():
    from core.noisegen import MixtureSpec
    from core.psmodel import PowerSystemModel, simulate_truth

    model = PowerSystemModel(_network())
    u0 = model.initial_state()
    q, r = MixtureSpec.gaussian(1e-5), MixtureSpec.gaussian(1e-2)
    a = simulate_truth(model.net, model.plan, u0, 4, q, r, seed=11, experiment_index=2)
    b = simulate_truth(model.net, model.plan, u0, 4, q, r, seed=11, experiment_index=2)
    c = simulate_truth(model.net, model.plan, u0, 4, q, r, seed=11, experiment_index=3)

    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.measurements, b.measurements)
    assert not np.allclose(a.states, c.states)


def test_magnitude_floor_counts_events():
    """Huge process noise drives magnitudes below the floor; they are clipped and counted."""
    from core.noisegen import MixtureSpec
    from core.psmodel import PowerSystemModel, simulate_truth

    model = PowerSystemModel(_network())
    truth = simulate_truth(model.net, model.plan, model.initial_state(), 3,
                           MixtureSpec.gaussian(100.0), None, seed=5)

    assert truth.floor_events > 0
    assert np.all(truth.states[:, :model.net.n_buses] >= 1e-4)


def test_bus_errors():
    from core.psmodel import PowerSystemModel

    model = PowerSystemModel(_network())
    u0 = model.initial_state()
    est = u0.copy()
    est[0] += 0.1
    mag, phase = model.bus_errors(est[None], u0[None])
    assert mag.shape == (1, 14)
    assert phase.shape == (1, 14)
    assert mag[0, 0] == pytest.approx(0.1)
    assert phase[0, model.net.slack_index] == 0.0
