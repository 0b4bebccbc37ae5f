# core/psmodel.py
"""Quasi-steady-state power system model: Holt transition and power-flow measurements."""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .casefile import PowerNetwork
from .errors import ConfigError, DimensionError
from .noisegen import NoiseSource, ScenarioStreams

logger = logging.getLogger(__name__)

DEFAULT_LEVEL_COEFF = 0.8
DEFAULT_TREND_COEFF = 0.5
DEFAULT_MAGNITUDE_FLOOR = 1e-4


def pack_state(magnitudes: np.ndarray, phases: np.ndarray, slack_index: int) -> np.ndarray:
    """Stack magnitudes and non-slack phases along the last axis."""
    phases = np.delete(np.asarray(phases, dtype=float), slack_index, axis=-1)
    return np.concatenate([np.asarray(magnitudes, dtype=float), phases], axis=-1)


def unpack_state(u: np.ndarray, slack_index: int, n_buses: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split a packed state (or a batch of them) into magnitudes and full phase vectors."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 2 * n_buses - 1:
        raise DimensionError(f"packed state has length {u.shape[-1]}, expected {2 * n_buses - 1}")
    magnitudes = u[..., :n_buses]
    phases = np.insert(u[..., n_buses:], slack_index, 0.0, axis=-1)
    return magnitudes, phases


@dataclass
class StateVector:
    """Bus voltage magnitudes (p.u.) and phases (rad); the slack phase is pinned to 0 when packed."""
    magnitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        self.phases = np.asarray(self.phases, dtype=float)
        if self.magnitudes.shape != self.phases.shape:
            raise DimensionError("magnitudes and phases differ in length")
        if np.any(self.magnitudes <= 0):
            raise ValueError("voltage magnitudes must be positive")

    @property
    def n_buses(self) -> int:
        return self.magnitudes.shape[0]

    def packed(self, slack_index: int) -> np.ndarray:
        phases = self.phases - self.phases[slack_index]
        return pack_state(self.magnitudes, phases, slack_index)

    @classmethod
    def from_packed(cls, u: np.ndarray, slack_index: int, n_buses: int) -> "StateVector":
        magnitudes, phases = unpack_state(u, slack_index, n_buses)
        return cls(magnitudes.copy(), phases.copy())

    @classmethod
    def from_network(cls, net: PowerNetwork) -> "StateVector":
        """The case file's voltage profile."""
        return cls(net.initial_magnitudes(), net.initial_phases())


@dataclass
class HoltState:
    """Internals of Holt's two-parameter smoothing, one entry per packed state component."""
    level: np.ndarray
    prev_level: np.ndarray
    trend: np.ndarray
    forecast: np.ndarray
    level_coeff: float = DEFAULT_LEVEL_COEFF
    trend_coeff: float = DEFAULT_TREND_COEFF

    def __post_init__(self):
        for name in ('level_coeff', 'trend_coeff'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @classmethod
    def initial(cls, u0: np.ndarray, level_coeff: float = DEFAULT_LEVEL_COEFF,
                trend_coeff: float = DEFAULT_TREND_COEFF) -> "HoltState":
        u0 = np.asarray(u0, dtype=float)
        return cls(level=u0.copy(), prev_level=u0.copy(), trend=np.zeros_like(u0),
                   forecast=u0.copy(), level_coeff=level_coeff, trend_coeff=trend_coeff)

    @property
    def dim(self) -> int:
        return self.level.shape[-1]


def holt_predict(u_prev: np.ndarray, h: HoltState) -> Tuple[np.ndarray, HoltState]:
    """
    One Holt forecast step.

    The new level blends the latest state with the previous forecast, the
    trend smooths successive level changes, and the forecast is their sum.
    ``u_prev`` may be a batch (k, n); the returned HoltState then holds
    per-row internals.

    Args:
        u_prev: Latest packed state(s)
        h: Current smoothing internals

    Returns:
        (forecast, updated HoltState)
    """
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape[-1] != h.dim:
        raise DimensionError(f"state length {u_prev.shape[-1]} does not match Holt length {h.dim}")

    a, g = h.level_coeff, h.trend_coeff
    level = a * u_prev + (1.0 - a) * h.forecast
    trend = g * (level - h.level) + (1.0 - g) * h.trend
    predicted = level + trend
    return predicted, replace(h, level=level, prev_level=np.broadcast_to(h.level, level.shape).copy(),
                              trend=trend, forecast=predicted)


class MeasurementKind(str, Enum):
    VOLTAGE = "V"
    P_INJECTION = "Pinj"
    Q_INJECTION = "Qinj"
    P_FLOW = "Pflow"
    Q_FLOW = "Qflow"


@dataclass(frozen=True)
class MeasurementDescriptor:
    """A single meter: bus quantities use ``bus``; flows use the ordered bus pair."""
    kind: MeasurementKind
    bus: Optional[int] = None
    from_bus: Optional[int] = None
    to_bus: Optional[int] = None

    @property
    def is_power(self) -> bool:
        return self.kind != MeasurementKind.VOLTAGE

    @property
    def is_flow(self) -> bool:
        return self.kind in (MeasurementKind.P_FLOW, MeasurementKind.Q_FLOW)

    @classmethod
    def parse(cls, text: str) -> "MeasurementDescriptor":
        """Parse descriptor strings such as ``"V 5"`` or ``"Pflow 4-5"``."""
        parts = text.split()
        if len(parts) != 2:
            raise ConfigError(f"bad measurement descriptor {text!r}")
        try:
            kind = MeasurementKind(parts[0])
        except ValueError:
            raise ConfigError(f"unknown measurement kind in {text!r}") from None
        try:
            if kind in (MeasurementKind.P_FLOW, MeasurementKind.Q_FLOW):
                a, b = parts[1].split('-')
                return cls(kind, from_bus=int(a), to_bus=int(b))
            return cls(kind, bus=int(parts[1]))
        except ValueError:
            raise ConfigError(f"bad bus reference in {text!r}") from None

    def __str__(self) -> str:
        if self.is_flow:
            return f"{self.kind.value} {self.from_bus}-{self.to_bus}"
        return f"{self.kind.value} {self.bus}"


@dataclass
class MeasurementPlan:
    """Ordered meter set resolved against a network."""

    descriptors: List[MeasurementDescriptor]
    voltage_rows: np.ndarray = field(default=None, repr=False)
    voltage_buses: np.ndarray = field(default=None, repr=False)
    p_inj_rows: np.ndarray = field(default=None, repr=False)
    p_inj_buses: np.ndarray = field(default=None, repr=False)
    q_inj_rows: np.ndarray = field(default=None, repr=False)
    q_inj_buses: np.ndarray = field(default=None, repr=False)
    p_flow_rows: np.ndarray = field(default=None, repr=False)
    p_flow_terms: np.ndarray = field(default=None, repr=False)
    q_flow_rows: np.ndarray = field(default=None, repr=False)
    q_flow_terms: np.ndarray = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return len(self.descriptors)

    def power_mask(self) -> np.ndarray:
        """Boolean mask of injection and flow entries."""
        return np.array([d.is_power for d in self.descriptors], dtype=bool)

    def to_strings(self) -> List[str]:
        return [str(d) for d in self.descriptors]

    @classmethod
    def build(cls, net: PowerNetwork, descriptors: Sequence[Union[str, MeasurementDescriptor]],
              require_redundancy: bool = True) -> "MeasurementPlan":
        """
        Resolve descriptors against ``net``.

        Args:
            net: Network the meters sit on
            descriptors: Descriptor objects or strings
            require_redundancy: Demand m > n (more meters than states)

        Raises:
            ConfigError: unknown bus/branch or too few meters
        """
        parsed = [d if isinstance(d, MeasurementDescriptor) else MeasurementDescriptor.parse(d)
                  for d in descriptors]
        if require_redundancy and len(parsed) <= net.state_dim:
            raise ConfigError(
                f"measurement plan has {len(parsed)} meters for {net.state_dim} states; need m > n")

        rows = {kind: [] for kind in MeasurementKind}
        targets = {kind: [] for kind in MeasurementKind}
        for row, d in enumerate(parsed):
            try:
                if d.is_flow:
                    k, reverse = net.find_branch(d.from_bus, d.to_bus)
                    targets[d.kind].append(_flow_terms(net, k, reverse))
                else:
                    targets[d.kind].append(net.bus_index(d.bus))
            except KeyError as e:
                raise ConfigError(f"measurement {d}: {e.args[0]}") from None
            rows[d.kind].append(row)

        def ints(values):
            return np.asarray(values, dtype=int)

        def terms(values):
            return np.asarray(values, dtype=float).reshape(-1, 7)

        return cls(
            descriptors=parsed,
            voltage_rows=ints(rows[MeasurementKind.VOLTAGE]),
            voltage_buses=ints(targets[MeasurementKind.VOLTAGE]),
            p_inj_rows=ints(rows[MeasurementKind.P_INJECTION]),
            p_inj_buses=ints(targets[MeasurementKind.P_INJECTION]),
            q_inj_rows=ints(rows[MeasurementKind.Q_INJECTION]),
            q_inj_buses=ints(targets[MeasurementKind.Q_INJECTION]),
            p_flow_rows=ints(rows[MeasurementKind.P_FLOW]),
            p_flow_terms=terms(targets[MeasurementKind.P_FLOW]),
            q_flow_rows=ints(rows[MeasurementKind.Q_FLOW]),
            q_flow_terms=terms(targets[MeasurementKind.Q_FLOW]),
        )

    @classmethod
    def default(cls, net: PowerNetwork) -> "MeasurementPlan":
        """All magnitudes, all P/Q injections, P/Q flows at the from end of every branch."""
        descriptors = [f"V {bus.id}" for bus in net.buses]
        descriptors += [f"Pinj {bus.id}" for bus in net.buses]
        descriptors += [f"Qinj {bus.id}" for bus in net.buses]
        descriptors += [f"Pflow {br.label}" for br in net.branches]
        descriptors += [f"Qflow {br.label}" for br in net.branches]
        return cls.build(net, descriptors)


def _flow_terms(net: PowerNetwork, k: int, reverse: bool) -> List[float]:
    """
    Coefficients of a branch-end flow: [near bus, far bus, g, b, half charging,
    near-end squared-magnitude divisor, mutual-term divisor].
    """
    br = net.branches[k]
    i, j = net.bus_index(br.from_bus), net.bus_index(br.to_bus)
    t = br.tap_ratio
    g, b, half = br.series_conductance, br.series_susceptance, 0.5 * br.line_charging
    if reverse:
        return [j, i, g, b, half, 1.0, t]
    return [i, j, g, b, half, t * t, t]


def measure(net: PowerNetwork, u: np.ndarray, plan: MeasurementPlan) -> np.ndarray:
    """
    Evaluate the measurement function.

    Injections use the nodal admittance matrices; flows use the branch
    pi-model including half line charging and the from-side tap.

    Args:
        net: Network
        u: Packed state, or a batch of shape (k, n)
        plan: Resolved measurement plan

    Returns:
        Measurement vector (m,) or batch (k, m)
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    batch = np.atleast_2d(u)
    vm, va = unpack_state(batch, net.slack_index, net.n_buses)
    out = np.empty((batch.shape[0], plan.m))

    if plan.voltage_rows.size:
        out[:, plan.voltage_rows] = vm[:, plan.voltage_buses]

    if plan.p_inj_rows.size or plan.q_inj_rows.size:
        diff = va[:, :, None] - va[:, None, :]
        vv = vm[:, :, None] * vm[:, None, :]
        cos, sin = np.cos(diff), np.sin(diff)
        if plan.p_inj_rows.size:
            p = np.sum(vv * (net.g * cos + net.b * sin), axis=2)
            out[:, plan.p_inj_rows] = p[:, plan.p_inj_buses]
        if plan.q_inj_rows.size:
            q = np.sum(vv * (net.g * sin - net.b * cos), axis=2)
            out[:, plan.q_inj_rows] = q[:, plan.q_inj_buses]

    for rows, terms, reactive in ((plan.p_flow_rows, plan.p_flow_terms, False),
                                  (plan.q_flow_rows, plan.q_flow_terms, True)):
        if not rows.size:
            continue
        near, far = terms[:, 0].astype(int), terms[:, 1].astype(int)
        g, b, half, sq_div, mut_div = (terms[:, c] for c in range(2, 7))
        vi, vj = vm[:, near], vm[:, far]
        theta = va[:, near] - va[:, far]
        mutual = vi * vj / mut_div
        if reactive:
            out[:, rows] = -vi ** 2 * (b + half) / sq_div - mutual * (g * np.sin(theta) - b * np.cos(theta))
        else:
            out[:, rows] = vi ** 2 * g / sq_div - mutual * (g * np.cos(theta) + b * np.sin(theta))

    return out[0] if single else out


class PowerSystemModel:
    """
    Binds a network, its meter plan and the Holt coefficients into the
    state-space model the filter engine consumes.
    """

    def __init__(self, net: PowerNetwork, plan: Optional[MeasurementPlan] = None,
                 level_coeff: float = DEFAULT_LEVEL_COEFF, trend_coeff: float = DEFAULT_TREND_COEFF):
        self.net = net
        self.plan = plan if plan is not None else MeasurementPlan.default(net)
        self.level_coeff = level_coeff
        self.trend_coeff = trend_coeff

    @property
    def n_states(self) -> int:
        return self.net.state_dim

    @property
    def n_measurements(self) -> int:
        return self.plan.m

    def initial_state(self) -> np.ndarray:
        return StateVector.from_network(self.net).packed(self.net.slack_index)

    def initial_holt(self, u0: np.ndarray) -> HoltState:
        return HoltState.initial(u0, self.level_coeff, self.trend_coeff)

    def forecast(self, points: np.ndarray, holt: HoltState) -> np.ndarray:
        predicted, _ = holt_predict(points, holt)
        return predicted

    def advance(self, mean: np.ndarray, holt: HoltState) -> HoltState:
        _, updated = holt_predict(mean, holt)
        return updated

    def measure(self, points: np.ndarray) -> np.ndarray:
        return measure(self.net, points, self.plan)

    def bus_errors(self, estimates: np.ndarray, truths: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Magnitude and phase errors per bus for packed estimate/truth arrays."""
        vm_e, va_e = unpack_state(estimates, self.net.slack_index, self.net.n_buses)
        vm_t, va_t = unpack_state(truths, self.net.slack_index, self.net.n_buses)
        return vm_e - vm_t, va_e - va_t


@dataclass
class TruthTrajectory:
    """Simulated ground truth and meter readings, indexed t = 1..T along axis 0."""
    states: np.ndarray
    measurements: np.ndarray
    floor_events: int = 0

    @property
    def horizon(self) -> int:
        return self.states.shape[0]


def simulate_truth(
    net: PowerNetwork,
    plan: MeasurementPlan,
    u0: np.ndarray,
    T: int,
    qgen: Optional[NoiseSource],
    rgen: Optional[NoiseSource],
    seed: int,
    experiment_index: int = 0,
    level_coeff: float = DEFAULT_LEVEL_COEFF,
    trend_coeff: float = DEFAULT_TREND_COEFF,
    magnitude_floor: float = DEFAULT_MAGNITUDE_FLOOR,
) -> TruthTrajectory:
    """
    Generate a ground-truth trajectory and its measurements.

    States follow the Holt forecast plus process noise; meters read the
    measurement function plus measurement noise. Magnitudes driven below
    ``magnitude_floor`` are clipped and counted.

    Args:
        net: Network
        plan: Meter plan
        u0: Packed initial state
        T: Number of steps (>= 1)
        qgen: Process noise source (None for noise-free)
        rgen: Measurement noise source (None for noise-free)
        seed: Base seed
        experiment_index: Monte Carlo experiment index for stream derivation
        level_coeff: Holt level coefficient
        trend_coeff: Holt trend coefficient
        magnitude_floor: Lower clip for voltage magnitudes

    Returns:
        TruthTrajectory with states (T, n) and measurements (T, m)
    """
    if T < 1:
        raise ValueError("horizon T must be at least 1")
    u0 = np.asarray(u0, dtype=float)
    n, m, nb = net.state_dim, plan.m, net.n_buses
    if u0.shape != (n,):
        raise DimensionError(f"initial state has shape {u0.shape}, expected ({n},)")

    streams = ScenarioStreams.derive(seed, experiment_index)
    holt = HoltState.initial(u0, level_coeff, trend_coeff)
    states = np.empty((T, n))
    measurements = np.empty((T, m))
    floor_events = 0

    u = u0
    for t in range(T):
        predicted, holt = holt_predict(u, holt)
        if qgen is not None:
            predicted = predicted + qgen.sample(streams.process, n, impulse_rng=streams.impulse)
        low = predicted[:nb] < magnitude_floor
        if np.any(low):
            floor_events += int(np.count_nonzero(low))
            predicted[:nb] = np.maximum(predicted[:nb], magnitude_floor)
        u = predicted
        states[t] = u

        v = measure(net, u, plan)
        if rgen is not None:
            v = v + rgen.sample(streams.measurement, m, impulse_rng=streams.impulse)
        measurements[t] = v

    if floor_events:
        logger.warning("magnitude floor %.1e applied %d times (experiment %d)",
                       magnitude_floor, floor_events, experiment_index)
    return TruthTrajectory(states=states, measurements=measurements, floor_events=floor_events)
