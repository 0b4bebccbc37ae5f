# core/casefile.py
"""IEEE Common Data Format ingestion and nodal admittance construction."""

import json
import logging
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, Any, List, Optional, Tuple

import numpy as np

from .errors import CaseParseError, CaseValidationError

logger = logging.getLogger(__name__)

JSON_SCHEMA = "dse.network"
JSON_VERSION = 1


class BusType(str, Enum):
    SLACK = "slack"
    PV = "pv"
    PQ = "pq"


# CDF bus type codes
_CDF_BUS_TYPES = {0: BusType.PQ, 1: BusType.PQ, 2: BusType.PV, 3: BusType.SLACK}
_PHASE_SHIFTER_TYPE = 4


@dataclass(frozen=True)
class BusRecord:
    """One bus of the case; shunt terms already in per-unit."""
    id: int
    name: str = ""
    base_voltage_kv: float = 1.0
    bus_type: BusType = BusType.PQ
    shunt_conductance: float = 0.0
    shunt_susceptance: float = 0.0
    initial_magnitude: float = 1.0
    initial_phase: float = 0.0        # radians

    def __post_init__(self):
        if self.base_voltage_kv <= 0:
            raise CaseValidationError(f"bus {self.id}: base voltage must be positive")
        if self.initial_magnitude <= 0:
            raise CaseValidationError(f"bus {self.id}: initial magnitude must be positive")


@dataclass(frozen=True)
class BranchRecord:
    """Series branch between two buses, with an optional off-nominal tap on the from side."""
    from_bus: int
    to_bus: int
    resistance: float
    reactance: float
    line_charging: float = 0.0
    tap_ratio: float = 1.0

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise CaseValidationError(f"branch {self.from_bus}-{self.to_bus} connects a bus to itself")
        if self.resistance == 0.0 and self.reactance == 0.0:
            raise CaseValidationError(f"branch {self.from_bus}-{self.to_bus} has zero impedance")
        if self.tap_ratio <= 0:
            raise CaseValidationError(f"branch {self.from_bus}-{self.to_bus} has a non-positive tap ratio")

    @property
    def series_conductance(self) -> float:
        return self.resistance / (self.resistance ** 2 + self.reactance ** 2)

    @property
    def series_susceptance(self) -> float:
        return -self.reactance / (self.resistance ** 2 + self.reactance ** 2)

    @property
    def label(self) -> str:
        return f"{self.from_bus}-{self.to_bus}"


@dataclass
class PowerNetwork:
    """Validated network with its dense conductance and susceptance matrices."""

    buses: List[BusRecord]
    branches: List[BranchRecord]
    g: np.ndarray
    b: np.ndarray
    slack_index: int
    base_mva: float = 100.0
    name: str = ""
    _index: Dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {bus.id: i for i, bus in enumerate(self.buses)}

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def state_dim(self) -> int:
        """Packed state size: magnitudes plus non-slack phases."""
        return 2 * self.n_buses - 1

    def bus_index(self, bus_id: int) -> int:
        """Position of a bus id in the ordered bus list."""
        try:
            return self._index[bus_id]
        except KeyError:
            raise KeyError(f"unknown bus {bus_id}") from None

    def find_branch(self, from_bus: int, to_bus: int) -> Tuple[int, bool]:
        """
        Locate a branch by its end buses.

        Returns:
            (branch position, reversed) where reversed means the pair was
            given to-side first.
        """
        for k, br in enumerate(self.branches):
            if br.from_bus == from_bus and br.to_bus == to_bus:
                return k, False
        for k, br in enumerate(self.branches):
            if br.from_bus == to_bus and br.to_bus == from_bus:
                return k, True
        raise KeyError(f"no branch between buses {from_bus} and {to_bus}")

    def initial_magnitudes(self) -> np.ndarray:
        return np.array([bus.initial_magnitude for bus in self.buses], dtype=float)

    def initial_phases(self) -> np.ndarray:
        return np.array([bus.initial_phase for bus in self.buses], dtype=float)

    def summary(self) -> str:
        return f"{self.n_buses} buses, {self.n_branches} branches"

    def to_dict(self) -> Dict[str, Any]:
        """Canonical serializable form (the JSON cache schema)."""
        buses = []
        for bus in self.buses:
            record = asdict(bus)
            record['bus_type'] = bus.bus_type.value
            buses.append(record)
        return {
            'schema': JSON_SCHEMA,
            'version': JSON_VERSION,
            'name': self.name,
            'base_mva': self.base_mva,
            'buses': buses,
            'branches': [asdict(br) for br in self.branches],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PowerNetwork":
        if data.get('schema') != JSON_SCHEMA:
            raise CaseValidationError(f"not a network dump (schema={data.get('schema')!r})")
        if data.get('version') != JSON_VERSION:
            raise CaseValidationError(f"unsupported network dump version {data.get('version')!r}")
        buses = [BusRecord(**{**rec, 'bus_type': BusType(rec['bus_type'])}) for rec in data['buses']]
        branches = [BranchRecord(**rec) for rec in data['branches']]
        return build_network(buses, branches, base_mva=data.get('base_mva', 100.0),
                             name=data.get('name', ''))

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PowerNetwork":
        return cls.from_dict(json.loads(text))


def validate_records(buses: List[BusRecord], branches: List[BranchRecord]) -> int:
    """
    Check network-level invariants.

    Returns:
        Index of the slack bus

    Raises:
        CaseValidationError: on duplicate ids, slack count != 1 or dangling branches
    """
    seen = set()
    for bus in buses:
        if bus.id in seen:
            raise CaseValidationError(f"duplicate bus id {bus.id}")
        seen.add(bus.id)

    slack = [i for i, bus in enumerate(buses) if bus.bus_type == BusType.SLACK]
    if not slack:
        raise CaseValidationError("network has no slack bus")
    if len(slack) > 1:
        ids = ", ".join(str(buses[i].id) for i in slack)
        raise CaseValidationError(f"network has {len(slack)} slack buses ({ids})")

    for br in branches:
        if br.from_bus not in seen or br.to_bus not in seen:
            raise CaseValidationError(f"branch {br.label} references an unknown bus")
    return slack[0]


def build_ybus(buses: List[BusRecord], branches: List[BranchRecord]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Assemble the nodal conductance and susceptance matrices.

    Each branch contributes its series admittance and half its line charging
    at both ends; a tap ratio t scales the from-side diagonal by 1/t² and the
    mutual terms by 1/t. Bus shunts add to the diagonal.

    Args:
        buses: Ordered bus records
        branches: Branch records referencing bus ids

    Returns:
        (G, B) as dense N×N arrays
    """
    index = {bus.id: i for i, bus in enumerate(buses)}
    n = len(buses)
    ybus = np.zeros((n, n), dtype=complex)

    for br in branches:
        i, j = index[br.from_bus], index[br.to_bus]
        ys = complex(br.series_conductance, br.series_susceptance)
        ych = 0.5j * br.line_charging
        t = br.tap_ratio
        ybus[i, i] += (ys + ych) / (t * t)
        ybus[j, j] += ys + ych
        ybus[i, j] -= ys / t
        ybus[j, i] -= ys / t

    for k, bus in enumerate(buses):
        ybus[k, k] += complex(bus.shunt_conductance, bus.shunt_susceptance)

    return ybus.real.copy(), ybus.imag.copy()


def build_network(buses: List[BusRecord], branches: List[BranchRecord],
                  base_mva: float = 100.0, name: str = "") -> PowerNetwork:
    """Validate records and derive admittances."""
    slack_index = validate_records(buses, branches)
    g, b = build_ybus(buses, branches)
    return PowerNetwork(buses=list(buses), branches=list(branches), g=g, b=b,
                        slack_index=slack_index, base_mva=base_mva, name=name)


def _section_bounds(lines: List[str], header: str) -> Tuple[int, int]:
    """Return [start, end) line indices of a CDF data section."""
    for start, line in enumerate(lines):
        if line.upper().startswith(header):
            for end in range(start + 1, len(lines)):
                if lines[end].strip().startswith("-999"):
                    return start + 1, end
            raise CaseParseError(f"section '{header}' is not terminated by -999", start + 1)
    raise CaseParseError(f"missing section '{header}'")


def _parse_bus_line(line: str, line_number: int) -> BusRecord:
    try:
        bus_id = int(line[0:4])
        name = line[5:17].strip()
        fields = line[18:].split()
        if len(fields) < 15:
            raise ValueError(f"expected at least 15 fields after the name, got {len(fields)}")
        code = int(fields[2])
        magnitude = float(fields[3])
        angle_deg = float(fields[4])
        base_kv = float(fields[9])
        shunt_g = float(fields[13])
        shunt_b = float(fields[14])
    except ValueError as e:
        raise CaseParseError(f"malformed bus record: {e}", line_number) from None

    if code not in _CDF_BUS_TYPES:
        raise CaseParseError(f"unknown bus type code {code}", line_number)
    if base_kv <= 0:
        # unspecified in many archive files
        base_kv = 1.0

    try:
        return BusRecord(
            id=bus_id,
            name=name,
            base_voltage_kv=base_kv,
            bus_type=_CDF_BUS_TYPES[code],
            shunt_conductance=shunt_g,
            shunt_susceptance=shunt_b,
            initial_magnitude=magnitude,
            initial_phase=math.radians(angle_deg),
        )
    except CaseValidationError as e:
        raise CaseParseError(str(e), line_number) from None


def _parse_branch_line(line: str, line_number: int) -> BranchRecord:
    fields = line.split()
    try:
        if len(fields) < 9:
            raise ValueError(f"expected at least 9 fields, got {len(fields)}")
        from_bus = int(fields[0])
        to_bus = int(fields[1])
        code = int(fields[5])
        r, x, b = float(fields[6]), float(fields[7]), float(fields[8])
        ratio = float(fields[14]) if len(fields) > 14 else 0.0
        angle = float(fields[15]) if len(fields) > 15 else 0.0
    except ValueError as e:
        raise CaseParseError(f"malformed branch record: {e}", line_number) from None

    if code == _PHASE_SHIFTER_TYPE or angle != 0.0:
        raise CaseParseError(f"phase-shifting transformer {from_bus}-{to_bus} is not supported", line_number)

    try:
        return BranchRecord(
            from_bus=from_bus,
            to_bus=to_bus,
            resistance=r,
            reactance=x,
            line_charging=b,
            tap_ratio=ratio if ratio != 0.0 else 1.0,
        )
    except CaseValidationError as e:
        raise CaseParseError(str(e), line_number) from None


def parse_cdf(text: str) -> PowerNetwork:
    """
    Parse an IEEE Common Data Format case.

    Args:
        text: Raw case-file content

    Returns:
        Validated PowerNetwork with populated admittance matrices

    Raises:
        CaseParseError: malformed record (carries the 1-based line number)
        CaseValidationError: duplicate ids, missing or repeated slack bus
    """
    lines = text.splitlines()
    if not lines:
        raise CaseParseError("empty case file", 1)

    base_mva = 100.0
    title_fields = lines[0][20:].split()
    if title_fields:
        try:
            base_mva = float(title_fields[0])
        except ValueError:
            logger.debug("no MVA base in title line; assuming %.1f", base_mva)
    name = lines[0][43:].strip()

    start, end = _section_bounds(lines, "BUS DATA FOLLOWS")
    buses = [
        _parse_bus_line(lines[k], k + 1)
        for k in range(start, end) if lines[k].strip()
    ]

    start, end = _section_bounds(lines, "BRANCH DATA FOLLOWS")
    branches = [
        _parse_branch_line(lines[k], k + 1)
        for k in range(start, end) if lines[k].strip()
    ]

    network = build_network(buses, branches, base_mva=base_mva, name=name)
    logger.debug("parsed case '%s': %s", name, network.summary())
    return network
