# tests/test_casefile.py
"""Tests for case-file parsing, validation and the JSON cache."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

CASE_PATH = Path(__file__).parent.parent / "data" / "cases" / "ieee14cdf.txt"


def _case_lines():
    return CASE_PATH.read_text(encoding='utf-8').splitlines()


def test_parse_ieee14():
    """Test counts, slack bus and admittance matrices of the 14-bus case."""
    from core.casefile import BusType, parse_cdf

    net = parse_cdf(CASE_PATH.read_text(encoding='utf-8'))

    assert net.n_buses == 14
    assert net.n_branches == 20
    assert net.summary() == "14 buses, 20 branches"
    assert net.buses[net.slack_index].bus_type == BusType.SLACK
    assert net.buses[net.slack_index].id == 1
    assert net.g.shape == (14, 14)
    np.testing.assert_allclose(net.g, net.g.T, atol=1e-12)
    np.testing.assert_allclose(net.b, net.b.T, atol=1e-12)
    assert net.initial_magnitudes()[0] == pytest.approx(1.06)
    assert net.initial_phases()[0] == 0.0

    print("✅ 14-bus case parsed")


def test_ybus_row_sums_without_shunts():
    """Rows of G sum to zero when no bus has shunt conductance and taps are nominal."""
    from core.casefile import parse_cdf

    net = parse_cdf(CASE_PATH.read_text(encoding='utf-8'))
    nominal = [i for i, bus in enumerate(net.buses)
               if all(br.tap_ratio == 1.0 for br in net.branches
                      if bus.id in (br.from_bus, br.to_bus))]
    assert nominal
    np.testing.assert_allclose(net.g.sum(axis=1)[nominal], 0.0, atol=1e-9)

    print("✅ Conductance rows balance")


def test_find_branch():
    """Branches are found in either orientation."""
    from core.casefile import parse_cdf

    net = parse_cdf(CASE_PATH.read_text(encoding='utf-8'))
    k, reverse = net.find_branch(1, 2)
    assert not reverse
    assert net.branches[k].label == "1-2"
    k2, reverse = net.find_branch(2, 1)
    assert k2 == k and reverse
    with pytest.raises(KeyError):
        net.find_branch(1, 14)
    with pytest.raises(KeyError):
        net.bus_index(99)

    print("✅ Branch lookup works")


def test_malformed_line_reports_line_number():
    """A truncated bus record fails with its 1-based line number."""
    from core.casefile import parse_cdf
    from core.errors import CaseParseError

    lines = _case_lines()
    lines[2] = lines[2][:40]
    with pytest.raises(CaseParseError) as info:
        parse_cdf("\n".join(lines))
    assert info.value.line_number == 3
    assert "line 3" in str(info.value)

    print("✅ Malformed record rejected with line number")


def test_missing_terminator():
    """A section without -999 is a parse error."""
    from core.casefile import parse_cdf
    from core.errors import CaseParseError

    lines = [line for line in _case_lines() if not line.strip().startswith("-999")]
    with pytest.raises(CaseParseError):
        parse_cdf("\n".join(lines))


def test_two_slack_buses_rejected():
    """A second slack bus fails validation."""
    from core.casefile import parse_cdf
    from core.errors import CaseValidationError

    lines = _case_lines()
    assert "  1  1  2 1.045" in lines[3]
    lines[3] = lines[3].replace("  1  1  2 1.045", "  1  1  3 1.045")
    with pytest.raises(CaseValidationError):
        parse_cdf("\n".join(lines))

    print("✅ Duplicate slack rejected")


def test_json_round_trip():
    """The JSON dump reproduces the same network."""
    from core.casefile import PowerNetwork, parse_cdf

    net = parse_cdf(CASE_PATH.read_text(encoding='utf-8'))
    again = PowerNetwork.from_json(net.to_json())

    assert again.n_buses == net.n_buses
    assert again.slack_index == net.slack_index
    np.testing.assert_allclose(again.g, net.g)
    np.testing.assert_allclose(again.b, net.b)


def test_loader_cache(tmp_path):
    """The loader writes a cache entry and reads it back."""
    from core.case_loader import CaseLoader

    loader = CaseLoader(cache_dir=tmp_path)
    first = loader.load(CASE_PATH)
    cached = list(tmp_path.glob("ieee14cdf_*.json"))
    assert len(cached) == 1

    second = CaseLoader(cache_dir=tmp_path).load(CASE_PATH)
    np.testing.assert_allclose(second.b, first.b)

    dumped = CaseLoader(cache_enabled=False).load(cached[0])
    assert dumped.summary() == first.summary()

    print("✅ Case cache works")


def test_loader_missing_file(tmp_path):
    from core.case_loader import CaseLoader

    with pytest.raises(FileNotFoundError):
        CaseLoader(cache_enabled=False).load(tmp_path / "nope.txt")
