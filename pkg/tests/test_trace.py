from __future__ import annotations

import pytest

from viralapp.engine import run
from viralapp.scenario import fixture_path, load_scenario
from viralapp.trace import Trace


def test_round_trip_is_byte_identical(tmp_path):
    trace = run(load_scenario(fixture_path("thermal.scenario")), 5)
    path = tmp_path / "t.jsonl"
    trace.write(path)
    again = Trace.read(path)
    assert again.to_bytes() == trace.to_bytes()
    assert again.lineage == trace.lineage


def test_append_only_in_time_order():
    trace = Trace(0, "x", "h")
    trace.append(5, "Custom")
    with pytest.raises(ValueError):
        trace.append(4, "Custom")


def test_lines_have_sorted_keys():
    import json

    trace = run(load_scenario(fixture_path("fig1_escape.scenario")), 0)
    for line in trace.lines():
        obj = json.loads(line)
        assert list(obj) == sorted(obj)


def test_header_required():
    with pytest.raises(ValueError):
        Trace.from_bytes(b'{"type":"event","t":0}\n')
