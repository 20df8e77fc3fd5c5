from __future__ import annotations

from viralapp.engine import run
from viralapp.metrics import infection_csv, metrics, transfer_rows, transfers_csv
from viralapp.scenario import scenario_from_dict

from helpers import GENOME, crowd, pair_doc


def test_no_events_curve_is_origin_only():
    doc = pair_doc()
    del doc["encounters"]
    trace = run(scenario_from_dict(doc), 0)
    s = metrics(trace)
    assert s.infection_curve == [(0, 1)]
    assert s.final_infected == 1 and s.mean_transfer_seconds is None


def test_blocked_count_recount():
    sc = crowd(8, monitor=1.0, adversary={"actions": [{"time": 0, "action": "blacklist_initial"}]}, max_time=20_000)
    trace = run(sc, 1)
    blocked = sum(1 for r in trace.of_kind("TransferPhase", phase="end") if r["outcome"] == "Blocked")
    assert blocked > 0
    assert metrics(trace).blocked_count == blocked


def test_curve_non_decreasing_and_consistent():
    trace = run(crowd(10, max_time=40_000), 2)
    curve = metrics(trace).infection_curve
    counts = [c for _, c in curve]
    assert counts == sorted(counts)
    assert counts[-1] == sum(1 for d in trace.devices if d["installed"])


def test_mean_gn_to_n10_over_ten_transfers():
    devices = [{"id": "gn", "class": "galaxy_nexus", "region": "r"}]
    devices += [{"id": f"tab{i}", "class": "nexus_10", "region": "r"} for i in range(10)]
    doc = {
        "scenario": {"name": "gn_n10"},
        "build": {"target_package_bytes": 30_100_000},
        "regions": [{"id": "r"}],
        "devices": devices,
        "genome": {**GENOME, "origin": "gn"},
        "encounters": {
            "script": [{"time": 1000 * (i + 1), "a": "gn", "b": f"tab{i}", "window": 900} for i in range(10)]
        },
    }
    s = metrics(run(scenario_from_dict(doc), 0))
    assert s.delivered_count == 10
    assert s.pair_transfer_seconds[("galaxy_nexus", "nexus_10")] == 419


def test_csv_views():
    trace = run(crowd(5, max_time=10_000), 0)
    rows = transfer_rows(trace)
    text = transfers_csv(trace)
    assert text.count("\n") == len(rows) + 1
    assert infection_csv(trace).startswith("t_ms,infected\n0,1\n")


def test_flat_summary_is_flat():
    flat = metrics(run(crowd(5, max_time=10_000), 0)).flat()
    assert list(flat) == sorted(flat)
    assert all(isinstance(v, (int, float, bool, str, type(None))) for v in flat.values())
