"""Builders for small in-memory scenarios used across the tests."""

from __future__ import annotations

from typing import Any, Optional

from viralapp.model import Genome
from viralapp.scenario import Scenario, scenario_from_dict

GENOME = {
    "package_name": "org.example.app",
    "display_name": "App",
    "sources": {"Main": {"text": "class Main { void run() {} }", "refs": ["layout/main"]}},
    "resources": {"layout/main": "<LinearLayout/>"},
    "libraries": {"support": "support classes"},
}


def ref_genome(**overrides: Any) -> Genome:
    fields = dict(
        package_name="org.example.ref",
        sources={"Main": "class Main {}"},
        resources={"layout/main": b"<x/>"},
        libraries={"support": b"lib"},
    )
    fields.update(overrides)
    return Genome(**fields)


def crowd_doc(
    n: int,
    *,
    classes: tuple[str, ...] = ("nexus_5", "nexus_6", "galaxy_nexus", "nexus_10"),
    rate: Optional[float] = 0.02,
    window: Any = (300, 900),
    max_time: int = 86_400,
    monitor: Any = "internet_only",
    mutation: Optional[dict] = None,
    adversary: Optional[dict] = None,
    encounters: Optional[list[dict]] = None,
    api_levels: Optional[list[int]] = None,
    name: str = "crowd",
) -> dict:
    """One region of ``n`` devices cycling through ``classes``, origin ``d00``."""
    width = len(str(n - 1))
    devices = []
    for i in range(n):
        dev = {"id": f"d{i:0{width}d}", "class": classes[i % len(classes)], "region": "r"}
        if api_levels is not None:
            dev["api_level"] = api_levels[i % len(api_levels)]
        devices.append(dev)
    doc: dict[str, Any] = {
        "scenario": {"name": name, "max_time": max_time},
        "regions": [{"id": "r", "internet_up": True}],
        "devices": devices,
        "genome": {**GENOME, "origin": devices[0]["id"]},
        "rates": {"table": "builtin:table1"},
        "adversary": {"monitor": monitor, **(adversary or {})},
    }
    if rate is not None:
        doc["encounters"] = {"generator": {"rate": rate, "window": list(window)}}
    if encounters is not None:
        doc.setdefault("encounters", {})["script"] = encounters
    if mutation is not None:
        doc["mutation"] = mutation
    return doc


def crowd(n: int, **kwargs: Any) -> Scenario:
    return scenario_from_dict(crowd_doc(n, **kwargs), source_hash=f"crowd-{n}-{sorted(kwargs.items())!r}")


def pair_doc(sender_class: str = "nexus_6", receiver_class: str = "nexus_5", **receiver: Any) -> dict:
    """Two devices, one scripted meeting at t=10 s with a long window."""
    return {
        "scenario": {"name": "pair", "max_time": 3600},
        "regions": [{"id": "r"}],
        "devices": [
            {"id": "a", "class": sender_class, "region": "r"},
            {"id": "b", "class": receiver_class, "region": "r", **receiver},
        ],
        "genome": {**GENOME, "origin": "a"},
        "encounters": {"script": [{"time": 10, "a": "a", "b": "b", "window": 1800}]},
    }


def pair(**kwargs: Any) -> Scenario:
    return scenario_from_dict(pair_doc(**kwargs), source_hash="pair")


# -- acceptance reporting ----------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


class criterion:
    """Record a PASS/FAIL line for acceptance criterion ``number``."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.detail = ""

    def __enter__(self) -> "criterion":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        status = "PASS" if exc_type is None else "FAIL"
        line = f"[{status}] criterion {self.number}: {self.title}"
        if self.detail:
            line += f" ({self.detail})"
        if exc is not None:
            line += f" :: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        ACCEPTANCE[self.number] = line
        return False
