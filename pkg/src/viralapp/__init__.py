"""Simulator for a self-compiling, self-spreading Android app under a censor."""

from __future__ import annotations

__version__ = "0.1.0"

from .engine import RngRegistry, Simulation, rng_stream, run  # noqa: E402
from .metrics import metrics  # noqa: E402
from .scenario import Scenario, fixture_path, load_scenario, parse_scenario  # noqa: E402
from .trace import Trace  # noqa: E402

__all__ = [
    "RngRegistry",
    "Scenario",
    "Simulation",
    "Trace",
    "fixture_path",
    "load_scenario",
    "metrics",
    "parse_scenario",
    "rng_stream",
    "run",
]
