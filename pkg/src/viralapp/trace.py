"""Run traces: an append-only, totally ordered event log plus end-of-run state.

On disk a trace is JSON lines with sorted keys and no whitespace, so two
runs with the same inputs produce identical bytes and traces diff cleanly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional, Union

from .mutation import Lineage

FORMAT_VERSION = 1


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


@dataclass
class Trace:
    run_seed: int
    scenario_name: str
    scenario_hash: str
    origin_device: str = ""
    origin_strain: str = ""
    initial_installs: list[tuple[str, str]] = field(default_factory=list)
    records: list[dict[str, Any]] = field(default_factory=list)
    devices: list[dict[str, Any]] = field(default_factory=list)
    lineage: Lineage = field(default_factory=Lineage)
    caches: dict[str, dict[str, int]] = field(default_factory=dict)
    adversary: dict[str, Any] = field(default_factory=dict)
    end_time: int = 0

    def append(self, t: int, kind: str, **fields: Any) -> dict[str, Any]:
        if self.records and t < self.records[-1]["t"]:
            raise ValueError(f"trace is time ordered: {t} < {self.records[-1]['t']}")
        rec = {"seq": len(self.records), "t": t, "kind": kind, **fields}
        self.records.append(rec)
        return rec

    def of_kind(self, kind: str, **match: Any) -> Iterator[dict[str, Any]]:
        for rec in self.records:
            if rec["kind"] == kind and all(rec.get(k) == v for k, v in match.items()):
                yield rec

    def lines(self) -> Iterator[str]:
        yield _dumps(
            {
                "type": "header",
                "version": FORMAT_VERSION,
                "seed": self.run_seed,
                "scenario": self.scenario_name,
                "scenario_hash": self.scenario_hash,
                "origin_device": self.origin_device,
                "origin_strain": self.origin_strain,
                "initial_installs": [list(p) for p in self.initial_installs],
            }
        )
        for rec in self.records:
            yield _dumps({"type": "event", **rec})
        for dev in self.devices:
            yield _dumps({"type": "device", **dev})
        for node in self.lineage.to_records():
            yield _dumps({"type": "strain", **node})
        for dev_id in sorted(self.caches):
            yield _dumps({"type": "cache", "device": dev_id, **self.caches[dev_id]})
        yield _dumps({"type": "adversary", **self.adversary})
        yield _dumps({"type": "end", "t": self.end_time, "events": len(self.records)})

    def to_bytes(self) -> bytes:
        return "".join(line + "\n" for line in self.lines()).encode("ascii")

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> Trace:
        trace: Optional[Trace] = None
        strains = []
        for n, line in enumerate(data.decode("ascii").splitlines(), start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            kind = obj.pop("type")
            if kind == "header":
                trace = cls(
                    obj["seed"],
                    obj["scenario"],
                    obj["scenario_hash"],
                    obj["origin_device"],
                    obj["origin_strain"],
                    [tuple(p) for p in obj["initial_installs"]],
                )
                continue
            if trace is None:
                raise ValueError(f"line {n}: trace does not start with a header")
            if kind == "event":
                trace.records.append(obj)
            elif kind == "device":
                trace.devices.append(obj)
            elif kind == "strain":
                strains.append(obj)
            elif kind == "cache":
                trace.caches[obj.pop("device")] = obj
            elif kind == "adversary":
                trace.adversary = obj
            elif kind == "end":
                trace.end_time = obj["t"]
        if trace is None:
            raise ValueError("empty trace")
        trace.lineage = Lineage.from_records(strains)
        return trace

    @classmethod
    def read(cls, path: Union[str, Path]) -> Trace:
        return cls.from_bytes(Path(path).read_bytes())
