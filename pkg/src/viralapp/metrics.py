"""Summaries computed from a finished trace, plus the CSV views of it."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from statistics import fmean
from typing import Any, Optional

from .mutation import Fitness, fitness
from .trace import Trace

INSTALLED = ("Updated", "SideBySide")

TRANSFER_COLUMNS = (
    "transfer",
    "sender",
    "receiver",
    "sender_class",
    "receiver_class",
    "start_ms",
    "end_ms",
    "duration_s",
    "outcome",
)


@dataclass
class Summary:
    infection_curve: list[tuple[int, int]]
    fitness: dict[str, Fitness]
    escape_times: list[float]
    blocked_count: int
    cache_hit_ratio: float
    mean_transfer_seconds: Optional[float]
    mean_build_seconds: Optional[float]
    pair_transfer_seconds: dict[tuple[str, str], float] = field(default_factory=dict)
    final_infected: int = 0
    delivered_count: int = 0
    install_count: int = 0
    strain_count: int = 0

    def flat(self) -> dict[str, Any]:
        """One level of string keys and scalar values, stable ordering."""
        out: dict[str, Any] = {
            "blocked_count": self.blocked_count,
            "cache_hit_ratio": round(self.cache_hit_ratio, 6),
            "delivered_count": self.delivered_count,
            "escape_count": len(self.escape_times),
            "escape_time": self.escape_times[0] if self.escape_times else None,
            "final_infected": self.final_infected,
            "install_count": self.install_count,
            "mean_build_seconds": _round(self.mean_build_seconds),
            "mean_transfer_seconds": _round(self.mean_transfer_seconds),
            "strain_count": self.strain_count,
        }
        for (s, r), secs in sorted(self.pair_transfer_seconds.items()):
            out[f"transfer_seconds.{s}.{r}"] = _round(secs)
        for sid, fit in sorted(self.fitness.items()):
            out[f"strain.{sid[:12]}.devices_reached"] = fit.devices_reached
            out[f"strain.{sid[:12]}.survived_blacklist"] = fit.survived_blacklist
        return dict(sorted(out.items()))


def _round(x: Optional[float]) -> Optional[float]:
    return None if x is None else round(x, 6)


def transfer_rows(trace: Trace) -> list[dict[str, Any]]:
    """One row per finished transfer, in completion order."""
    starts: dict[int, dict[str, Any]] = {}
    rows = []
    for rec in trace.of_kind("TransferPhase"):
        if rec["phase"] == "handshake_start":
            starts[rec["transfer"]] = rec
        elif rec["phase"] == "end":
            st = starts[rec["transfer"]]
            rows.append(
                {
                    "transfer": rec["transfer"],
                    "sender": st["sender"],
                    "receiver": st["receiver"],
                    "sender_class": st["sender_class"],
                    "receiver_class": st["receiver_class"],
                    "start_ms": st["t"],
                    "end_ms": rec["t"],
                    "duration_s": rec["duration_ms"] / 1000,
                    "outcome": rec["outcome"],
                }
            )
    return rows


def infection_curve(trace: Trace) -> list[tuple[int, int]]:
    """(time ms, devices with at least one install) at t=0 and at each change."""
    infected = {trace.origin_device} | {d for d, _ in trace.initial_installs}
    infected.discard("")
    curve = [(0, len(infected))]
    for rec in trace.of_kind("Install"):
        if rec["outcome"] in INSTALLED and rec["device"] not in infected:
            infected.add(rec["device"])
            curve.append((rec["t"], len(infected)))
    return curve


def metrics(trace: Trace) -> Summary:
    rows = transfer_rows(trace)
    done = [r for r in rows if r["outcome"] in ("Delivered", "CorruptedDelivered")]
    by_pair: dict[tuple[str, str], list[float]] = {}
    for r in done:
        by_pair.setdefault((r["sender_class"], r["receiver_class"]), []).append(r["duration_s"])
    builds = [rec["build_ms"] / 1000 for rec in trace.of_kind("BuildEnd")]
    hits = sum(c["hits"] for c in trace.caches.values())
    misses = sum(c["misses"] for c in trace.caches.values())
    curve = infection_curve(trace)
    escapes = sorted(rec["t"] / 1000 for rec in trace.of_kind("Escape"))
    fit = {sid: fitness(trace, sid) for sid in trace.lineage.nodes}
    return Summary(
        infection_curve=curve,
        fitness=fit,
        escape_times=escapes,
        blocked_count=sum(1 for r in rows if r["outcome"] == "Blocked"),
        cache_hit_ratio=hits / (hits + misses) if hits + misses else 0.0,
        mean_transfer_seconds=fmean(r["duration_s"] for r in done) if done else None,
        mean_build_seconds=fmean(builds) if builds else None,
        pair_transfer_seconds={k: fmean(v) for k, v in by_pair.items()},
        final_infected=curve[-1][1],
        delivered_count=len(done),
        install_count=sum(1 for rec in trace.of_kind("Install") if rec["outcome"] in INSTALLED),
        strain_count=len(trace.lineage.nodes),
    )


def _csv(header: tuple[str, ...], rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def infection_csv(trace: Trace) -> str:
    return _csv(("t_ms", "infected"), infection_curve(trace))


def transfers_csv(trace: Trace) -> str:
    rows = transfer_rows(trace)
    return _csv(TRANSFER_COLUMNS, [[r[c] for c in TRANSFER_COLUMNS] for r in rows])
