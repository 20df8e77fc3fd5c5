"""Regions, proximity encounters, beam transfers and their timing.

Rates per (sender class, receiver class) are derived from reference beam
times for one package of known size. The matrix is directional.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterable, Mapping, Optional, Union

from .errors import NonPositiveRate, UnknownPair, UnknownRegion
from .model import Number, as_fraction

APK_SIZE_BYTES = 30_100_000  # 30.1 MB, decimal megabytes

GALAXY_NEXUS = "galaxy_nexus"
NEXUS_5 = "nexus_5"
NEXUS_6 = "nexus_6"
NEXUS_10 = "nexus_10"

# Reference beam time in seconds for the 30.1 MB package, keyed (sender, receiver).
# N5->N5 and N10->N10 have no reference value; see impute_diagonal.
BEAM_SECONDS: dict[tuple[str, str], int] = {
    (GALAXY_NEXUS, GALAXY_NEXUS): 227,
    (GALAXY_NEXUS, NEXUS_5): 221,
    (GALAXY_NEXUS, NEXUS_6): 209,
    (GALAXY_NEXUS, NEXUS_10): 419,
    (NEXUS_5, GALAXY_NEXUS): 211,
    (NEXUS_5, NEXUS_6): 149,
    (NEXUS_5, NEXUS_10): 360,
    (NEXUS_6, GALAXY_NEXUS): 198,
    (NEXUS_6, NEXUS_5): 147,
    (NEXUS_6, NEXUS_6): 139,
    (NEXUS_6, NEXUS_10): 357,
    (NEXUS_10, GALAXY_NEXUS): 409,
    (NEXUS_10, NEXUS_5): 400,
    (NEXUS_10, NEXUS_6): 359,
}

IMPUTATION_RULES = ("none", "geometric_mean")

Pair = tuple[str, str]


@dataclass
class Region:
    region_id: str
    internet_up: bool = True
    members: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class Encounter:
    time: int  # ms
    a: str
    b: str
    duration_available: int  # ms
    bridge: bool = False

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValueError("an encounter needs two distinct devices")
        if self.duration_available <= 0:
            raise ValueError("duration_available must be positive")


@dataclass
class RateMatrix:
    """Bytes per second per ordered class pair, plus a handshake constant."""

    rates: dict[Pair, Fraction]
    handshake_seconds: Union[Fraction, dict[Pair, Fraction]] = Fraction(0)
    imputed: frozenset = frozenset()

    def __post_init__(self) -> None:
        for pair, rate in self.rates.items():
            if rate <= 0:
                raise NonPositiveRate(f"rate for {pair[0]} -> {pair[1]} must be positive")

    def rate(self, sender: str, receiver: str) -> Fraction:
        try:
            return self.rates[(sender, receiver)]
        except KeyError:
            raise UnknownPair(sender, receiver) from None

    def handshake(self, sender: str, receiver: str) -> Fraction:
        if isinstance(self.handshake_seconds, dict):
            return self.handshake_seconds.get((sender, receiver), Fraction(0))
        return self.handshake_seconds

    def require(self, pairs: Iterable[Pair]) -> None:
        for s, r in pairs:
            self.rate(s, r)

    def missing(self, pairs: Iterable[Pair]) -> list[Pair]:
        return sorted({p for p in pairs if p not in self.rates})


def transfer_duration(matrix: RateMatrix, sender_class: str, receiver_class: str, size_bytes: int) -> Fraction:
    """Seconds for a complete beam: handshake then bulk at the pair's rate."""
    rate = matrix.rate(sender_class, receiver_class)
    return matrix.handshake(sender_class, receiver_class) + Fraction(size_bytes) / rate


def impute_diagonal(table: Mapping[Pair, Fraction]) -> dict[Pair, Fraction]:
    """Fill blank ``(c, c)`` cells with the geometric mean of c's row and column means."""
    classes = sorted({c for pair in table for c in pair})
    out: dict[Pair, Fraction] = {}
    for c in classes:
        if (c, c) in table:
            continue
        row = [v for (s, r), v in table.items() if s == c and r != c]
        col = [v for (s, r), v in table.items() if r == c and s != c]
        if not row or not col:
            continue
        row_mean = sum(row, Fraction(0)) / len(row)
        col_mean = sum(col, Fraction(0)) / len(col)
        out[(c, c)] = Fraction(math.sqrt(row_mean * col_mean)).limit_denominator(10**6)
    return out


def calibrate_rates(
    table: Mapping[Pair, Number],
    size_bytes: int = APK_SIZE_BYTES,
    handshake_seconds: Number = 0,
    imputation: str = "none",
) -> RateMatrix:
    """Derive per-pair rates so that ``transfer_duration`` reproduces ``table``."""
    if imputation not in IMPUTATION_RULES:
        raise ValueError(f"unknown imputation rule {imputation!r}")
    hs = as_fraction(handshake_seconds)
    measured = {pair: as_fraction(v) for pair, v in table.items()}
    imputed: dict[Pair, Fraction] = {}
    if imputation == "geometric_mean":
        imputed = impute_diagonal(measured)
    rates = {}
    for pair, seconds in {**measured, **imputed}.items():
        if seconds <= hs:
            raise NonPositiveRate(
                f"measured {seconds} s for {pair[0]} -> {pair[1]} does not exceed the handshake ({hs} s)"
            )
        rates[pair] = Fraction(size_bytes) / (seconds - hs)
    return RateMatrix(rates, hs, frozenset(imputed))


def load_rate_table(source: Union[str, io.TextIOBase]) -> dict[Pair, Fraction]:
    """Read ``sender_class,receiver_class,seconds`` rows (header optional)."""
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_rate_table(fh)
    table: dict[Pair, Fraction] = {}
    for lineno, row in enumerate(csv.reader(source), start=1):
        if not row or row[0].startswith("#"):
            continue
        if row[0].strip() == "sender_class":
            continue
        if len(row) != 3:
            raise ValueError(f"line {lineno}: expected 3 columns, got {len(row)}")
        sender, receiver, seconds = (c.strip() for c in row)
        if (sender, receiver) in table:
            raise ValueError(f"line {lineno}: duplicate pair {sender} -> {receiver}")
        table[(sender, receiver)] = Fraction(seconds)
    return table


def builtin_table_path() -> str:
    return str(resources.files("viralapp") / "data" / "table1_rates.csv")


class TransferResult(str, enum.Enum):
    DELIVERED = "Delivered"
    OUT_OF_TIME = "OutOfTime"
    BLOCKED = "Blocked"
    CORRUPTED_DELIVERED = "CorruptedDelivered"


@dataclass
class Transfer:
    """One beam in progress. Times are ms on the simulation clock."""

    transfer_id: int
    encounter: Encounter
    sender: str
    receiver: str
    pkg: object  # SignedPackage; may be swapped for a corrupted copy in flight
    start: int
    bulk_start: int
    end: int
    link: str = "proximity"
    monitored: bool = False
    delay_ms: int = 0
    replay: bool = False

    @property
    def deadline(self) -> int:
        return self.encounter.time + self.encounter.duration_available

    @property
    def duration_ms(self) -> int:
        return self.end - self.start


@dataclass
class Network:
    """Regions and the devices in them, plus the kill-switch state."""

    regions: dict[str, Region] = field(default_factory=dict)
    device_region: dict[str, str] = field(default_factory=dict)

    def add_region(self, region_id: str, internet_up: bool = True) -> Region:
        region = Region(region_id, internet_up)
        self.regions[region_id] = region
        return region

    def place(self, device_id: str, region_id: str) -> None:
        region = self.region(region_id)
        old = self.device_region.get(device_id)
        if old is not None:
            self.regions[old].members.discard(device_id)
        region.members.add(device_id)
        self.device_region[device_id] = region_id

    def region(self, region_id: str) -> Region:
        try:
            return self.regions[region_id]
        except KeyError:
            raise UnknownRegion(region_id) from None

    def kill_switch(self, region_id: str, up: bool) -> Region:
        region = self.region(region_id)
        region.internet_up = up
        return region

    def uplink_check(self, device_id: str) -> bool:
        return self.region(self.device_region[device_id]).internet_up

    def same_region(self, a: str, b: str) -> bool:
        return self.device_region[a] == self.device_region[b]


def beam_transfer(sim, enc: Encounter, sender: str, receiver: str, pkg) -> None:
    """Start a beam of ``pkg`` from ``sender`` to ``receiver`` inside ``sim``.

    The transfer runs as scheduled phases (handshake, bulk start, bulk end)
    on the simulation clock; its outcome is recorded when the last phase
    fires. See :meth:`viralapp.engine.Simulation.start_transfer`.
    """
    if not enc.bridge and not sim.network.same_region(sender, receiver):
        raise ValueError(f"{sender} and {receiver} are not in proximity")
    return sim.start_transfer(enc, sender, receiver, pkg)
