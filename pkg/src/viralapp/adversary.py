"""The censor: watches links, blacklists hashes and certs, tampers with transfers.

The adversary never holds private keys. Everything it can do to a package
either leaves the bytes alone (observe, block, delay, replay) or breaks
verification (modify, forgery attempts).
"""

from __future__ import annotations

import dataclasses
import enum
import random
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import BudgetExhausted, ConstraintError
from .hashing import ContentHash, canonical_hash
from .model import Certificate, DeviceState, Genome, PlatformSpec, SignedPackage, package_digest
from .netmodel import Transfer


class Decision(str, enum.Enum):
    ALLOW = "allow"
    BLOCK = "block"


@dataclass(frozen=True)
class MonitorPolicy:
    """``internet_only`` watches uplinks only; otherwise each proximity
    transfer is observed with probability ``p``."""

    internet_only: bool = True
    p: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ConstraintError(f"monitoring probability must lie in [0, 1], got {self.p}")

    @classmethod
    def probability(cls, p: float) -> MonitorPolicy:
        return cls(False, float(p))


@dataclass(frozen=True)
class Action:
    time: int
    kind: str
    detail: tuple[tuple[str, Any], ...] = ()

    def as_dict(self) -> dict[str, Any]:
        return {"t": self.time, "action": self.kind, **dict(self.detail)}


@dataclass(frozen=True)
class Revealed:
    genomes: tuple[Genome, ...]
    package_hashes: frozenset[ContentHash]
    cert_ids: frozenset[str]


@dataclass
class AdversaryState:
    hash_blacklist: set[ContentHash] = field(default_factory=set)
    cert_blacklist: set[str] = field(default_factory=set)
    observed: set[ContentHash] = field(default_factory=set)
    monitored_links: MonitorPolicy = field(default_factory=MonitorPolicy)
    compromise_budget: int = 0
    actions_log: list[Action] = field(default_factory=list)
    # package store for replay: content hash -> last observed copy
    captured: dict[ContentHash, SignedPackage] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.compromise_budget < 0:
            raise ConstraintError("compromise_budget must be non-negative")

    def log(self, time: int, kind: str, **detail: Any) -> Action:
        action = Action(time, kind, tuple(sorted(detail.items())))
        self.actions_log.append(action)
        return action


def watches(adv: AdversaryState, link: str, rng: random.Random) -> bool:
    """Policy draw: is this link monitored? Consumes one draw for proximity links."""
    if link == "internet":
        return True
    if adv.monitored_links.internet_only:
        return False
    return rng.random() < adv.monitored_links.p


def observe(adv: AdversaryState, pkg: SignedPackage, link: str, rng: random.Random, now: int = 0) -> bool:
    """Record ``pkg`` if the monitoring policy catches this link."""
    if not watches(adv, link, rng):
        return False
    adv.observed.add(pkg.content_hash)
    adv.captured[pkg.content_hash] = pkg
    adv.log(now, "observe", hash=pkg.content_hash.hex, link=link)
    return True


def blacklist_hash(adv: AdversaryState, content_hash: ContentHash, now: int = 0, reason: str = "script") -> None:
    if content_hash in adv.hash_blacklist:
        return
    adv.hash_blacklist.add(content_hash)
    adv.log(now, "blacklist_hash", hash=content_hash.hex, reason=reason)


def blacklist_cert(adv: AdversaryState, cert_id: str, now: int = 0, reason: str = "script") -> None:
    if cert_id in adv.cert_blacklist:
        return
    adv.cert_blacklist.add(cert_id)
    adv.log(now, "blacklist_cert", cert=cert_id, reason=reason)


def block_decision(adv: AdversaryState, pkg: SignedPackage, now: int = 0) -> Decision:
    if pkg.content_hash in adv.hash_blacklist:
        adv.log(now, "block", hash=pkg.content_hash.hex, matched="hash", entry=pkg.content_hash.hex)
        return Decision.BLOCK
    if pkg.cert.cert_id in adv.cert_blacklist:
        adv.log(now, "block", hash=pkg.content_hash.hex, matched="cert", entry=pkg.cert.cert_id)
        return Decision.BLOCK
    return Decision.ALLOW


def delay(adv: AdversaryState, transfer: Transfer, extra_seconds: float, now: int = 0) -> int:
    """Push the end of ``transfer`` back; returns the new end time (ms)."""
    extra_ms = round(extra_seconds * 1000)
    if extra_ms < 0:
        raise ValueError("delay must be non-negative")
    transfer.end += extra_ms
    transfer.delay_ms += extra_ms
    adv.log(now, "delay", transfer=transfer.transfer_id, ms=extra_ms)
    return transfer.end


def modify(adv: AdversaryState, transfer: Transfer, now: int = 0) -> SignedPackage:
    """Tamper with the bytes in flight. The receiver's verify will fail."""
    tampered = dataclasses.replace(transfer.pkg, corrupted=True)
    transfer.pkg = tampered
    adv.log(now, "modify", transfer=transfer.transfer_id)
    return tampered


def replay(adv: AdversaryState, transfer: Transfer, now: int = 0) -> SignedPackage:
    """The captured copy of an observed transfer, for re-delivery to its receiver."""
    pkg = adv.captured.get(transfer.pkg.content_hash)
    if pkg is None:
        raise KeyError("only observed transfers can be replayed")
    adv.log(now, "replay", transfer=transfer.transfer_id, receiver=transfer.receiver)
    return pkg


def compromise(adv: AdversaryState, dev: DeviceState, now: int = 0) -> Revealed:
    """Read everything stored on ``dev``. Private keys are not part of the haul."""
    if adv.compromise_budget <= 0:
        raise BudgetExhausted(f"no compromise budget left for {dev.device_id}")
    adv.compromise_budget -= 1
    dev.compromised = True
    pkgs = [e.package for e in dev.installed.values()] + list(dev.stored)
    genomes = tuple(p.embedded_genome for p in pkgs if p.embedded_genome is not None)
    revealed = Revealed(
        genomes,
        frozenset(p.content_hash for p in pkgs),
        frozenset(p.cert.cert_id for p in pkgs),
    )
    for p in pkgs:
        adv.captured.setdefault(p.content_hash, p)
    adv.log(now, "compromise", device=dev.device_id, hashes=len(revealed.package_hashes))
    return revealed


def attempt_forgery(
    adv: AdversaryState,
    genome: Genome,
    cert_id: str,
    platform: PlatformSpec,
    rng: random.Random,
    now: int = 0,
) -> SignedPackage:
    """Build a package claiming ``cert_id`` without its key.

    The adversary signs with a key of its own choosing; since it cannot
    invert the signature scheme the result must fail verification.
    """
    fake = Certificate(cert_id, False, rng.randbytes(32))
    rh = canonical_hash("forged-res", rng.getrandbits(64))
    dh = canonical_hash("forged-dex", rng.getrandbits(64))
    eh = canonical_hash("forged-extras")
    size = 1_000_000
    digest = package_digest(genome.package_name, rh, dh, eh, genome, platform, size, fake)
    adv.log(now, "forge", cert=cert_id)
    return SignedPackage(
        genome.package_name, digest, fake, platform, genome, size, rh, dh, eh, fake.sign(digest.digest)
    )


def audit_blocking(adv: AdversaryState) -> list[str]:
    """Every block must cite a blacklist entry added no later than the block."""
    hashes: dict[str, int] = {}
    certs: dict[str, int] = {}
    problems = []
    for i, action in enumerate(adv.actions_log):
        d = dict(action.detail)
        if action.kind == "blacklist_hash":
            hashes.setdefault(d["hash"], action.time)
        elif action.kind == "blacklist_cert":
            certs.setdefault(d["cert"], action.time)
        elif action.kind == "block":
            table = hashes if d["matched"] == "hash" else certs
            added = table.get(d["entry"])
            if added is None or added > action.time:
                problems.append(f"action {i}: block at {action.time} cites {d['matched']} {d['entry']} not yet blacklisted")
            if d["matched"] == "hash" and d["entry"] != d["hash"]:
                problems.append(f"action {i}: hash entry does not match blocked package")
    return problems
