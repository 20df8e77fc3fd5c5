"""Deterministic discrete-event simulation of an app spreading between phones.

Time is integer milliseconds. The queue orders events by (time, seq) where
seq is the insertion counter, so equal-time events run in the order they
were scheduled. Every consumer of randomness draws from its own labelled
stream, so adding a consumer never shifts another's draws.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Any, Optional

from . import adversary as adv_ops
from .buildchain import BuildCache, BuildReport, full_build
from .device import CompatResult, InstallOutcome, check_compat, heat, install, thermal_update
from .errors import DuplicateLabel
from .model import Certificate, DeviceState, Genome, SignedPackage, to_ms, verify
from .mutation import Lineage, mutate, random_ops
from .netmodel import Encounter, Network, Transfer, TransferResult, transfer_duration
from .scenario import Scenario
from .trace import Trace

EVENT_KINDS = (
    "Encounter",
    "BuildStart",
    "BuildEnd",
    "TransferPhase",
    "Install",
    "Mutation",
    "KillSwitch",
    "Compromise",
    "Escape",
    "Custom",
)


def rng_stream(seed: int, label: str) -> random.Random:
    """An independent generator for one consumer, derived from (seed, label)."""
    material = hashlib.sha256(f"viralapp:{seed}:{label}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(material, "big"))


class RngRegistry:
    """Hands out one stream per label and refuses to hand out a label twice."""

    def __init__(self, seed: int):
        self.seed = seed
        self._labels: set[str] = set()

    def stream(self, label: str) -> random.Random:
        if label in self._labels:
            raise DuplicateLabel(f"rng label {label!r} already taken")
        self._labels.add(label)
        return rng_stream(self.seed, label)


@dataclass(order=True)
class Event:
    time: int
    seq: int
    kind: str = field(compare=False)
    name: str = field(compare=False, default="")
    payload: dict[str, Any] = field(compare=False, default_factory=dict)
    cancelled: bool = field(compare=False, default=False)


class EventQueue:
    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._seq = 0

    def push(self, time: int, kind: str, name: str = "", **payload: Any) -> Event:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if not isinstance(time, int) or time < 0:
            raise ValueError(f"event time must be a non-negative int, got {time!r}")
        ev = Event(time, self._seq, kind, name, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Optional[Event]:
        while self._heap:
            ev = heapq.heappop(self._heap)
            if not ev.cancelled:
                return ev
        return None

    def peek_time(self) -> Optional[int]:
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0].time if self._heap else None

    def __len__(self) -> int:
        return sum(1 for e in self._heap if not e.cancelled)


@dataclass
class _Build:
    device: str
    genome: Genome
    cert: Certificate
    reason: str  # "rebuild" | "mutation"
    ops: tuple[str, ...] = ()
    transfer: Optional[int] = None  # delivery that triggered a rebuild
    via: str = ""  # "transfer" | "replay" for rebuilds


class Simulation:
    def __init__(self, scenario: Scenario, seed: int):
        scenario.check()
        self.scenario = scenario
        self.seed = seed
        self.now = 0
        self.queue = EventQueue()
        rngs = RngRegistry(seed)
        self.rng_encounters = rngs.stream("encounters")
        self.rng_observe = rngs.stream("adversary.observe")
        self.rng_actions = rngs.stream("adversary.actions")
        self.rng_mutation = rngs.stream("mutation")
        self.trace = Trace(seed, scenario.name, scenario.source_hash)
        self.network = Network()
        for rid, up in sorted(scenario.regions.items()):
            self.network.add_region(rid, up)
        self.devices: dict[str, DeviceState] = {}
        for spec in scenario.devices:
            self.devices[spec.device_id] = DeviceState(
                spec.device_id, scenario.classes[spec.class_name], spec.platform, spec.region
            )
            self.network.place(spec.device_id, spec.region)
        a = scenario.adversary
        self.adversary = adv_ops.AdversaryState(
            monitored_links=a.monitor, compromise_budget=a.compromise_budget
        )
        self.lineage = Lineage()
        self.strain_origin: dict[str, tuple[str, bool]] = {}  # strain -> (region, born offline)
        self.escaped: set[str] = set()
        self.busy_until: dict[str, int] = {}
        self.building: dict[str, _Build] = {}
        self.build_queue: dict[str, list[_Build]] = {}
        self.delivered_count: dict[str, int] = {}
        self.pending_uplinks: dict[str, list[Event]] = {}
        self.transfers: dict[int, Transfer] = {}
        self._next_transfer = 0
        self.origin_package: Optional[SignedPackage] = None

    # -- helpers -----------------------------------------------------------

    def record(self, kind: str, **fields: Any) -> dict[str, Any]:
        return self.trace.append(self.now, kind, **fields)

    def schedule(self, delay_ms: int, kind: str, name: str = "", **payload: Any) -> Optional[Event]:
        t = self.now + delay_ms
        if t > self.scenario.max_time_ms:
            return None
        return self.queue.push(t, kind, name, **payload)

    def _build_package(self, dev: DeviceState, genome: Genome, cert: Certificate) -> tuple[SignedPackage, BuildReport]:
        if dev.cache is None:
            dev.cache = BuildCache()
        return full_build(
            genome,
            dev.platform,
            dev.cache,
            dev.device_class,
            dev.temperature,
            cert,
            self.scenario.base_size,
            self.scenario.pad_to,
        )

    def _cool(self, dev: DeviceState) -> None:
        elapsed = self.now - dev.thermal_clock_ms
        if elapsed > 0:
            thermal_update(dev, Fraction(elapsed, 1000))
        dev.thermal_clock_ms = self.now

    def _register_strain(self, genome: Genome, device_id: str) -> None:
        if genome.strain_id in self.lineage:
            return
        self.lineage.insert(genome, self.now, device_id)
        region = self.network.device_region[device_id]
        self.strain_origin[genome.strain_id] = (region, not self.network.region(region).internet_up)

    # -- setup -------------------------------------------------------------

    def _setup(self) -> None:
        sc = self.scenario
        for ks in sorted(sc.kill_switches, key=lambda k: k.time):
            if ks.time == 0:
                self.network.kill_switch(ks.region, ks.up)
        origin = self.devices[sc.origin]
        self._register_strain(sc.genome, origin.device_id)
        self.trace.origin_device = origin.device_id
        self.trace.origin_strain = sc.genome.strain_id
        for dev_id in [sc.origin] + [d for d in sc.initially_installed if d != sc.origin]:
            dev = self.devices[dev_id]
            pkg, _ = self._build_package(dev, sc.genome, sc.cert)
            install(dev, pkg, 0)
            if dev_id == sc.origin:
                self.origin_package = pkg
            else:
                self.trace.initial_installs.append((dev_id, sc.genome.strain_id))

        for ks in sc.kill_switches:
            if ks.time > 0:
                self.queue.push(ks.time, "KillSwitch", region=ks.region, up=ks.up)
        for mv in sc.moves:
            self.queue.push(mv.time, "Custom", "move", device=mv.device, region=mv.region)
        for act in sc.adversary.actions:
            kind = "Compromise" if act.action == "compromise" else "Custom"
            self.queue.push(act.time, kind, act.action, target=act.target)
        for enc in sc.encounters:
            self.queue.push(enc.time, "Encounter", "script", encounter=enc)
        gen = sc.generator
        if gen is not None:
            for region in gen.regions or tuple(sorted(sc.regions)):
                self._schedule_generator(region, 0)
        for dev_id in sorted(self.devices):
            if self.devices[dev_id].installed:
                self._schedule_uplinks(dev_id)

    def _schedule_generator(self, region: str, after: int) -> None:
        gen = self.scenario.generator
        gap = max(1, to_ms(self.rng_encounters.expovariate(gen.rate)))
        t = after + gap
        if t <= self.scenario.max_time_ms:
            self.queue.push(t, "Custom", "generator", region=region)

    # -- main loop ---------------------------------------------------------

    def run(self) -> Trace:
        self._setup()
        while True:
            ev = self.queue.pop()
            if ev is None or ev.time > self.scenario.max_time_ms:
                break
            if ev.time < self.now:
                raise AssertionError("causality violated: event scheduled in the past")
            self.now = ev.time
            self._dispatch(ev)
        self._finish()
        return self.trace

    def _dispatch(self, ev: Event) -> None:
        p = ev.payload
        if ev.kind == "Encounter":
            self._on_encounter(p["encounter"])
        elif ev.kind == "TransferPhase":
            getattr(self, f"_on_{ev.name}")(self.transfers[p["transfer"]])
        elif ev.kind == "BuildEnd":
            self._on_build_end(p["device"], p["pkg"], p["report"])
        elif ev.kind == "KillSwitch":
            self._on_kill_switch(p["region"], p["up"])
        elif ev.kind == "Compromise":
            self._on_compromise(p["target"])
        elif ev.kind == "Custom":
            getattr(self, f"_on_{ev.name}")(**p)
        else:  # pragma: no cover
            raise ValueError(f"unhandled event {ev}")

    # -- encounters and transfers -----------------------------------------

    def _on_generator(self, region: str) -> None:
        members = sorted(self.network.region(region).members)
        lo, hi = self.scenario.generator.window_ms
        if len(members) >= 2:
            a, b = self.rng_encounters.sample(members, 2)
            window = lo if lo == hi else self.rng_encounters.randint(lo, hi)
            self._on_encounter(Encounter(self.now, a, b, window), source="generator")
        self._schedule_generator(region, self.now)

    def _pick_direction(self, a: str, b: str) -> Optional[tuple[str, str, SignedPackage]]:
        for s, r in ((a, b), (b, a)):
            pkg = self.devices[s].active_package()
            if pkg is not None and not self.devices[r].has_content(pkg.content_hash):
                return s, r, pkg
        return None

    def _on_encounter(self, enc: Encounter, source: str = "script") -> None:
        free_at = max(self.busy_until.get(enc.a, 0), self.busy_until.get(enc.b, 0))
        if free_at > self.now:
            if source == "script" and free_at < enc.time + enc.duration_available:
                # scripted meetings wait for both devices; the window shrinks
                remaining = enc.time + enc.duration_available - free_at
                deferred = Encounter(free_at, enc.a, enc.b, remaining, enc.bridge)
                self.queue.push(free_at, "Encounter", "script", encounter=deferred)
                return
            self.record("Encounter", a=enc.a, b=enc.b, source=source, result="busy")
            return
        if not enc.bridge and not self.network.same_region(enc.a, enc.b):
            self.record("Encounter", a=enc.a, b=enc.b, source=source, result="apart")
            return
        choice = self._pick_direction(enc.a, enc.b)
        if choice is None:
            self.record("Encounter", a=enc.a, b=enc.b, source=source, result="idle")
            return
        sender, receiver, pkg = choice
        tid = self._next_transfer
        self.record(
            "Encounter", a=enc.a, b=enc.b, source=source, result="transfer", transfer=tid, bridge=enc.bridge
        )
        self.start_transfer(enc, sender, receiver, pkg)

    def start_transfer(self, enc: Encounter, sender: str, receiver: str, pkg: SignedPackage) -> Transfer:
        sc = self.scenario
        s_cls = self.devices[sender].device_class.class_name
        r_cls = self.devices[receiver].device_class.class_name
        total = transfer_duration(sc.rates, s_cls, r_cls, pkg.size_bytes)
        hs_ms = to_ms(sc.rates.handshake(s_cls, r_cls))
        tid = self._next_transfer
        self._next_transfer += 1
        tr = Transfer(tid, enc, sender, receiver, pkg, self.now, self.now + hs_ms, self.now + to_ms(total))
        self.transfers[tid] = tr
        self.record(
            "TransferPhase",
            phase="handshake_start",
            transfer=tid,
            sender=sender,
            receiver=receiver,
            sender_class=s_cls,
            receiver_class=r_cls,
            strain=pkg.strain_id,
            hash=pkg.content_hash.hex,
            size=pkg.size_bytes,
        )
        adv = self.adversary
        pol = sc.adversary
        tr.monitored = adv_ops.observe(adv, pkg, tr.link, self.rng_observe, self.now)
        if tr.monitored:
            if pol.blacklist_observed:
                self.queue.push(
                    self.now + pol.blacklist_delay_ms, "Custom", "blacklist", hash=pkg.content_hash.hex
                ) if self.now + pol.blacklist_delay_ms <= sc.max_time_ms else None
            if self.rng_actions.random() < pol.delay_probability:
                adv_ops.delay(adv, tr, pol.delay_seconds, self.now)
            if self.rng_actions.random() < pol.modify_probability:
                adv_ops.modify(adv, tr, self.now)
        self.busy_until[sender] = self.busy_until[receiver] = min(tr.end, tr.deadline)
        self.queue.push(tr.bulk_start, "TransferPhase", "bulk_start", transfer=tid)
        if tr.end <= tr.deadline:
            self.queue.push(tr.end, "TransferPhase", "bulk_end", transfer=tid)
        else:
            self.queue.push(tr.deadline, "TransferPhase", "timeout", transfer=tid)
        return tr

    def _transfer_fields(self, tr: Transfer) -> dict[str, Any]:
        return {
            "transfer": tr.transfer_id,
            "sender": tr.sender,
            "receiver": tr.receiver,
            "strain": tr.pkg.strain_id,
            "hash": tr.pkg.content_hash.hex,
        }

    def _on_bulk_start(self, tr: Transfer) -> None:
        if tr.bulk_start <= tr.deadline:
            self.record("TransferPhase", phase="bulk_start", **self._transfer_fields(tr))

    def _on_timeout(self, tr: Transfer) -> None:
        self.record(
            "TransferPhase",
            phase="end",
            outcome=TransferResult.OUT_OF_TIME.value,
            duration_ms=self.now - tr.start,
            **self._transfer_fields(tr),
        )

    def _on_bulk_end(self, tr: Transfer) -> None:
        fields = self._transfer_fields(tr)
        self.record("TransferPhase", phase="bulk_end", **fields)
        if tr.monitored:
            decision = adv_ops.block_decision(self.adversary, tr.pkg, self.now)
            if decision is adv_ops.Decision.BLOCK:
                self.record(
                    "TransferPhase", phase="end", outcome=TransferResult.BLOCKED.value,
                    duration_ms=tr.duration_ms, **fields,
                )
                if self.scenario.mutation.policy == "on_block":
                    self._mutate(tr.sender)
                return
        outcome = TransferResult.CORRUPTED_DELIVERED if tr.pkg.corrupted else TransferResult.DELIVERED
        self.record("TransferPhase", phase="end", outcome=outcome.value, duration_ms=tr.duration_ms, **fields)
        self._deliver(tr.receiver, tr.pkg, "transfer", tr.transfer_id)
        if outcome is TransferResult.DELIVERED:
            n = self.delivered_count.get(tr.sender, 0) + 1
            self.delivered_count[tr.sender] = n
            mut = self.scenario.mutation
            if mut.policy == "every_k_transfers" and n % mut.k == 0:
                self._mutate(tr.sender)
        pol = self.scenario.adversary
        if tr.monitored and pol.replay_probability and self.rng_actions.random() < pol.replay_probability:
            t = self.now + pol.replay_delay_ms
            if t <= self.scenario.max_time_ms:
                self.queue.push(t, "Custom", "replay", transfer=tr.transfer_id)

    def _on_replay(self, transfer: int) -> None:
        tr = self.transfers[transfer]
        pkg = adv_ops.replay(self.adversary, tr, self.now)
        self.record("Custom", name="replay", transfer=transfer, receiver=tr.receiver, hash=pkg.content_hash.hex)
        self._deliver(tr.receiver, pkg, "replay", transfer)

    # -- receiving, building, installing ----------------------------------

    def _deliver(self, dev_id: str, pkg: SignedPackage, source: str, tid: Optional[int]) -> None:
        dev = self.devices[dev_id]
        if not verify(pkg):
            self.record("Custom", name="verify_failed", device=dev_id, transfer=tid, hash=pkg.content_hash.hex)
            return
        compat = check_compat(pkg, dev.platform)
        if compat is CompatResult.NEEDS_REBUILD:
            if self.scenario.rebuild_on_receive:
                self._start_build(_Build(dev_id, pkg.embedded_genome, pkg.cert, "rebuild", transfer=tid, via=source))
            else:
                dev.stored.append(pkg)
                self.record("Custom", name="stored", device=dev_id, transfer=tid, strain=pkg.strain_id)
            return
        self._install(dev, pkg, source, tid)

    def _install(
        self, dev: DeviceState, pkg: SignedPackage, source: str, tid: Optional[int], via: str = ""
    ) -> InstallOutcome:
        outcome = install(dev, pkg, self.now)
        self.record(
            "Install",
            device=dev.device_id,
            strain=pkg.strain_id,
            hash=pkg.content_hash.hex,
            package=pkg.package_name,
            outcome=outcome.value,
            source=source,
            transfer=tid,
            via=via or source,
        )
        if outcome.installed:
            self._schedule_uplinks(dev.device_id, [pkg.strain_id])
        return outcome

    def _start_build(self, job: _Build) -> None:
        if job.device in self.building:
            self.build_queue.setdefault(job.device, []).append(job)
            return
        dev = self.devices[job.device]
        self._cool(dev)
        pkg, report = self._build_package(dev, job.genome, job.cert)
        self.building[job.device] = job
        self.record(
            "BuildStart",
            device=job.device,
            strain=job.genome.strain_id,
            reason=job.reason,
            transfer=job.transfer,
            temperature=str(dev.temperature),
        )
        self.queue.push(
            self.now + to_ms(report.total_seconds), "BuildEnd", device=job.device, pkg=pkg, report=report
        )

    def _on_build_end(self, dev_id: str, pkg: SignedPackage, report: BuildReport) -> None:
        dev = self.devices[dev_id]
        job = self.building.pop(dev_id)
        self._cool(dev)
        heat(dev)
        self.record(
            "BuildEnd",
            device=dev_id,
            strain=pkg.strain_id,
            reason=job.reason,
            build_ms=to_ms(report.total_seconds),
            cache_hits=report.cache_hits,
            cache_misses=report.cache_misses,
            throttled=report.multiplier != 1,
        )
        if job.reason == "mutation":
            self._register_strain(job.genome, dev_id)
            self.record(
                "Mutation", device=dev_id, parent=job.genome.parent_strain, strain=job.genome.strain_id,
                generation=job.genome.generation, ops=list(job.ops),
            )
        self._install(dev, pkg, "self_compile", job.transfer, job.via or job.reason)
        queued = self.build_queue.get(dev_id)
        if queued:
            self._start_build(queued.pop(0))

    def _mutate(self, dev_id: str) -> None:
        if dev_id in self.building or self.build_queue.get(dev_id):
            return  # one rebuild at a time; the pending one will carry the change
        pkg = self.devices[dev_id].active_package()
        if pkg is None or pkg.embedded_genome is None:
            return
        genome = pkg.embedded_genome
        ops = random_ops(genome, self.scenario.mutation.ops, self.rng_mutation)
        child = mutate(genome, ops, self.rng_mutation)
        self._start_build(_Build(dev_id, child, pkg.cert, "mutation", tuple(str(o) for o in ops)))

    # -- regions, uplinks, escape -----------------------------------------

    def _schedule_uplinks(self, dev_id: str, strains: Optional[list[str]] = None) -> None:
        if not self.network.uplink_check(dev_id):
            return
        if strains is None:
            strains = sorted({e.package.strain_id for e in self.devices[dev_id].installed.values()})
        for strain in strains:
            ev = self.schedule(self.scenario.uplink_delay_ms, "Custom", "uplink", device=dev_id, strain=strain)
            if ev is not None:
                self.pending_uplinks.setdefault(self.network.device_region[dev_id], []).append(ev)

    def _on_uplink(self, device: str, strain: str) -> None:
        if not self.network.uplink_check(device) or strain in self.escaped:
            return
        origin = self.strain_origin.get(strain)
        if origin is None:
            return
        origin_region, born_offline = origin
        region = self.network.device_region[device]
        if born_offline and region != origin_region:
            self.escaped.add(strain)
            self.record("Escape", strain=strain, device=device, region=region, origin_region=origin_region)

    def _on_kill_switch(self, region: str, up: bool) -> None:
        self.network.kill_switch(region, up)
        cancelled = 0
        if not up:
            for ev in self.pending_uplinks.pop(region, []):
                if not ev.cancelled and ev.time >= self.now:
                    ev.cancelled = True
                    cancelled += 1
        self.record("KillSwitch", region=region, up=up, cancelled_uplinks=cancelled)
        if up:
            for dev_id in sorted(self.network.region(region).members):
                if self.devices[dev_id].installed:
                    self._schedule_uplinks(dev_id)

    def _on_move(self, device: str, region: str) -> None:
        old = self.network.device_region[device]
        self.network.place(device, region)
        self.devices[device].region = region
        self.record("Custom", name="move", device=device, region=region, from_region=old)
        if self.devices[device].installed:
            self._schedule_uplinks(device)

    # -- adversary scripting -----------------------------------------------

    def _on_blacklist(self, hash: str) -> None:
        from .hashing import ContentHash

        adv_ops.blacklist_hash(self.adversary, ContentHash.from_hex(hash), self.now, "observed")
        self.record("Custom", name="blacklist", entry="hash", value=hash)

    def _on_blacklist_initial(self, target: str) -> None:
        h = self.origin_package.content_hash
        adv_ops.blacklist_hash(self.adversary, h, self.now, "initial strain")
        self.record("Custom", name="blacklist", entry="hash", value=h.hex)

    def _on_blacklist_hash(self, target: str) -> None:
        from .hashing import ContentHash

        adv_ops.blacklist_hash(self.adversary, ContentHash.from_hex(target), self.now)
        self.record("Custom", name="blacklist", entry="hash", value=target)

    def _on_blacklist_cert(self, target: str) -> None:
        adv_ops.blacklist_cert(self.adversary, target, self.now)
        self.record("Custom", name="blacklist", entry="cert", value=target)

    def _on_compromise(self, target: str) -> None:
        dev = self.devices[target]
        try:
            revealed = adv_ops.compromise(self.adversary, dev, self.now)
        except adv_ops.BudgetExhausted:
            self.record("Compromise", device=target, result="budget_exhausted")
            return
        self.record(
            "Compromise", device=target, result="ok",
            hashes=sorted(h.hex for h in revealed.package_hashes), certs=sorted(revealed.cert_ids),
        )
        policy = self.scenario.adversary.blacklist_revealed
        if policy in ("hashes", "both"):
            for h in sorted(revealed.package_hashes):
                adv_ops.blacklist_hash(self.adversary, h, self.now, "compromise")
                self.record("Custom", name="blacklist", entry="hash", value=h.hex)
        if policy in ("certs", "both"):
            for c in sorted(revealed.cert_ids):
                adv_ops.blacklist_cert(self.adversary, c, self.now, "compromise")
                self.record("Custom", name="blacklist", entry="cert", value=c)

    # -- wrap up -------------------------------------------------------------

    def _finish(self) -> None:
        tr = self.trace
        tr.end_time = self.now
        tr.lineage = self.lineage
        for dev_id in sorted(self.devices):
            dev = self.devices[dev_id]
            tr.devices.append(
                {
                    "device": dev_id,
                    "class": dev.device_class.class_name,
                    "platform": str(dev.platform),
                    "region": self.network.device_region[dev_id],
                    "temperature": str(dev.temperature),
                    "compromised": dev.compromised,
                    "installed": [
                        {
                            "package": name,
                            "strain": e.package.strain_id,
                            "hash": e.package.content_hash.hex,
                            "cert": e.package.cert.cert_id,
                            "since": e.install_time,
                        }
                        for name, e in sorted(dev.installed.items())
                    ],
                    "stored": len(dev.stored),
                }
            )
            if dev.cache is not None:
                tr.caches[dev_id] = {
                    "hits": dev.cache.hits,
                    "misses": dev.cache.misses,
                    "entries": len(dev.cache.entries),
                }
        adv = self.adversary
        tr.adversary = {
            "hash_blacklist": sorted(h.hex for h in adv.hash_blacklist),
            "cert_blacklist": sorted(adv.cert_blacklist),
            "observed": len(adv.observed),
            "actions": len(adv.actions_log),
            "compromise_budget_left": adv.compromise_budget,
        }


def run(scenario: Scenario, seed: int = 0) -> Trace:
    """Run ``scenario`` to its stop condition and return the trace."""
    return Simulation(scenario, seed).run()
