"""Scenario definitions and the ``.scenario`` file format (TOML).

See docs/scenario_format.md for the grammar. Loading collects every
problem it finds and raises them together as a ValidationError.
"""

from __future__ import annotations

import hashlib
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .adversary import MonitorPolicy
from .buildchain import DEFAULT_BASE_SIZE, STAGES
from .errors import ConstraintError, ParseError, ValidationError, ViralAppError
from .hashing import canonical_hash
from .model import (
    DEBUG_CERT,
    Certificate,
    DeviceClass,
    Genome,
    PlatformSpec,
    SourceUnit,
    ThermalParams,
    as_fraction,
    to_ms,
)
from .mutation import MutationKind
from .netmodel import (
    APK_SIZE_BYTES,
    IMPUTATION_RULES,
    Encounter,
    RateMatrix,
    builtin_table_path,
    calibrate_rates,
    load_rate_table,
)
from .presets import PRESET_NAMES, device_class as preset_class

MUTATION_POLICIES = ("none", "every_k_transfers", "on_block")
ADVERSARY_ACTIONS = ("blacklist_initial", "blacklist_hash", "blacklist_cert", "compromise")
REVEAL_POLICIES = ("none", "hashes", "certs", "both")
DEFAULT_MAX_TIME_S = 7 * 24 * 3600
DEFAULT_PLATFORM = PlatformSpec(21, "armv7")


@dataclass(frozen=True)
class DeviceSpec:
    device_id: str
    class_name: str
    region: str
    platform: PlatformSpec = DEFAULT_PLATFORM


@dataclass(frozen=True)
class GeneratorSpec:
    """Random pairing: each region draws encounters as a Poisson process."""

    rate: float  # encounters per second, per region
    window_ms: tuple[int, int]
    regions: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class KillSwitchSpec:
    time: int
    region: str
    up: bool


@dataclass(frozen=True)
class MoveSpec:
    time: int
    device: str
    region: str


@dataclass(frozen=True)
class MutationPolicy:
    policy: str = "none"
    k: int = 1
    ops: tuple[MutationKind, ...] = (MutationKind.RENAME_DISPLAY, MutationKind.EDIT_SOURCE)


@dataclass(frozen=True)
class AdversaryAction:
    time: int
    action: str
    target: str = ""


@dataclass(frozen=True)
class AdversaryPolicy:
    monitor: MonitorPolicy = MonitorPolicy()
    compromise_budget: int = 0
    blacklist_observed: bool = False
    blacklist_delay_ms: int = 0
    delay_probability: float = 0.0
    delay_seconds: float = 0.0
    modify_probability: float = 0.0
    replay_probability: float = 0.0
    replay_delay_ms: int = 60_000
    blacklist_revealed: str = "none"
    actions: tuple[AdversaryAction, ...] = ()


@dataclass
class Scenario:
    name: str
    classes: dict[str, DeviceClass]
    devices: list[DeviceSpec]
    regions: dict[str, bool]  # region id -> internet up at t=0
    rates: RateMatrix
    genome: Genome
    origin: str
    initially_installed: list[str] = field(default_factory=list)
    cert: Certificate = DEBUG_CERT
    base_size: int = DEFAULT_BASE_SIZE
    pad_to: Optional[int] = None
    encounters: list[Encounter] = field(default_factory=list)
    generator: Optional[GeneratorSpec] = None
    kill_switches: list[KillSwitchSpec] = field(default_factory=list)
    moves: list[MoveSpec] = field(default_factory=list)
    mutation: MutationPolicy = MutationPolicy()
    adversary: AdversaryPolicy = AdversaryPolicy()
    rebuild_on_receive: bool = True
    uplink_delay_ms: int = 0
    max_time_ms: int = DEFAULT_MAX_TIME_S * 1000
    source_hash: str = ""

    def __post_init__(self) -> None:
        if not self.source_hash:
            self.source_hash = self.fingerprint()

    def fingerprint(self) -> str:
        """Content hash of the scenario for programmatically built scenarios."""
        return canonical_hash(
            self.name,
            sorted(d.device_id for d in self.devices),
            self.genome.strain_id,
            repr(self.encounters),
            repr(self.generator),
            repr(self.kill_switches),
            repr(self.moves),
            repr(self.mutation),
            repr(self.adversary),
            sorted((f"{s}>{r}", str(v)) for (s, r), v in self.rates.rates.items()),
            self.max_time_ms,
        ).hex

    def device(self, device_id: str) -> DeviceSpec:
        for d in self.devices:
            if d.device_id == device_id:
                return d
        raise KeyError(device_id)

    def required_pairs(self) -> list[tuple[str, tuple[str, str]]]:
        """(location, class pair) for every pair a transfer could use."""
        cls = {d.device_id: d.class_name for d in self.devices}
        out = []
        for i, enc in enumerate(self.encounters):
            if enc.a in cls and enc.b in cls:
                loc = f"encounters.script[{i}]"
                out.append((loc, (cls[enc.a], cls[enc.b])))
                out.append((loc, (cls[enc.b], cls[enc.a])))
        if self.generator is not None:
            members: dict[str, set[str]] = {}
            for d in self.devices:
                members.setdefault(d.region, set()).add(d.device_id)
            for mv in self.moves:
                members.setdefault(mv.region, set()).add(mv.device)
            regions = self.generator.regions or tuple(sorted(members))
            for region in regions:
                ids = sorted(i for i in members.get(region, ()) if i in cls)
                for a in ids:
                    for b in ids:
                        if a != b:
                            out.append((f"encounters.generator[{region}]", (cls[a], cls[b])))
        return out

    def validate(self) -> list[str]:
        errors: list[str] = []
        ids = [d.device_id for d in self.devices]
        seen: set[str] = set()
        for i, d in enumerate(self.devices):
            if d.device_id in seen:
                errors.append(f"devices[{i}]: duplicate device id {d.device_id!r}")
            seen.add(d.device_id)
            if d.class_name not in self.classes:
                errors.append(f"devices[{i}] ({d.device_id}): unknown class {d.class_name!r}")
            if d.region not in self.regions:
                errors.append(f"devices[{i}] ({d.device_id}): unknown region {d.region!r}")
        if len(ids) < 1:
            errors.append("devices: at least one device is required")
        if self.origin not in seen:
            errors.append(f"genome.origin: unknown device {self.origin!r}")
        for d in self.initially_installed:
            if d not in seen:
                errors.append(f"genome.initially_installed: unknown device {d!r}")
        for i, enc in enumerate(self.encounters):
            for end in (enc.a, enc.b):
                if end not in seen:
                    errors.append(f"encounters.script[{i}]: unknown device {end!r}")
            if enc.a in seen and enc.b in seen and not enc.bridge:
                ra, rb = self.device(enc.a).region, self.device(enc.b).region
                moved = {m.device for m in self.moves}
                if ra != rb and not ({enc.a, enc.b} & moved):
                    errors.append(
                        f"encounters.script[{i}]: {enc.a} ({ra}) and {enc.b} ({rb}) are in different "
                        "regions; mark the encounter bridge = true"
                    )
        if self.generator is not None:
            if self.generator.rate <= 0:
                errors.append("encounters.generator.rate: must be positive")
            lo, hi = self.generator.window_ms
            if lo <= 0 or hi < lo:
                errors.append("encounters.generator.window: must be positive and lo <= hi")
            for r in self.generator.regions or ():
                if r not in self.regions:
                    errors.append(f"encounters.generator.regions: unknown region {r!r}")
        for i, ks in enumerate(self.kill_switches):
            if ks.region not in self.regions:
                errors.append(f"kill_switch[{i}]: unknown region {ks.region!r}")
        for i, mv in enumerate(self.moves):
            if mv.device not in seen:
                errors.append(f"moves[{i}]: unknown device {mv.device!r}")
            if mv.region not in self.regions:
                errors.append(f"moves[{i}]: unknown region {mv.region!r}")
        for loc, (s, r) in self.required_pairs():
            if s in self.classes and r in self.classes and (s, r) not in self.rates.rates:
                errors.append(f"{loc}: UnknownPair {s} -> {r} (no transfer rate)")
        if self.mutation.policy not in MUTATION_POLICIES:
            errors.append(f"mutation.policy: unknown policy {self.mutation.policy!r}")
        if self.mutation.k < 1:
            errors.append("mutation.k: must be >= 1")
        adv = self.adversary
        for name in ("delay_probability", "modify_probability", "replay_probability"):
            p = getattr(adv, name)
            if not 0 <= p <= 1:
                errors.append(f"adversary.{name}: must lie in [0, 1]")
        if adv.blacklist_revealed not in REVEAL_POLICIES:
            errors.append(f"adversary.blacklist_revealed: unknown policy {adv.blacklist_revealed!r}")
        for i, act in enumerate(adv.actions):
            if act.action not in ADVERSARY_ACTIONS:
                errors.append(f"adversary.actions[{i}]: unknown action {act.action!r}")
            elif act.action == "compromise" and act.target not in seen:
                errors.append(f"adversary.actions[{i}]: unknown device {act.target!r}")
        if self.max_time_ms <= 0:
            errors.append("scenario.max_time: must be positive")
        return errors

    def check(self) -> Scenario:
        errors = self.validate()
        if errors:
            raise ValidationError(errors)
        return self


# ---------------------------------------------------------------------------
# file format


def filler(name: str, size: int) -> bytes:
    """Deterministic stand-in content of ``size`` bytes."""
    if size <= 0:
        return b""
    pattern = f"{name}\n".encode("utf-8")
    reps = size // len(pattern) + 1
    return (pattern * reps)[:size]


def _content(name: str, spec: Any, loc: str, errors: list[str]) -> bytes:
    if isinstance(spec, str):
        return spec.encode("utf-8")
    if isinstance(spec, dict):
        if "text" in spec:
            return str(spec["text"]).encode("utf-8")
        if "hex" in spec:
            try:
                return bytes.fromhex(spec["hex"])
            except ValueError:
                errors.append(f"{loc}: invalid hex content")
                return b""
        if "size" in spec:
            size = spec["size"]
            if not isinstance(size, int) or size < 0:
                errors.append(f"{loc}: size must be a non-negative integer")
                return b""
            return filler(name, size)
    errors.append(f"{loc}: content must be a string or a table with text, hex or size")
    return b""


class _Reader:
    """Pulls typed values out of the parsed document and records problems."""

    def __init__(self) -> None:
        self.errors: list[str] = []

    def get(self, table: dict, key: str, loc: str, kind, default=None, required=False):
        if key not in table:
            if required:
                self.errors.append(f"{loc}.{key}: missing")
            return default
        value = table[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is not None and not isinstance(value, kind):
            self.errors.append(f"{loc}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
            return default
        return value

    def seconds(self, table: dict, key: str, loc: str, default=None, required=False) -> Optional[int]:
        """Read seconds, return whole milliseconds."""
        fallback = None if default is None else to_ms(default)
        value = self.get(table, key, loc, (int, float), None, required)
        if value is None:
            return fallback
        if value < 0:
            self.errors.append(f"{loc}.{key}: must be non-negative")
            return fallback
        return to_ms(value)


def _parse_classes(doc: dict, r: _Reader) -> dict[str, DeviceClass]:
    section = doc.get("classes")
    if section is None:
        return {name: preset_class(name) for name in PRESET_NAMES}
    classes = {}
    for name, spec in section.items():
        loc = f"classes.{name}"
        if not isinstance(spec, dict):
            r.errors.append(f"{loc}: expected a table")
            continue
        preset = spec.get("preset", name if name in PRESET_NAMES else None)
        if preset is not None and preset not in PRESET_NAMES:
            r.errors.append(f"{loc}.preset: unknown preset {preset!r}")
            continue
        base = preset_class(preset) if preset else None
        costs = dict(base.base_stage_costs) if base else {}
        for stage, value in (spec.get("stage_costs") or {}).items():
            if stage not in STAGES:
                r.errors.append(f"{loc}.stage_costs.{stage}: unknown stage")
                continue
            costs[stage] = value
        thermal = {}
        for key in ("heat_per_build", "cool_rate", "throttle_threshold", "throttle_factor", "max_temperature"):
            if key in spec:
                thermal[key] = spec[key]
            elif base is not None:
                thermal[key] = getattr(base.thermal, key)
        try:
            if base is None and any(
                k not in thermal for k in ("heat_per_build", "cool_rate", "throttle_threshold", "throttle_factor")
            ):
                raise ConstraintError("thermal parameters missing and no preset to inherit from")
            if base is not None and "max_temperature" not in spec and "throttle_threshold" in spec:
                thermal["max_temperature"] = None
            for key, value in thermal.items():
                if isinstance(value, float):
                    thermal[key] = as_fraction(value)
            classes[name] = DeviceClass(name, costs, ThermalParams(**thermal))
        except (ConstraintError, ValueError, TypeError) as exc:
            r.errors.append(f"{loc}: {exc}")
    return classes


def _parse_devices(doc: dict, r: _Reader) -> list[DeviceSpec]:
    devices = []
    for i, spec in enumerate(doc.get("devices", [])):
        loc = f"devices[{i}]"
        cls = r.get(spec, "class", loc, str, required=True)
        region = r.get(spec, "region", loc, str, required=True)
        api = r.get(spec, "api_level", loc, int, DEFAULT_PLATFORM.api_level)
        arch = r.get(spec, "cpu_arch", loc, str, DEFAULT_PLATFORM.cpu_arch)
        try:
            platform = PlatformSpec(api, arch)
        except ConstraintError as exc:
            r.errors.append(f"{loc}: {exc}")
            continue
        count = r.get(spec, "count", loc, int, None)
        if count is None:
            dev_id = r.get(spec, "id", loc, str, required=True)
            if dev_id is not None and cls is not None and region is not None:
                devices.append(DeviceSpec(dev_id, cls, region, platform))
            continue
        prefix = r.get(spec, "id_prefix", loc, str, required=True)
        if count < 1:
            r.errors.append(f"{loc}.count: must be >= 1")
            continue
        if prefix is None or cls is None or region is None:
            continue
        width = len(str(count - 1))
        for k in range(count):
            devices.append(DeviceSpec(f"{prefix}{k:0{width}d}", cls, region, platform))
    return devices


def _parse_genome(doc: dict, r: _Reader) -> tuple[Optional[Genome], str, list[str], Certificate]:
    g = doc.get("genome")
    if not isinstance(g, dict):
        r.errors.append("genome: missing section")
        return None, "", [], DEBUG_CERT
    loc = "genome"
    origin = r.get(g, "origin", loc, str, "", required=True)
    initially = r.get(g, "initially_installed", loc, list, [])
    cert_id = r.get(g, "cert", loc, str, DEBUG_CERT.cert_id)
    cert = DEBUG_CERT if cert_id == DEBUG_CERT.cert_id else Certificate.create(cert_id)

    sources = {}
    for name, spec in (g.get("sources") or {}).items():
        refs = spec.get("refs", []) if isinstance(spec, dict) else []
        sources[name] = SourceUnit(_content(name, spec, f"{loc}.sources.{name}", r.errors), tuple(refs))
    maps = {}
    for key in ("resources", "assets", "libraries", "native_libs"):
        maps[key] = {
            name: _content(name, spec, f"{loc}.{key}.{name}", r.errors) for name, spec in (g.get(key) or {}).items()
        }
    try:
        genome = Genome(
            package_name=r.get(g, "package_name", loc, str, "", required=True),
            display_name=r.get(g, "display_name", loc, str, "App"),
            icon_id=r.get(g, "icon_id", loc, str, "ic_launcher"),
            manifest={k: str(v) for k, v in (g.get("manifest") or {}).items()},
            sources=sources,
            traits=frozenset(r.get(g, "traits", loc, list, [])),
            carries_build_tools=r.get(g, "carries_build_tools", loc, bool, False),
            carries_libraries_source=r.get(g, "carries_libraries_source", loc, bool, False),
            min_api_level=r.get(g, "min_api_level", loc, int, 1),
            api_window=r.get(g, "api_window", loc, int, 2),
            innocuousness=r.get(g, "innocuousness", loc, float, 0.0),
            **maps,
        )
    except (ViralAppError, TypeError) as exc:
        r.errors.append(f"{loc}: {exc}")
        genome = None
    return genome, origin, [str(x) for x in initially], cert


def _parse_rates(doc: dict, r: _Reader, base_dir: Path) -> RateMatrix:
    spec = doc.get("rates", {})
    loc = "rates"
    table_ref = r.get(spec, "table", loc, str, "builtin:table1")
    table = {}
    try:
        if table_ref == "builtin:table1":
            table = load_rate_table(builtin_table_path())
        elif table_ref != "none":
            table = load_rate_table(str(base_dir / table_ref))
    except (OSError, ValueError) as exc:
        r.errors.append(f"{loc}.table: {exc}")
    for i, cell in enumerate(spec.get("cells", [])):
        cloc = f"{loc}.cells[{i}]"
        s = r.get(cell, "sender", cloc, str, required=True)
        rc = r.get(cell, "receiver", cloc, str, required=True)
        secs = r.get(cell, "seconds", cloc, (int, float), required=True)
        if s and rc and secs is not None:
            table[(s, rc)] = as_fraction(secs)
    size = r.get(spec, "size_bytes", loc, int, APK_SIZE_BYTES)
    hs = r.get(spec, "handshake_seconds", loc, (int, float), 0)
    imputation = r.get(spec, "imputation", loc, str, "geometric_mean")
    if imputation not in IMPUTATION_RULES:
        r.errors.append(f"{loc}.imputation: unknown rule {imputation!r}")
        imputation = "none"
    try:
        return calibrate_rates(table, size, as_fraction(hs), imputation)
    except ViralAppError as exc:
        r.errors.append(f"{loc}: {exc}")
        return RateMatrix({})


def _parse_encounters(doc: dict, r: _Reader) -> tuple[list[Encounter], Optional[GeneratorSpec]]:
    spec = doc.get("encounters", {})
    script = []
    for i, e in enumerate(spec.get("script", [])):
        loc = f"encounters.script[{i}]"
        t = r.seconds(e, "time", loc, required=True)
        a = r.get(e, "a", loc, str, required=True)
        b = r.get(e, "b", loc, str, required=True)
        window = r.seconds(e, "window", loc, required=True)
        bridge = r.get(e, "bridge", loc, bool, False)
        if None in (t, a, b, window):
            continue
        try:
            script.append(Encounter(t, a, b, window, bridge))
        except ValueError as exc:
            r.errors.append(f"{loc}: {exc}")
    gen = None
    g = spec.get("generator")
    if g is not None:
        loc = "encounters.generator"
        rate = r.get(g, "rate", loc, float, required=True)
        window = g.get("window")
        if isinstance(window, (int, float)):
            window_ms = (to_ms(window), to_ms(window))
        elif isinstance(window, list) and len(window) == 2:
            window_ms = (to_ms(window[0]), to_ms(window[1]))
        else:
            r.errors.append(f"{loc}.window: expected seconds or [low, high]")
            window_ms = (1, 1)
        regions = r.get(g, "regions", loc, list, None)
        if rate is not None:
            gen = GeneratorSpec(rate, window_ms, tuple(regions) if regions else None)
    return script, gen


def _parse_adversary(doc: dict, r: _Reader) -> AdversaryPolicy:
    spec = doc.get("adversary", {})
    loc = "adversary"
    monitor = spec.get("monitor", "internet_only")
    if monitor == "internet_only":
        policy = MonitorPolicy()
    elif isinstance(monitor, (int, float)) and not isinstance(monitor, bool) and 0 <= monitor <= 1:
        policy = MonitorPolicy.probability(float(monitor))
    else:
        r.errors.append(f"{loc}.monitor: expected 'internet_only' or a probability in [0, 1]")
        policy = MonitorPolicy()
    budget = r.get(spec, "compromise_budget", loc, int, 0)
    if budget < 0:
        r.errors.append(f"{loc}.compromise_budget: must be non-negative")
        budget = 0
    actions = []
    for i, a in enumerate(spec.get("actions", [])):
        aloc = f"{loc}.actions[{i}]"
        t = r.seconds(a, "time", aloc, required=True)
        kind = r.get(a, "action", aloc, str, required=True)
        target = r.get(a, "target", aloc, str, "")
        if t is not None and kind is not None:
            actions.append(AdversaryAction(t, kind, target))
    return AdversaryPolicy(
        monitor=policy,
        compromise_budget=budget,
        blacklist_observed=r.get(spec, "blacklist_observed", loc, bool, False),
        blacklist_delay_ms=r.seconds(spec, "blacklist_delay", loc, 0),
        delay_probability=r.get(spec, "delay_probability", loc, float, 0.0),
        delay_seconds=r.get(spec, "delay_seconds", loc, float, 0.0),
        modify_probability=r.get(spec, "modify_probability", loc, float, 0.0),
        replay_probability=r.get(spec, "replay_probability", loc, float, 0.0),
        replay_delay_ms=r.seconds(spec, "replay_delay", loc, 60),
        blacklist_revealed=r.get(spec, "blacklist_revealed", loc, str, "none"),
        actions=tuple(actions),
    )


def scenario_from_dict(doc: dict, base_dir: Union[str, Path] = ".", source_hash: str = "") -> Scenario:
    r = _Reader()
    base_dir = Path(base_dir)
    meta = doc.get("scenario", {})
    name = r.get(meta, "name", "scenario", str, "scenario")
    max_time = r.seconds(meta, "max_time", "scenario", DEFAULT_MAX_TIME_S)
    rebuild = r.get(meta, "rebuild_on_receive", "scenario", bool, True)
    uplink_delay = r.seconds(meta, "uplink_delay", "scenario", 0)

    build = doc.get("build", {})
    base_size = r.get(build, "base_package_bytes", "build", int, DEFAULT_BASE_SIZE)
    pad_to = r.get(build, "target_package_bytes", "build", int, None)

    classes = _parse_classes(doc, r)
    devices = _parse_devices(doc, r)
    regions = {}
    for i, reg in enumerate(doc.get("regions", [])):
        rid = r.get(reg, "id", f"regions[{i}]", str, required=True)
        if rid is None:
            continue
        if rid in regions:
            r.errors.append(f"regions[{i}]: duplicate region {rid!r}")
        regions[rid] = r.get(reg, "internet_up", f"regions[{i}]", bool, True)
    genome, origin, initially, cert = _parse_genome(doc, r)
    rates = _parse_rates(doc, r, base_dir)
    script, gen = _parse_encounters(doc, r)

    kills = []
    for i, k in enumerate(doc.get("kill_switch", [])):
        loc = f"kill_switch[{i}]"
        t = r.seconds(k, "time", loc, required=True)
        region = r.get(k, "region", loc, str, required=True)
        up = r.get(k, "up", loc, bool, False)
        if t is not None and region is not None:
            kills.append(KillSwitchSpec(t, region, up))
    moves = []
    for i, m in enumerate(doc.get("moves", [])):
        loc = f"moves[{i}]"
        t = r.seconds(m, "time", loc, required=True)
        dev = r.get(m, "device", loc, str, required=True)
        region = r.get(m, "region", loc, str, required=True)
        if None not in (t, dev, region):
            moves.append(MoveSpec(t, dev, region))

    mspec = doc.get("mutation", {})
    ops = []
    for op in r.get(mspec, "ops", "mutation", list, [k.value for k in MutationPolicy().ops]):
        try:
            ops.append(MutationKind(op))
        except ValueError:
            r.errors.append(f"mutation.ops: unknown op {op!r}")
    mutation = MutationPolicy(
        r.get(mspec, "policy", "mutation", str, "none"), r.get(mspec, "k", "mutation", int, 1), tuple(ops)
    )
    adversary = _parse_adversary(doc, r)

    if r.errors or genome is None:
        raise ValidationError(r.errors or ["genome: invalid"])
    scenario = Scenario(
        name=name,
        classes=classes,
        devices=devices,
        regions=regions,
        rates=rates,
        genome=genome,
        origin=origin,
        initially_installed=initially,
        cert=cert,
        base_size=base_size,
        pad_to=pad_to,
        encounters=script,
        generator=gen,
        kill_switches=kills,
        moves=moves,
        mutation=mutation,
        adversary=adversary,
        rebuild_on_receive=rebuild,
        uplink_delay_ms=uplink_delay,
        max_time_ms=max_time,
        source_hash=source_hash,
    )
    return scenario.check()


_LINE_COL = re.compile(r"\(at line (\d+), column (\d+)\)")


def parse_scenario(text: str, base_dir: Union[str, Path] = ".") -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        m = _LINE_COL.search(msg)
        if m:
            raise ParseError(_LINE_COL.sub("", msg).strip(), int(m.group(1)), int(m.group(2))) from None
        raise ParseError(msg) from None
    source_hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return scenario_from_dict(doc, base_dir, source_hash)


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent)


def fixture_path(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. ``table1.scenario``)."""
    from importlib import resources

    return Path(str(resources.files("viralapp") / "data" / name))
