"""Domain types shared by every module."""

from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, NamedTuple, Optional, Union

from .errors import ConstraintError, DuplicateName
from .hashing import ContentHash, canonical_hash

CPU_ARCHS = frozenset({"armv7", "arm64", "x86", "x86_64"})

Number = Union[int, float, str, Fraction]


def as_fraction(value: Number) -> Fraction:
    """Exact conversion; floats go through their shortest repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def _freeze_map(field_name: str, items: Any, convert=None) -> dict:
    """Build a dict from a mapping or pair sequence, rejecting duplicate names."""
    pairs = items.items() if isinstance(items, Mapping) else items
    out: dict = {}
    for name, value in pairs or ():
        if not isinstance(name, str) or not name:
            raise ConstraintError(f"{field_name}: names must be non-empty strings")
        if name in out:
            raise DuplicateName(field_name, name)
        out[name] = convert(value) if convert else value
    return out


@dataclass(frozen=True)
class PlatformSpec:
    api_level: int
    cpu_arch: str

    def __post_init__(self) -> None:
        if not isinstance(self.api_level, int) or self.api_level < 1:
            raise ConstraintError(f"api_level must be a positive integer, got {self.api_level!r}")
        if self.cpu_arch not in CPU_ARCHS:
            raise ConstraintError(f"unknown cpu_arch {self.cpu_arch!r}")

    def __str__(self) -> str:
        return f"{self.cpu_arch}/api{self.api_level}"


def _verification_key(cert_id: str) -> bytes:
    # Stands in for the public key bound to cert_id. Signing with an HMAC
    # keyed the same way keeps the model symmetric; only holders of a
    # Certificate built by ``create`` can produce matching signatures.
    return hashlib.sha256(b"viralapp-key\0" + cert_id.encode("utf-8")).digest()


@dataclass(frozen=True)
class Certificate:
    """Signing identity. Only ``cert_id`` and ``is_debug`` are public."""

    __canonical_exclude__ = ("secret",)

    cert_id: str
    is_debug: bool = False
    secret: bytes = field(default=b"", repr=False, compare=False)

    @classmethod
    def create(cls, cert_id: str, is_debug: bool = False) -> Certificate:
        return cls(cert_id, is_debug, _verification_key(cert_id))

    def sign(self, digest: bytes) -> bytes:
        if not self.secret:
            raise ConstraintError(f"certificate {self.cert_id!r} carries no private key")
        return hmac.new(self.secret, digest, hashlib.sha256).digest()

    def public(self) -> Certificate:
        """The certificate as seen by anyone who does not hold the key."""
        return Certificate(self.cert_id, self.is_debug)


DEBUG_CERT = Certificate.create("androiddebugkey", is_debug=True)


@dataclass(frozen=True)
class SourceUnit:
    content: bytes
    resource_refs: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "resource_refs", tuple(self.resource_refs))


def _as_source(value: Any) -> SourceUnit:
    if isinstance(value, SourceUnit):
        return value
    if isinstance(value, (bytes, bytearray)):
        return SourceUnit(bytes(value))
    if isinstance(value, str):
        return SourceUnit(value.encode("utf-8"))
    raise TypeError(f"cannot use {type(value).__name__} as a source unit")


def _as_bytes(value: Any) -> bytes:
    if isinstance(value, str):
        return value.encode("utf-8")
    return bytes(value)


@dataclass(frozen=True, eq=True)
class Genome:
    """The app's description of itself; embedded in every package it builds.

    Map-valued fields accept a mapping or a sequence of ``(name, value)``
    pairs; a repeated name raises :class:`DuplicateName`. ``strain_id`` is
    always derived from content and cannot be passed in.
    """

    __canonical_exclude__ = ("strain_id", "parent_strain")

    package_name: str
    display_name: str = "App"
    icon_id: str = "ic_launcher"
    manifest: Mapping[str, str] = field(default_factory=dict)
    sources: Mapping[str, SourceUnit] = field(default_factory=dict)
    resources: Mapping[str, bytes] = field(default_factory=dict)
    assets: Mapping[str, bytes] = field(default_factory=dict)
    libraries: Mapping[str, bytes] = field(default_factory=dict)
    native_libs: Mapping[str, bytes] = field(default_factory=dict)
    traits: frozenset[str] = frozenset()
    carries_build_tools: bool = False
    carries_libraries_source: bool = False
    generation: int = 0
    parent_strain: Optional[str] = None
    min_api_level: int = 1
    api_window: int = 2
    innocuousness: float = 0.0
    strain_id: str = field(init=False, default="")

    def __post_init__(self) -> None:
        if not self.package_name:
            raise ConstraintError("package_name must be non-empty")
        if self.generation < 0:
            raise ConstraintError("generation must be non-negative")
        if self.api_window < 0 or self.min_api_level < 1:
            raise ConstraintError("bad api range")
        set_ = object.__setattr__
        set_(self, "manifest", _freeze_map("manifest", self.manifest, str))
        set_(self, "sources", _freeze_map("sources", self.sources, _as_source))
        for name in ("resources", "assets", "libraries", "native_libs"):
            set_(self, name, _freeze_map(name, getattr(self, name), _as_bytes))
        set_(self, "traits", frozenset(self.traits))
        set_(self, "strain_id", derive_strain_id(self))

    def __hash__(self) -> int:
        return hash(self.strain_id)

    def content_size(self) -> int:
        total = sum(len(s.content) for s in self.sources.values())
        for m in (self.resources, self.assets, self.libraries, self.native_libs):
            total += sum(len(b) for b in m.values())
        return total


def derive_strain_id(genome: Genome) -> str:
    return canonical_hash(genome).hex


def package_digest(
    package_name: str,
    resources_hash: ContentHash,
    dex_hash: ContentHash,
    extras_hash: ContentHash,
    genome: Optional[Genome],
    built_for: PlatformSpec,
    size_bytes: int,
    cert: Certificate,
) -> ContentHash:
    """Hash of a package's full canonical form, including the signer identity.

    The genome enters through its strain id, which is itself the hash of the
    genome's canonical content.
    """
    return canonical_hash(
        "apk",
        package_name,
        resources_hash,
        dex_hash,
        extras_hash,
        genome.strain_id if genome is not None else None,
        built_for,
        size_bytes,
        cert.public(),
    )


@dataclass(frozen=True)
class SignedPackage:
    package_name: str
    content_hash: ContentHash
    cert: Certificate
    built_for: PlatformSpec
    embedded_genome: Optional[Genome]
    size_bytes: int
    resources_hash: ContentHash
    dex_hash: ContentHash
    extras_hash: ContentHash
    signature: bytes = field(repr=False, default=b"")
    corrupted: bool = False

    @property
    def strain_id(self) -> Optional[str]:
        return self.embedded_genome.strain_id if self.embedded_genome else None


def verify(pkg: SignedPackage, cert: Optional[Certificate] = None) -> bool:
    """Check integrity and signature of ``pkg``.

    With ``cert`` given, the package must also be signed by that identity.
    The check recomputes the content hash from the package fields, so edits
    to any field that are not re-signed with the private key fail too. The
    key material carried inside ``pkg.cert`` is never trusted.
    """
    if pkg.corrupted:
        return False
    if cert is not None and cert.cert_id != pkg.cert.cert_id:
        return False
    expected = package_digest(
        pkg.package_name,
        pkg.resources_hash,
        pkg.dex_hash,
        pkg.extras_hash,
        pkg.embedded_genome,
        pkg.built_for,
        pkg.size_bytes,
        pkg.cert,
    )
    if expected != pkg.content_hash:
        return False
    key = _verification_key(pkg.cert.cert_id)
    return hmac.compare_digest(hmac.new(key, expected.digest, hashlib.sha256).digest(), pkg.signature)


@dataclass(frozen=True)
class ThermalParams:
    heat_per_build: Fraction
    cool_rate: Fraction
    throttle_threshold: Fraction
    throttle_factor: Fraction
    max_temperature: Optional[Fraction] = None

    def __post_init__(self) -> None:
        for name in ("heat_per_build", "cool_rate", "throttle_threshold", "throttle_factor"):
            value = as_fraction(getattr(self, name))
            object.__setattr__(self, name, value)
            if value <= 0:
                raise ConstraintError(f"{name} must be strictly positive, got {value}")
        if self.throttle_factor < 1:
            raise ConstraintError("throttle_factor must be >= 1")
        cap = self.throttle_threshold if self.max_temperature is None else as_fraction(self.max_temperature)
        if cap <= 0:
            raise ConstraintError("max_temperature must be strictly positive")
        object.__setattr__(self, "max_temperature", cap)


@dataclass(frozen=True)
class DeviceClass:
    class_name: str
    base_stage_costs: Mapping[str, Fraction]
    thermal: ThermalParams

    def __post_init__(self) -> None:
        from .buildchain import STAGES

        costs = {k: as_fraction(v) for k, v in dict(self.base_stage_costs).items()}
        missing = [s for s in STAGES if s not in costs]
        if missing:
            raise ConstraintError(f"class {self.class_name!r} lacks stage costs for {missing}")
        unknown = sorted(set(costs) - set(STAGES))
        if unknown:
            raise ConstraintError(f"class {self.class_name!r} has unknown stages {unknown}")
        for stage, cost in costs.items():
            if cost <= 0:
                raise ConstraintError(f"stage cost {stage} must be strictly positive")
        object.__setattr__(self, "base_stage_costs", {s: costs[s] for s in STAGES})

    def throttle_multiplier(self, temperature: Fraction) -> Fraction:
        if temperature >= self.thermal.throttle_threshold:
            return self.thermal.throttle_factor
        return Fraction(1)

    @property
    def base_build_seconds(self) -> Fraction:
        return sum(self.base_stage_costs.values(), Fraction(0))


class InstalledEntry(NamedTuple):
    package: SignedPackage
    install_time: int  # ms


@dataclass
class DeviceState:
    device_id: str
    device_class: DeviceClass
    platform: PlatformSpec
    region: str
    installed: dict[str, InstalledEntry] = field(default_factory=dict)
    temperature: Fraction = Fraction(0)
    compromised: bool = False
    cache: Any = None  # BuildCache, created on first self-compile
    stored: list[SignedPackage] = field(default_factory=list)
    thermal_clock_ms: int = 0

    def has_content(self, content_hash: ContentHash) -> bool:
        if any(e.package.content_hash == content_hash for e in self.installed.values()):
            return True
        return any(p.content_hash == content_hash for p in self.stored)

    def active_package(self) -> Optional[SignedPackage]:
        """The most recently installed package, which is what gets beamed."""
        if not self.installed:
            return None
        entry = max(self.installed.items(), key=lambda kv: (kv[1].install_time, kv[0]))[1]
        return entry.package

    @property
    def infected(self) -> bool:
        return bool(self.installed)


def to_ms(seconds: Number) -> int:
    """Seconds to whole simulation milliseconds, rounding up."""
    return math.ceil(as_fraction(seconds) * 1000)
