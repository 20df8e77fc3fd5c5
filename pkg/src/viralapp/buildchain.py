"""The on-device build chain: resources, sources, conversion, merge, assemble, sign.

Compilation is symbolic. Every stage combines content hashes of its inputs
instead of generating code, and declared resource references are checked so
that a malformed genome fails the same way a real build would. Durations are
exact fractions of a second.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Optional

from .errors import DuplicateName, DuplicateResource, EmptyMerge, GenomeMismatch, UnresolvedResource
from .hashing import ContentHash, canonical_hash
from .model import (
    DEBUG_CERT,
    Certificate,
    DeviceClass,
    Genome,
    PlatformSpec,
    SignedPackage,
    SourceUnit,
    _freeze_map,
    package_digest,
)

STAGES = (
    "resource_compile",
    "source_compile",
    "bytecode_convert",
    "dex_merge",
    "assemble",
    "sign",
)

DEFAULT_BASE_SIZE = 1_000_000
APP_UNIT = "classes"


@dataclass(frozen=True)
class CompiledResources:
    binary_blob_hash: ContentHash
    resource_index: Mapping[str, int]
    size_bytes: int = 0


@dataclass(frozen=True)
class BytecodeUnit:
    unit_name: str
    input_hash: ContentHash
    output_hash: ContentHash
    kind: str  # "app_source" | "library"
    size_bytes: int = 0


@dataclass(frozen=True)
class DexComponent:
    name: str
    output_hash: ContentHash
    size_bytes: int


@dataclass(frozen=True)
class DexUnit:
    merged_from: tuple[str, ...]
    output_hash: ContentHash
    components: tuple[DexComponent, ...] = ()

    @property
    def size_bytes(self) -> int:
        return sum(c.size_bytes for c in self.components)


@dataclass
class BuildCache:
    """Converted units keyed by the hash of their input bytecode."""

    entries: dict[ContentHash, DexUnit] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    @property
    def requests(self) -> int:
        return self.hits + self.misses

    @property
    def hit_ratio(self) -> float:
        return self.hits / self.requests if self.requests else 0.0


@dataclass
class BuildReport:
    stage_durations: dict[str, Fraction]
    cache_hits: int
    cache_misses: int
    multiplier: Fraction = Fraction(1)

    @property
    def total_seconds(self) -> Fraction:
        return sum(self.stage_durations.values(), Fraction(0))


@dataclass(frozen=True)
class UnsignedPackage:
    package_name: str
    resources_hash: ContentHash
    dex_hash: ContentHash
    extras_hash: ContentHash
    genome: Genome
    built_for: PlatformSpec
    size_bytes: int


def compile_resources(manifest: Any, resources: Any, assets: Any) -> CompiledResources:
    """Compile manifest and resources into one blob and a dense id index."""
    try:
        res = _freeze_map("resources", resources)
    except DuplicateName as exc:
        raise DuplicateResource(exc.name) from None
    man = _freeze_map("manifest", manifest)
    ast = _freeze_map("assets", assets)
    index = {name: i for i, name in enumerate(sorted(res), start=1)}
    blob = canonical_hash("aapt", man, res, ast)
    return CompiledResources(blob, index, sum(len(b) for b in res.values()))


def compile_sources(
    sources: Mapping[str, SourceUnit],
    resource_index: Mapping[str, int],
    libraries: Mapping[str, bytes],
) -> BytecodeUnit:
    for unit_name in sorted(sources):
        for ref in sources[unit_name].resource_refs:
            if ref not in resource_index:
                raise UnresolvedResource(ref, unit_name)
    source_bytes = {name: unit.content for name, unit in sources.items()}
    lib_hashes = sorted(canonical_hash(content).hex for content in libraries.values())
    input_hash = canonical_hash("src", source_bytes)
    output_hash = canonical_hash("ecj", source_bytes, dict(resource_index), lib_hashes)
    size = sum(len(b) for b in source_bytes.values())
    return BytecodeUnit(APP_UNIT, input_hash, output_hash, "app_source", size)


def library_unit(name: str, content: bytes) -> BytecodeUnit:
    jar = canonical_hash(content)
    return BytecodeUnit(name, jar, canonical_hash("jar", name, jar), "library", len(content))


def _dex_of(unit: BytecodeUnit) -> DexUnit:
    out = canonical_hash("dx", unit.output_hash)
    return DexUnit((unit.unit_name,), out, (DexComponent(unit.unit_name, out, unit.size_bytes),))


def convert_bytecode(unit: BytecodeUnit, cache: BuildCache) -> tuple[DexUnit, bool]:
    cached = cache.entries.get(unit.output_hash)
    if cached is not None:
        cache.hits += 1
        return cached, True
    cache.misses += 1
    dex = _dex_of(unit)
    cache.entries[unit.output_hash] = dex
    return dex, False


def merge_dex(units: Iterable[DexUnit]) -> DexUnit:
    """Merge converted units. The result depends only on the set of leaves."""
    units = list(units)
    if not units:
        raise EmptyMerge("merge_dex needs at least one unit")
    if len(units) == 1:
        return units[0]
    leaves = {(c.name, c.output_hash): c for u in units for c in u.components}
    components = tuple(leaves[k] for k in sorted(leaves, key=lambda k: (k[0], k[1].digest)))
    if len(components) == 1:
        only = components[0]
        return DexUnit((only.name,), only.output_hash, components)
    merged_from = tuple(sorted({c.name for c in components}))
    out = canonical_hash("merge", [(c.name, c.output_hash) for c in components])
    return DexUnit(merged_from, out, components)


def expected_units(genome: Genome, resource_index: Mapping[str, int]) -> list[BytecodeUnit]:
    """App source unit followed by one unit per library, in name order."""
    units = [compile_sources(genome.sources, resource_index, genome.libraries)]
    units.extend(library_unit(n, genome.libraries[n]) for n in sorted(genome.libraries))
    return units


def assemble_package(
    cr: CompiledResources,
    dex: DexUnit,
    assets: Optional[Mapping[str, bytes]],
    native_libs: Optional[Mapping[str, bytes]],
    genome: Genome,
    platform: PlatformSpec,
    base_size: int = DEFAULT_BASE_SIZE,
    pad_to: Optional[int] = None,
) -> UnsignedPackage:
    """Combine build outputs with the genome that produced them.

    ``assets``/``native_libs`` default to the genome's own. ``pad_to`` fixes
    the total package size (used to match a measured file size).
    """
    assets = genome.assets if assets is None else assets
    native_libs = genome.native_libs if native_libs is None else native_libs
    expected_cr = compile_resources(genome.manifest, genome.resources, genome.assets)
    if expected_cr.binary_blob_hash != cr.binary_blob_hash:
        raise GenomeMismatch("compiled resources were not built from this genome")
    expected = merge_dex(_dex_of(u) for u in expected_units(genome, cr.resource_index))
    if expected.output_hash != dex.output_hash:
        raise GenomeMismatch("dex lineage does not match the embedded genome")
    extras_hash = canonical_hash("extras", dict(assets), dict(native_libs))
    components = (
        cr.size_bytes
        + dex.size_bytes
        + sum(len(b) for b in assets.values())
        + sum(len(b) for b in native_libs.values())
    )
    size = base_size + components
    if pad_to is not None:
        if pad_to < components:
            raise ValueError(f"pad_to={pad_to} is smaller than the package contents ({components})")
        size = pad_to
    return UnsignedPackage(
        genome.package_name, cr.binary_blob_hash, dex.output_hash, extras_hash, genome, platform, size
    )


def sign_package(unsigned: UnsignedPackage, cert: Certificate) -> SignedPackage:
    digest = package_digest(
        unsigned.package_name,
        unsigned.resources_hash,
        unsigned.dex_hash,
        unsigned.extras_hash,
        unsigned.genome,
        unsigned.built_for,
        unsigned.size_bytes,
        cert,
    )
    return SignedPackage(
        package_name=unsigned.package_name,
        content_hash=digest,
        cert=cert,
        built_for=unsigned.built_for,
        embedded_genome=unsigned.genome,
        size_bytes=unsigned.size_bytes,
        resources_hash=unsigned.resources_hash,
        dex_hash=unsigned.dex_hash,
        extras_hash=unsigned.extras_hash,
        signature=cert.sign(digest.digest),
    )


def full_build(
    genome: Genome,
    platform: PlatformSpec,
    cache: BuildCache,
    device_class: DeviceClass,
    temperature: Fraction = Fraction(0),
    cert: Certificate = DEBUG_CERT,
    base_size: int = DEFAULT_BASE_SIZE,
    pad_to: Optional[int] = None,
) -> tuple[SignedPackage, BuildReport]:
    """Run all six stages and account their cost on ``device_class``.

    Conversion cost is split evenly over the units and charged only for
    cache misses. Every stage is scaled by the device's throttle multiplier
    at ``temperature``.
    """
    mult = device_class.throttle_multiplier(temperature)
    costs = device_class.base_stage_costs

    cr = compile_resources(genome.manifest, genome.resources, genome.assets)
    units = expected_units(genome, cr.resource_index)
    hits = misses = 0
    dexes = []
    for unit in units:
        dex, hit = convert_bytecode(unit, cache)
        dexes.append(dex)
        if hit:
            hits += 1
        else:
            misses += 1
    merged = merge_dex(dexes)
    unsigned = assemble_package(cr, merged, None, None, genome, platform, base_size, pad_to)
    pkg = sign_package(unsigned, cert)

    durations = {stage: costs[stage] * mult for stage in STAGES}
    durations["bytecode_convert"] = costs["bytecode_convert"] * misses / len(units) * mult
    return pkg, BuildReport(durations, hits, misses, mult)
