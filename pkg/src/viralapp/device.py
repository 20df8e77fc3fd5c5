"""Install/update rules, platform compatibility, self-compilation and heat."""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Optional

from .buildchain import DEFAULT_BASE_SIZE, BuildCache, BuildReport, full_build
from .model import (
    Certificate,
    DeviceState,
    Genome,
    InstalledEntry,
    Number,
    PlatformSpec,
    SignedPackage,
    as_fraction,
)

DEFAULT_API_WINDOW = 2


class InstallOutcome(str, enum.Enum):
    UPDATED = "Updated"
    SIDE_BY_SIDE = "SideBySide"
    REJECTED = "Rejected"
    INCOMPATIBLE = "Incompatible"

    @property
    def installed(self) -> bool:
        return self in (InstallOutcome.UPDATED, InstallOutcome.SIDE_BY_SIDE)


class CompatResult(str, enum.Enum):
    RUNNABLE_AS_IS = "RunnableAsIs"
    NEEDS_REBUILD = "NeedsRebuild"
    UNSUPPORTED = "Unsupported"


def check_compat(pkg: SignedPackage, platform: PlatformSpec) -> CompatResult:
    """Can ``pkg`` run on ``platform`` as shipped, after a rebuild, or not at all?

    A package runs from its build api level up to ``api_window`` levels
    newer, on the same cpu arch. Anything else needs the embedded genome,
    and the genome's own minimum api level must be met.
    """
    genome = pkg.embedded_genome
    window = genome.api_window if genome is not None else DEFAULT_API_WINDOW
    built = pkg.built_for
    if built.cpu_arch == platform.cpu_arch and built.api_level <= platform.api_level <= built.api_level + window:
        return CompatResult.RUNNABLE_AS_IS
    if genome is not None and platform.api_level >= genome.min_api_level:
        return CompatResult.NEEDS_REBUILD
    return CompatResult.UNSUPPORTED


def install(dev: DeviceState, pkg: SignedPackage, now: int = 0) -> InstallOutcome:
    """Apply the platform's install rules to ``dev``.

    Only packages runnable as-is can be installed; the caller decides
    whether to self-compile a NeedsRebuild package first. Name and signer
    decide the rest: same name and cert updates in place, same name with
    another cert is refused, a new name installs next to what is there.
    """
    if check_compat(pkg, dev.platform) is not CompatResult.RUNNABLE_AS_IS:
        return InstallOutcome.INCOMPATIBLE
    current = dev.installed.get(pkg.package_name)
    if current is None:
        dev.installed[pkg.package_name] = InstalledEntry(pkg, now)
        return InstallOutcome.SIDE_BY_SIDE
    if current.package.cert.cert_id != pkg.cert.cert_id:
        return InstallOutcome.REJECTED
    dev.installed[pkg.package_name] = InstalledEntry(pkg, now)
    return InstallOutcome.UPDATED


def throttle_multiplier(dev: DeviceState) -> Fraction:
    return dev.device_class.throttle_multiplier(dev.temperature)


def thermal_update(dev: DeviceState, elapsed: Number) -> Fraction:
    """Cool ``dev`` linearly for ``elapsed`` seconds; never below ambient."""
    elapsed = as_fraction(elapsed)
    if elapsed < 0:
        raise ValueError("elapsed must be non-negative")
    cooled = dev.temperature - dev.device_class.thermal.cool_rate * elapsed
    dev.temperature = max(Fraction(0), cooled)
    return dev.temperature


def heat(dev: DeviceState) -> Fraction:
    params = dev.device_class.thermal
    dev.temperature = min(params.max_temperature, dev.temperature + params.heat_per_build)
    return dev.temperature


def self_compile(
    dev: DeviceState,
    genome: Genome,
    cert: Certificate,
    now: int = 0,
    base_size: int = DEFAULT_BASE_SIZE,
    pad_to: Optional[int] = None,
) -> tuple[SignedPackage, BuildReport]:
    """Build ``genome`` for this device with its own cache, class costs and heat.

    The device's temperature at the start decides throttling; the build's
    heat is added once it completes (here, on return).
    """
    if dev.cache is None:
        dev.cache = BuildCache()
    pkg, report = full_build(
        genome, dev.platform, dev.cache, dev.device_class, dev.temperature, cert, base_size, pad_to
    )
    heat(dev)
    return pkg, report
