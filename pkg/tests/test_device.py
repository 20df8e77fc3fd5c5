from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from viralapp.buildchain import BuildCache, full_build
from viralapp.device import CompatResult, InstallOutcome, check_compat, heat, install, self_compile, thermal_update
from viralapp.model import DEBUG_CERT, Certificate, DeviceState, PlatformSpec
from viralapp.presets import device_class

from helpers import ref_genome

BUILD_PLAT = PlatformSpec(21, "armv7")
# platform on which a package built for BUILD_PLAT is runnable / needs rebuild / unsupported
TARGETS = {
    CompatResult.RUNNABLE_AS_IS: PlatformSpec(22, "armv7"),
    CompatResult.NEEDS_REBUILD: PlatformSpec(25, "arm64"),
    CompatResult.UNSUPPORTED: PlatformSpec(15, "x86"),
}


def package(name="org.example.ref", cert=DEBUG_CERT, display="App"):
    g = ref_genome(package_name=name, display_name=display, min_api_level=19)
    pkg, _ = full_build(g, BUILD_PLAT, BuildCache(), device_class("nexus_6"), cert=cert)
    return pkg


def expected_outcome(compat, name_match, cert_match):
    if compat is not CompatResult.RUNNABLE_AS_IS:
        return InstallOutcome.INCOMPATIBLE
    if not name_match:
        return InstallOutcome.SIDE_BY_SIDE
    return InstallOutcome.UPDATED if cert_match else InstallOutcome.REJECTED


def test_compat_targets_are_what_they_claim():
    for compat, plat in TARGETS.items():
        assert check_compat(package(), plat) is compat


@pytest.mark.parametrize(
    "compat,name_match,cert_match",
    list(itertools.product(TARGETS, (True, False), (True, False))),
)
def test_install_matrix(compat, name_match, cert_match):
    plat = TARGETS[compat]
    dev = DeviceState("d", device_class("nexus_5"), plat, "r")
    # what is already on the device was built for this platform
    existing, _ = full_build(
        ref_genome(min_api_level=19), plat, BuildCache(), device_class("nexus_5"), cert=Certificate.create("owner")
    )
    install(dev, existing, 0)
    before = dict(dev.installed)
    cert = Certificate.create("owner") if cert_match else Certificate.create("stranger")
    name = existing.package_name if name_match else "org.example.other"
    incoming = package(name=name, cert=cert, display="New")
    outcome = install(dev, incoming, 5)
    assert outcome is expected_outcome(compat, name_match, cert_match)
    if outcome.installed:
        assert dev.installed[name].package == incoming
    else:
        assert dev.installed == before


def test_rejected_leaves_state_untouched():
    dev = DeviceState("d", device_class("nexus_5"), BUILD_PLAT, "r")
    install(dev, package(cert=Certificate.create("one")))
    snapshot = dict(dev.installed)
    assert install(dev, package(cert=Certificate.create("two"), display="B")) is InstallOutcome.REJECTED
    assert dev.installed == snapshot


def test_thermal_throttle_and_cooldown():
    cls = device_class("nexus_5")
    t = cls.thermal
    dev = DeviceState("d", cls, BUILD_PLAT, "r")
    genome = ref_genome()
    self_compile(dev, genome, DEBUG_CERT)  # warm the cache
    dev.temperature = Fraction(0)
    base = full_build(genome, BUILD_PLAT, dev.cache, cls)[1].total_seconds
    threshold_builds = -(-t.throttle_threshold // t.heat_per_build)
    times = []
    for _ in range(threshold_builds + 3):
        times.append(self_compile(dev, genome, DEBUG_CERT)[1].total_seconds)
    assert times[:threshold_builds] == [base] * threshold_builds
    assert times[threshold_builds:] == [base * t.throttle_factor] * 3
    thermal_update(dev, t.throttle_threshold / t.cool_rate)
    assert self_compile(dev, genome, DEBUG_CERT)[1].total_seconds == base


def test_temperature_never_negative_and_capped():
    cls = device_class("nexus_5")
    dev = DeviceState("d", cls, BUILD_PLAT, "r")
    thermal_update(dev, 10_000)
    assert dev.temperature == 0
    for _ in range(50):
        heat(dev)
    assert dev.temperature == cls.thermal.max_temperature
