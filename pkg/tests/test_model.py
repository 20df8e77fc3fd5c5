from __future__ import annotations

import dataclasses
from fractions import Fraction

import pytest

from viralapp.errors import ConstraintError, DuplicateName
from viralapp.model import (
    DEBUG_CERT,
    Certificate,
    DeviceClass,
    Genome,
    PlatformSpec,
    ThermalParams,
    to_ms,
    verify,
)
from viralapp.buildchain import BuildCache, full_build
from viralapp.presets import device_class

from helpers import ref_genome

PLAT = PlatformSpec(21, "armv7")


def built(genome=None, cert=DEBUG_CERT):
    pkg, _ = full_build(genome or ref_genome(), PLAT, BuildCache(), device_class("nexus_6"), cert=cert)
    return pkg


def test_duplicate_names_rejected():
    with pytest.raises(DuplicateName):
        Genome("p", resources=[("a", b"1"), ("a", b"2")])


def test_bad_platform_rejected():
    with pytest.raises(ConstraintError):
        PlatformSpec(21, "mips")
    with pytest.raises(ConstraintError):
        PlatformSpec(0, "armv7")


def test_genome_requires_package_name():
    with pytest.raises(ConstraintError):
        Genome("")


def test_signed_package_verifies():
    assert verify(built())


def test_tampered_fields_fail_verification():
    pkg = built()
    assert not verify(dataclasses.replace(pkg, size_bytes=pkg.size_bytes + 1))
    assert not verify(dataclasses.replace(pkg, corrupted=True))
    assert not verify(dataclasses.replace(pkg, package_name="other"))
    other = ref_genome(display_name="Other")
    assert not verify(dataclasses.replace(pkg, embedded_genome=other))


def test_signature_from_wrong_key_fails():
    pkg = built()
    impostor = Certificate(DEBUG_CERT.cert_id, True, b"\x00" * 32)
    forged = dataclasses.replace(pkg, cert=impostor, signature=impostor.sign(pkg.content_hash.digest))
    assert not verify(forged)


def test_verify_against_expected_cert():
    pkg = built(cert=Certificate.create("release"))
    assert verify(pkg, Certificate.create("release"))
    assert not verify(pkg, DEBUG_CERT)


def test_public_cert_has_no_secret():
    assert Certificate.create("x").public().secret == b""


def test_thermal_params_validated():
    with pytest.raises(ConstraintError):
        ThermalParams(1, -1, 10, 2)
    with pytest.raises(ConstraintError):
        ThermalParams(1, 1, 10, Fraction(1, 2))


def test_device_class_needs_every_stage():
    with pytest.raises(ConstraintError):
        DeviceClass("x", {"sign": 1}, ThermalParams(1, 1, 10, 1))


def test_to_ms_rounds_up():
    assert to_ms(Fraction(1, 3)) == 334
    assert to_ms(2) == 2000
