from __future__ import annotations

import math
import random

import pytest

from viralapp import adversary as adv_ops
from viralapp.adversary import AdversaryState, Decision, MonitorPolicy
from viralapp.buildchain import BuildCache, full_build
from viralapp.device import InstallOutcome, install
from viralapp.errors import BudgetExhausted
from viralapp.model import DEBUG_CERT, Certificate, DeviceState, PlatformSpec, verify
from viralapp.mutation import MutationKind, MutationOp, mutate, resign
from viralapp.netmodel import Encounter, Transfer
from viralapp.presets import device_class

from expected import BINOMIAL_SIGMAS
from helpers import ref_genome

PLAT = PlatformSpec(21, "armv7")
N6 = device_class("nexus_6")


def build(genome=None, cert=DEBUG_CERT):
    return full_build(genome or ref_genome(), PLAT, BuildCache(), N6, cert=cert)[0]


def transfer(pkg, end=419_000, window=500_000):
    return Transfer(0, Encounter(0, "a", "b", window), "a", "b", pkg, 0, 0, end)


def test_internet_only_ignores_proximity():
    adv = AdversaryState()
    assert not adv_ops.observe(adv, build(), "proximity", random.Random(0))
    assert adv.observed == set()


def test_p_one_sees_everything():
    adv = AdversaryState(monitored_links=MonitorPolicy.probability(1))
    rng = random.Random(0)
    assert all(adv_ops.observe(adv, build(), "proximity", rng) for _ in range(20))


def test_p_half_binomial_three_sigma():
    adv = AdversaryState(monitored_links=MonitorPolicy.probability(0.5))
    rng = random.Random(1234)
    pkg = build()
    n = 1000
    seen = sum(adv_ops.observe(adv, pkg, "proximity", rng) for _ in range(n))
    assert abs(seen - n * 0.5) <= BINOMIAL_SIGMAS * math.sqrt(n * 0.25)


def test_observation_leaves_transfer_alone():
    pkg = build()
    tr = transfer(pkg)
    adv_ops.observe(AdversaryState(monitored_links=MonitorPolicy.probability(1)), tr.pkg, "proximity", random.Random(0))
    assert tr.pkg is pkg and tr.end == 419_000


def test_block_by_hash_and_mutation_evades():
    pkg = build()
    adv = AdversaryState()
    adv_ops.blacklist_hash(adv, pkg.content_hash)
    assert adv_ops.block_decision(adv, pkg) is Decision.BLOCK
    child = mutate(pkg.embedded_genome, [MutationOp(MutationKind.RENAME_DISPLAY, "calc")])
    assert adv_ops.block_decision(adv, build(child)) is Decision.ALLOW


def test_resign_with_blacklisted_cert_blocked():
    adv = AdversaryState()
    adv_ops.blacklist_cert(adv, "bad")
    pkg = resign(build(), Certificate.create("bad"), N6)
    assert adv_ops.block_decision(adv, pkg) is Decision.BLOCK


def test_delay_past_window_is_out_of_time():
    tr = transfer(build())
    adv_ops.delay(AdversaryState(), tr, 100)
    assert tr.end == 519_000 > tr.deadline


def test_modified_package_never_verifies():
    tr = transfer(build())
    tampered = adv_ops.modify(AdversaryState(), tr)
    assert not verify(tampered)


def test_replay_is_idempotent_install():
    pkg = build()
    adv = AdversaryState(monitored_links=MonitorPolicy.probability(1))
    tr = transfer(pkg)
    adv_ops.observe(adv, pkg, "proximity", random.Random(0))
    dev = DeviceState("b", N6, PLAT, "r")
    install(dev, pkg, 0)
    before = {k: v.package for k, v in dev.installed.items()}
    again = adv_ops.replay(adv, tr)
    assert install(dev, again, 10) is InstallOutcome.UPDATED
    assert {k: v.package for k, v in dev.installed.items()} == before


def test_replay_needs_capture():
    with pytest.raises(KeyError):
        adv_ops.replay(AdversaryState(), transfer(build()))


def test_compromise_budget():
    dev = DeviceState("d", N6, PLAT, "r")
    install(dev, build(cert=Certificate.create("c1")))
    with pytest.raises(BudgetExhausted):
        adv_ops.compromise(AdversaryState(), dev)
    adv = AdversaryState(compromise_budget=1)
    revealed = adv_ops.compromise(adv, dev)
    assert adv.compromise_budget == 0 and dev.compromised
    assert revealed.cert_ids == {"c1"}
    with pytest.raises(BudgetExhausted):
        adv_ops.compromise(adv, dev)


def test_forgery_never_verifies():
    adv = AdversaryState()
    rng = random.Random(5)
    for cert_id in ("androiddebugkey", "c1", "victim"):
        forged = adv_ops.attempt_forgery(adv, ref_genome(), cert_id, PLAT, rng)
        assert not verify(forged)
        assert not verify(forged, Certificate.create(cert_id))


def test_audit_catches_unjustified_block():
    adv = AdversaryState()
    adv.log(5, "block", hash="ab", matched="hash", entry="ab")
    assert adv_ops.audit_blocking(adv)
    adv2 = AdversaryState()
    adv_ops.blacklist_hash(adv2, build().content_hash, 1)
    adv_ops.block_decision(adv2, build(), 2)
    assert adv_ops.audit_blocking(adv2) == []
