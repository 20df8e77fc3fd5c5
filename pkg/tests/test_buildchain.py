from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from viralapp.buildchain import (
    STAGES,
    BuildCache,
    BytecodeUnit,
    compile_resources,
    compile_sources,
    convert_bytecode,
    full_build,
    library_unit,
    merge_dex,
)
from viralapp.errors import EmptyMerge, UnresolvedResource
from viralapp.model import Genome, PlatformSpec, SourceUnit, verify
from viralapp.presets import default_classes, device_class

from expected import REF_BUILD_SECONDS, REF_PACKAGE_HASH
from helpers import ref_genome

PLAT = PlatformSpec(21, "armv7")

genomes = st.builds(
    lambda name, src, libs, res: Genome(
        name, sources={"Main": src}, libraries=libs, resources=res
    ),
    st.sampled_from(["org.a", "org.b", "org.c"]),
    st.binary(min_size=1, max_size=40),
    st.dictionaries(st.sampled_from(["l1", "l2", "l3"]), st.binary(max_size=10), max_size=3),
    st.dictionaries(st.sampled_from(["r/a", "r/b"]), st.binary(max_size=10), max_size=2),
)


def test_frozen_reference_build():
    pkg, report = full_build(ref_genome(), PLAT, BuildCache(), device_class("nexus_5"))
    assert pkg.content_hash.hex == REF_PACKAGE_HASH
    assert report.total_seconds == REF_BUILD_SECONDS
    assert list(report.stage_durations) == list(STAGES)


def test_resource_index_is_dense_and_sorted():
    cr = compile_resources({}, {"b": b"1", "a": b"2", "c": b""}, {})
    assert cr.resource_index == {"a": 1, "b": 2, "c": 3}


def test_unresolved_resource_named():
    g = Genome("p", sources={"Main": SourceUnit(b"x", ("missing",))})
    cr = compile_resources({}, {}, {})
    with pytest.raises(UnresolvedResource) as exc:
        compile_sources(g.sources, cr.resource_index, g.libraries)
    assert "missing" in str(exc.value)


def test_bytecode_conversion_is_cached_by_input():
    cache = BuildCache()
    unit = library_unit("lib", b"bytes")
    first, hit1 = convert_bytecode(unit, cache)
    second, hit2 = convert_bytecode(unit, cache)
    assert (hit1, hit2) == (False, True)
    assert first == second
    assert cache.hit_ratio == 0.5


def test_merge_rules():
    with pytest.raises(EmptyMerge):
        merge_dex([])
    cache = BuildCache()
    a, _ = convert_bytecode(library_unit("a", b"1"), cache)
    b, _ = convert_bytecode(library_unit("b", b"2"), cache)
    assert merge_dex([a]) == a
    assert merge_dex([a, b]) == merge_dex([b, a])
    assert merge_dex([merge_dex([a, b]), a]) == merge_dex([a, b])


def test_changing_a_library_changes_only_that_unit():
    cache = BuildCache()
    g1 = ref_genome(libraries={"one": b"1", "two": b"2"})
    g2 = ref_genome(libraries={"one": b"1", "two": b"22"})
    full_build(g1, PLAT, cache, device_class("nexus_6"))
    _, report = full_build(g2, PLAT, cache, device_class("nexus_6"))
    # library "one" is reused; "two" and the app unit compiled against it are not
    assert (report.cache_hits, report.cache_misses) == (1, 2)


def test_galaxy_nexus_is_slowest_builder():
    totals = {name: c.base_build_seconds for name, c in default_classes().items()}
    slowest = max(totals, key=totals.get)
    assert slowest == "galaxy_nexus"
    assert all(totals["galaxy_nexus"] > t for n, t in totals.items() if n != "galaxy_nexus")


def test_build_is_signed_and_embeds_genome():
    g = ref_genome()
    pkg, _ = full_build(g, PLAT, BuildCache(), device_class("nexus_10"))
    assert verify(pkg)
    assert pkg.embedded_genome == g
    assert pkg.strain_id == g.strain_id


def test_pad_to_fixes_size():
    pkg, _ = full_build(ref_genome(), PLAT, BuildCache(), device_class("nexus_6"), pad_to=30_100_000)
    assert pkg.size_bytes == 30_100_000


@settings(max_examples=120, deadline=None)
@given(genomes)
def test_warm_build_hits_everything_and_is_faster(genome):
    cache = BuildCache()
    cls = device_class("nexus_6")
    cold, r1 = full_build(genome, PLAT, cache, cls)
    warm, r2 = full_build(genome, PLAT, cache, cls)
    assert r2.cache_misses == 0 and r2.cache_hits == r1.cache_misses
    assert r2.total_seconds < r1.total_seconds
    assert cold.content_hash == warm.content_hash


def test_unit_kinds():
    assert isinstance(library_unit("x", b""), BytecodeUnit)
    assert library_unit("x", b"").kind == "library"
