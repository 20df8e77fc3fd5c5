"""Frozen reference values. Change only with a deliberate format bump."""

# Beam seconds per (sender class, receiver class) for a 30.1 MB package,
# typed in by hand, independent of the CSV that ships with the package.
BEAM_SECONDS = {
    ("galaxy_nexus", "galaxy_nexus"): 227,
    ("galaxy_nexus", "nexus_5"): 221,
    ("galaxy_nexus", "nexus_6"): 209,
    ("galaxy_nexus", "nexus_10"): 419,
    ("nexus_5", "galaxy_nexus"): 211,
    ("nexus_5", "nexus_6"): 149,
    ("nexus_5", "nexus_10"): 360,
    ("nexus_6", "galaxy_nexus"): 198,
    ("nexus_6", "nexus_5"): 147,
    ("nexus_6", "nexus_6"): 139,
    ("nexus_6", "nexus_10"): 357,
    ("nexus_10", "galaxy_nexus"): 409,
    ("nexus_10", "nexus_5"): 400,
    ("nexus_10", "nexus_6"): 359,
}
BLANK_CELLS = {("nexus_5", "nexus_5"), ("nexus_10", "nexus_10")}
BEAM_PACKAGE_BYTES = 30_100_000
BEAM_TOLERANCE_S = 1

# Genome("org.example.ref", sources={"Main": "class Main {}"},
#        resources={"layout/main": b"<x/>"}, libraries={"support": b"lib"})
REF_STRAIN_ID = "121c64f75e13a007b9f4248f634596d43ed388c72d6d96ba719b38e511ac60f9"
# that genome built on a nexus_5 class, armv7 api 21, debug cert, cold cache
REF_PACKAGE_HASH = "0afdbbdd114674074a3a37b0d541fc18fc8e1995ddbe88d1c97f1a74bc031e69"
REF_BUILD_SECONDS = 70

# canonical_hash({"b": 1, "a": [1, 2, "x"]})
REF_MAP_HASH = "3792453a2b5cc3601923a5d211aa66b861acdcc7d2fff74a9455c3daf7a5e136"

# sha256 of the fig1_escape fixture trace, seed 0
FIG1_SEED0_TRACE_SHA256 = "b78c6194989c9c420ffab0235ff4ac1c2f8ddae09b7968c8d31a46bfd04ba609"

# acceptance thresholds
FAST_RUNTIME_S = 1.0
MIN_CACHE_GENOMES = 100
INSTALL_COMBINATIONS = 12
MIN_OFFLINE_DEVICES = 5
EVASION_DEVICES = 20
MIN_FUZZ_EVENTS = 10_000
DETERMINISM_SEEDS = 10
COMPLETENESS_DEVICES = 15
COMPLETENESS_SEEDS = 10
BINOMIAL_SIGMAS = 3
