"""Default device classes for the four handsets the transfer table covers.

Build-stage costs are illustrative: only their ordering is pinned down
(the Galaxy Nexus is the slowest builder) and only the
Nexus 5 throttles when hot.
"""

from __future__ import annotations

from fractions import Fraction

from .buildchain import STAGES
from .model import DeviceClass, ThermalParams
from .netmodel import GALAXY_NEXUS, NEXUS_5, NEXUS_6, NEXUS_10

# seconds per stage, in STAGES order
_STAGE_COSTS = {
    GALAXY_NEXUS: (14, 70, 96, 22, 16, 9),
    NEXUS_5: (4, 21, 30, 7, 5, 3),
    NEXUS_6: (3, 17, 25, 6, 4, 3),
    NEXUS_10: (5, 23, 33, 8, 6, 4),
}

# heat per build, cool rate (deg/s), threshold, throttle factor
_THERMAL = {
    GALAXY_NEXUS: (1, Fraction(1, 10), 1000, 1),
    NEXUS_5: (10, Fraction(1, 20), 30, Fraction(3, 2)),
    NEXUS_6: (1, Fraction(1, 10), 1000, 1),
    NEXUS_10: (1, Fraction(1, 10), 1000, 1),
}


def device_class(name: str) -> DeviceClass:
    costs = dict(zip(STAGES, (Fraction(c) for c in _STAGE_COSTS[name])))
    heat, cool, threshold, factor = _THERMAL[name]
    return DeviceClass(name, costs, ThermalParams(heat, cool, threshold, factor))


PRESET_NAMES = tuple(_STAGE_COSTS)


def default_classes() -> dict[str, DeviceClass]:
    return {name: device_class(name) for name in PRESET_NAMES}
