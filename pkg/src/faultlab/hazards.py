"""Ground-truth hazard checkers with a first-occurrence registry."""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import HazardParams
from .plant import WorldState

H1, H2, H3 = "H1", "H2", "H3"
HAZARD_KINDS = (H1, H2, H3)
# hazard -> accident class it leads to
ACCIDENTS = {H1: "A1", H2: "A2", H3: "A3"}


@dataclass(frozen=True, slots=True)
class HazardEvent:
    kind: str
    t: float


def check_h1(world: WorldState, p: HazardParams = HazardParams()) -> bool:
    return world.lead_present and (world.lead_pos - world.host_pos) <= p.d_min


def is_collision(world: WorldState) -> bool:
    return world.lead_present and (world.lead_pos - world.host_pos) <= 0.0


def check_h2(world: WorldState, p: HazardParams = HazardParams()) -> bool:
    if world.host_speed >= p.v_stop or world.t <= p.warmup:
        return False
    return (not world.lead_present) or (world.lead_pos - world.host_pos) > p.d_far


def check_h3(world: WorldState, p: HazardParams = HazardParams()) -> bool:
    return abs(world.lat_offset) > world.lane_half_width - p.vehicle_half_width


@dataclass
class HazardMonitor:
    params: HazardParams = HazardParams()
    first: dict = field(default_factory=dict)
    collision_t: float | None = None

    def check(self, world: WorldState) -> list[HazardEvent]:
        """Record first occurrences; returns the events new at this tick."""
        new = []
        for kind, fn in ((H1, check_h1), (H2, check_h2), (H3, check_h3)):
            if kind not in self.first and fn(world, self.params):
                self.first[kind] = world.t
                new.append(HazardEvent(kind, world.t))
        if self.collision_t is None and is_collision(world):
            self.collision_t = world.t
        return new

    @property
    def events(self) -> list[HazardEvent]:
        return sorted((HazardEvent(k, t) for k, t in self.first.items()), key=lambda e: (e.t, e.kind))
