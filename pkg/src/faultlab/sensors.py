"""Controller-visible sensor readings derived from ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SensorParams
from .plant import WorldState


@dataclass(frozen=True, slots=True)
class RadarTrack:
    d_rel: float
    v_rel: float  # lead speed - host speed


@dataclass(frozen=True, slots=True)
class RadarReading:
    valid: bool
    tracks: tuple[RadarTrack, ...] = ()

    def nearest(self) -> RadarTrack | None:
        if len(self.tracks) < 2:
            return self.tracks[0] if self.tracks else None
        return min(self.tracks, key=lambda tr: tr.d_rel)


@dataclass(frozen=True, slots=True)
class VisionReading:
    valid: bool
    left_lane_x: float = 0.0
    right_lane_x: float = 0.0
    path_poly: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    d_rel_vision: float | None = None


@dataclass(frozen=True, slots=True)
class CarReading:
    speed: float
    steer_angle: float
    cruise_set: float


@dataclass(frozen=True, slots=True)
class SensorFrame:
    radar: RadarReading
    vision: VisionReading
    car: CarReading


INVALID_VISION = VisionReading(valid=False)


def sense_radar(world: WorldState, sigma: float = 0.0,
                rng: np.random.Generator | None = None) -> RadarReading:
    if not world.lead_present:
        return RadarReading(True, ())
    d = world.lead_pos - world.host_pos
    v = world.lead_speed - world.host_speed
    if sigma > 0.0:
        if rng is None:
            raise ValueError("radar noise requires an rng")
        d += float(rng.normal(0.0, sigma))
    return RadarReading(True, (RadarTrack(d, v),))


def lane_positions(world: WorldState, lookahead: float) -> tuple[float, float]:
    """Marker positions relative to the camera axis at ``lookahead`` metres."""
    shift = -world.lat_offset + lookahead * math.tan(world.heading)
    return -world.lane_half_width + shift, world.lane_half_width + shift


def sense_vision(world: WorldState, params: SensorParams = SensorParams(),
                 rng: np.random.Generator | None = None) -> VisionReading:
    """Analytic vision: exact lane geometry plus radar-truth distance."""
    left, right = lane_positions(world, params.lookahead)
    d_vis = None
    if world.lead_present:
        d_vis = world.lead_pos - world.host_pos
        if params.vision_drel_sigma > 0.0:
            if rng is None:
                raise ValueError("vision noise requires an rng")
            d_vis += float(rng.normal(0.0, params.vision_drel_sigma))
    poly = (-world.lat_offset, math.tan(world.heading), 0.0, 0.0)
    return VisionReading(True, left, right, poly, d_vis)


def sense_car(world: WorldState, params: SensorParams = SensorParams()) -> CarReading:
    return CarReading(world.host_speed, world.steer_angle, params.cruise_set)


class VisionHold:
    """Zero-order hold between vision ticks."""

    def __init__(self, period_ticks: int = 5):
        if period_ticks < 1:
            raise ValueError("vision period must be >= 1 tick")
        self.period = period_ticks
        self.reading: VisionReading | None = None

    def is_vision_tick(self, tick: int) -> bool:
        return tick % self.period == 0

    def update(self, reading: VisionReading) -> VisionReading:
        self.reading = reading
        return reading
