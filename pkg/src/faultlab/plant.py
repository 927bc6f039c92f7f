"""Ground-truth dynamics of the host and the scripted lead vehicle.

Sign conventions: ``lat_offset`` is positive to the right of the lane
center, ``heading`` and ``steer_angle`` are positive to the left.  A positive
steer torque therefore turns the car left and reduces a positive offset.
``steer_angle`` is the steering-wheel angle; the road-wheel angle is
``steer_angle / steer_ratio``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .config import ConfigError, LeadProfile, PlantParams


class NonFiniteStateError(ArithmeticError):
    """A non-finite command or state reached the plant."""


@dataclass(frozen=True, slots=True)
class WorldState:
    t: float
    host_pos: float
    host_speed: float
    host_accel: float
    lat_offset: float
    heading: float
    steer_angle: float
    lead_present: bool
    lead_pos: float
    lead_speed: float
    lane_half_width: float

    @property
    def d_rel(self) -> float:
        return self.lead_pos - self.host_pos


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def _host(state: WorldState, accel_cmd: float, steer_torque: float, dt: float,
          params: PlantParams) -> tuple[float, float, float, float, float, float]:
    """(accel, speed, steer, heading, lat, pos) after one tick."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not (math.isfinite(accel_cmd) and math.isfinite(steer_torque)):
        raise NonFiniteStateError(f"non-finite command accel={accel_cmd} torque={steer_torque}")
    if abs(steer_torque) > 1.0:
        raise ValueError(f"steer torque {steer_torque} outside [-1, 1]")

    accel = _clamp(accel_cmd, params.a_min, params.a_max)
    speed = max(0.0, state.host_speed + accel * dt)
    steer = _clamp(state.steer_angle + params.steer_rate_gain * steer_torque * dt,
                   -params.steer_limit, params.steer_limit)
    heading = state.heading + speed * math.tan(steer / params.steer_ratio) / params.wheelbase * dt
    lat = state.lat_offset - speed * math.sin(heading) * dt
    pos = state.host_pos + speed * math.cos(heading) * dt
    if not all(map(math.isfinite, (speed, steer, heading, lat, pos))):
        raise NonFiniteStateError("host state became non-finite")
    return accel, speed, steer, heading, lat, pos


def step_host(state: WorldState, accel_cmd: float, steer_torque: float, dt: float,
              params: PlantParams = PlantParams()) -> WorldState:
    """Advance the host by one tick (semi-implicit Euler).

    Speed, steer angle and heading are updated first; positions are then
    integrated with the new speed and heading.
    """
    accel, speed, steer, heading, lat, pos = _host(state, accel_cmd, steer_torque, dt, params)
    return replace(state, host_pos=pos, host_speed=speed, host_accel=accel,
                   lat_offset=lat, heading=heading, steer_angle=steer)


def active_segment(profile: LeadProfile, t: float):
    seg = None
    for s in profile.segments:
        if s.start <= t + 1e-12:
            seg = s
        else:
            break
    return seg


def step_lead(profile: LeadProfile, lead_speed: float, t: float, dt: float) -> tuple[float, float]:
    """Return ``(new_speed, position_delta)`` for one tick of the lead."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    seg = active_segment(profile, t)
    v = lead_speed
    if seg is not None:
        dv = seg.accel * dt
        if v < seg.target:
            v = min(seg.target, v + dv)
        elif v > seg.target:
            v = max(seg.target, v - dv)
    v = max(0.0, v)
    return v, v * dt


def init_run(scenario_id: str, params: PlantParams = PlantParams(),
             profiles: dict | None = None) -> WorldState:
    from .config import DEFAULT_PROFILES

    profiles = DEFAULT_PROFILES if profiles is None else profiles
    if scenario_id not in profiles:
        raise ConfigError(f"unknown scenario id {scenario_id!r}")
    profile = profiles[scenario_id]
    return WorldState(
        t=0.0,
        host_pos=0.0,
        host_speed=params.host_speed0,
        host_accel=0.0,
        lat_offset=0.0,
        heading=0.0,
        steer_angle=0.0,
        lead_present=True,
        lead_pos=params.d_rel0,
        lead_speed=profile.initial_speed,
        lane_half_width=params.lane_half_width,
    )


def step_world(state: WorldState, accel_cmd: float, steer_torque: float,
               profile: LeadProfile, params: PlantParams = PlantParams()) -> WorldState:
    dt = params.dt
    accel, speed, steer, heading, lat, pos = _host(state, accel_cmd, steer_torque, dt, params)
    lead_speed, lead_pos = state.lead_speed, state.lead_pos
    if state.lead_present:
        lead_speed, dx = step_lead(profile, lead_speed, state.t, dt)
        lead_pos += dx
    # t is kept on the tick grid to avoid accumulated rounding
    return WorldState((round(state.t / dt) + 1) * dt, pos, speed, accel, lat, heading, steer,
                      state.lead_present, lead_pos, lead_speed, state.lane_half_width)
