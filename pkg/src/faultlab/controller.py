"""ACC + LKAS driving agent with FCW and an alert manager."""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import ControllerParams
from .sensors import CarReading, RadarReading, SensorFrame, VisionReading

STEER_SATURATED = "SteerSaturated"
FCW = "FCW"
CAN_ERROR = "CanError"
MODEL_ERROR = "ModelError"
ALERT_KINDS = (STEER_SATURATED, FCW, CAN_ERROR, MODEL_ERROR)


@dataclass(frozen=True, slots=True)
class ControlOutput:
    accel_cmd: float
    steer_torque: float
    engaged: bool


@dataclass(frozen=True, slots=True)
class Alert:
    kind: str
    t: float


DISENGAGED = ControlOutput(0.0, 0.0, False)


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


def acc_step(radar: RadarReading, car: CarReading,
             p: ControllerParams = ControllerParams()) -> float:
    a_c = _clamp(p.k_v * (car.cruise_set - car.speed), p.a_min, p.a_max)
    lead = radar.nearest()
    if lead is None:
        return a_c
    d_desired = p.standstill_gap + p.safe_hwt * car.speed
    a_g = p.k_d * (lead.d_rel - d_desired) + p.k_s * lead.v_rel
    return _clamp(min(a_c, a_g), p.a_min, p.a_max)


def lkas_step(vision: VisionReading, car: CarReading,
              p: ControllerParams = ControllerParams()) -> tuple[float, bool]:
    e = -(vision.left_lane_x + vision.right_lane_x) / 2.0
    u = p.k_p * e + p.k_h * (0.0 - car.steer_angle)
    return _clamp(u, -1.0, 1.0), abs(u) > p.tau_sat


def required_decel(v_rel: float, d_rel: float) -> float:
    return v_rel * v_rel / (2.0 * d_rel)


def fcw_check(radar: RadarReading, car: CarReading,
              p: ControllerParams = ControllerParams()) -> bool:
    if not radar.valid:
        return False
    lead = radar.nearest()
    if lead is None or lead.v_rel >= 0.0 or lead.d_rel <= 0.0:
        return False
    return required_decel(lead.v_rel, lead.d_rel) > p.a_fcw


@dataclass
class Controller:
    """Per-run controller state: the disengage latch and first alert times."""

    params: ControllerParams = ControllerParams()
    engaged: bool = True
    first_alerts: dict = field(default_factory=dict)

    def step(self, frame: SensorFrame, t: float) -> tuple[ControlOutput, list[Alert]]:
        return alert_manager(frame, self, t)

    def snapshot(self):
        return self.engaged, tuple(self.first_alerts.items())

    def restore(self, snap) -> None:
        self.engaged = snap[0]
        self.first_alerts = dict(snap[1])


def alert_manager(frame: SensorFrame, ctl: Controller, t: float) -> tuple[ControlOutput, list[Alert]]:
    alerts: list[Alert] = []
    if not frame.radar.valid:
        alerts.append(Alert(CAN_ERROR, t))
        ctl.engaged = False
    if not frame.vision.valid:
        alerts.append(Alert(MODEL_ERROR, t))
        ctl.engaged = False
    if ctl.engaged:
        accel = acc_step(frame.radar, frame.car, ctl.params)
        torque, saturated = lkas_step(frame.vision, frame.car, ctl.params)
        if fcw_check(frame.radar, frame.car, ctl.params):
            alerts.append(Alert(FCW, t))
        if saturated:
            alerts.append(Alert(STEER_SATURATED, t))
        out = ControlOutput(accel, torque, True)
    else:
        out = DISENGAGED
    for a in alerts:
        ctl.first_alerts.setdefault(a.kind, a.t)
    return out, alerts
