"""Fault specifications, STPA context triggers and sensor-frame corruption."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError, TriggerContext
from .sensors import RadarReading, RadarTrack, SensorFrame, VisionReading

TARGETS = (
    "RadarChaff", "RadarInvisible", "RadarGhost", "RadarJam",
    "CarSpeed", "CarSteer",
    "VisionPathModel", "VisionCameraUnavailable", "VisionDRel",
    "RadarAndVisionDRel", "VisionImageEffect",
)
VISION_TARGETS = frozenset({
    "VisionPathModel", "VisionCameraUnavailable", "VisionDRel",
    "RadarAndVisionDRel", "VisionImageEffect",
})

# target -> (defaults, required keys)
_PARAM_DEFAULTS: dict[str, dict] = {
    "RadarChaff": {"delta_d": 20.0, "delta_v": 10.0},
    "RadarInvisible": {},
    "RadarGhost": {"d_ghost": 10.0, "v_ghost": -5.0},
    "RadarJam": {},
    "CarSpeed": {"offset_range": None, "offset": None},
    "CarSteer": {"max_offset_deg": 45.0, "offset": None},
    "VisionPathModel": {"delta_p": 8.0},
    "VisionCameraUnavailable": {},
    "VisionDRel": {"delta_d": 20.0},
    "RadarAndVisionDRel": {"delta_d": 20.0},
    "VisionImageEffect": {"effect": None},
}

MIN_DREL = 0.1


def validate_params(target: str, params: dict) -> dict:
    """Return ``params`` merged over the target defaults; raise on mismatch."""
    if target not in _PARAM_DEFAULTS:
        raise ConfigError(f"unknown fault target {target!r}")
    if target == "VisionImageEffect":
        from .vision.effects import EffectParams

        if "effect" not in params:
            raise ConfigError("VisionImageEffect needs an 'effect' parameter")
        EffectParams.from_dict(params)  # raises ConfigError
        return dict(params)
    defaults = _PARAM_DEFAULTS[target]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(f"{target}: unknown parameters {sorted(unknown)}")
    merged = {**defaults, **params}
    for k, v in merged.items():
        if v is not None and not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise ConfigError(f"{target}.{k} must be a finite number")
    for k in ("delta_d", "delta_v", "delta_p", "max_offset_deg"):
        if k in merged and merged[k] < 0:
            raise ConfigError(f"{target}.{k} must be non-negative")
    return merged


# --- triggers ---------------------------------------------------------------

@dataclass(frozen=True)
class TriggerSpec:
    mode: str  # "guided" | "random"
    context: TriggerContext | None = None
    hwt_bound: float = 2.5
    t_start: float | None = None

    def __post_init__(self):
        if self.mode == "guided":
            if self.context is None or self.t_start is not None:
                raise ConfigError("guided trigger needs a context and no t_start")
            if self.context.hwt_rel not in ("LE", "GT") or self.context.rs_rel not in ("LE0", "GT0"):
                raise ConfigError(f"bad context {self.context}")
        elif self.mode == "random":
            if self.t_start is None or self.context is not None:
                raise ConfigError("random trigger needs t_start and no context")
        else:
            raise ConfigError(f"unknown trigger mode {self.mode!r}")


@dataclass(frozen=True, slots=True)
class ContextObservables:
    hwt: float | None  # s; None when undefined
    rs: float | None  # m/s, positive = closing


def observe(world, eps_v: float = 0.5) -> ContextObservables:
    if not world.lead_present:
        return ContextObservables(None, None)
    rs = world.host_speed - world.lead_speed
    if world.host_speed <= eps_v:
        return ContextObservables(None, rs)
    return ContextObservables((world.lead_pos - world.host_pos) / world.host_speed, rs)


def _bucket(obs: ContextObservables, safe_hwt: float) -> tuple[str, str] | None:
    if obs.hwt is None or obs.rs is None:
        return None
    return ("LE" if obs.hwt <= safe_hwt else "GT", "LE0" if obs.rs <= 0 else "GT0")


def eval_trigger(spec: TriggerSpec, obs: ContextObservables, t: float) -> bool:
    if spec.mode == "random":
        return t >= spec.t_start - 1e-9
    b = _bucket(obs, spec.hwt_bound)
    return b == (spec.context.hwt_rel, spec.context.rs_rel)


# Context table for Accelerate / Decelerate: (action, hwt, rs) -> (not provided, provided)
CONTEXT_TABLE = {
    ("Accelerate", "LE", "LE0"): (None, None),
    ("Accelerate", "LE", "GT0"): (None, "H1"),
    ("Accelerate", "GT", "LE0"): ("H2", None),
    ("Accelerate", "GT", "GT0"): (None, "H1"),
    ("Decelerate", "LE", "LE0"): (None, None),
    ("Decelerate", "LE", "GT0"): ("H1", None),
    ("Decelerate", "GT", "LE0"): (None, "H2"),
    ("Decelerate", "GT", "GT0"): ("H1", None),
}


def classify_context(action: str, provided: bool, obs: ContextObservables,
                     safe_hwt: float = 2.5) -> str | None:
    """Hazard label for issuing (or withholding) ``action`` in context ``obs``."""
    if action not in ("Accelerate", "Decelerate"):
        raise ValueError(f"unknown control action {action!r}")
    b = _bucket(obs, safe_hwt)
    if b is None:
        return None
    return CONTEXT_TABLE[(action, *b)][1 if provided else 0]


_UCA = {
    "accelerate_provided": ("Accelerate", True),
    "accelerate_not_provided": ("Accelerate", False),
    "decelerate_provided": ("Decelerate", True),
    "decelerate_not_provided": ("Decelerate", False),
}


def contexts_for_uca(uca: str) -> list[TriggerContext]:
    """Hazardous contexts of one unsafe control action, in table order."""
    if uca not in _UCA:
        raise ConfigError(f"unknown unsafe control action {uca!r}")
    action, provided = _UCA[uca]
    out = []
    for (act, hwt, rs), cells in CONTEXT_TABLE.items():
        if act == action and cells[1 if provided else 0] is not None:
            out.append(TriggerContext(hwt, rs))
    return out


# --- fault specs and injection ---------------------------------------------

@dataclass(frozen=True)
class FaultSpec:
    target: str
    trigger: TriggerSpec
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", validate_params(self.target, self.params))
        if not (0 <= self.seed < 2**64):
            raise ConfigError("fault seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, slots=True)
class ActivationEvent:
    target: str
    t: float


class ActivationRecorder:
    def __init__(self, spec: FaultSpec):
        self.spec = spec
        self.event: ActivationEvent | None = None

    def record(self, active: bool, t: float) -> ActivationEvent | None:
        if active and self.event is None:
            self.event = ActivationEvent(self.spec.target, t)
        return self.event


def record_activation(spec: FaultSpec, t: float) -> ActivationEvent:
    return ActivationEvent(spec.target, t)


class FaultInjector:
    """Per-run fault state: the seeded stream and once-per-run draws."""

    def __init__(self, spec: FaultSpec, vision_source=None):
        self.spec = spec
        self.p = spec.params
        self.rng = np.random.Generator(np.random.PCG64(spec.seed))
        self.vision_source = vision_source
        self.vision_ticks = 0
        self.steer_offset = None
        self.path_offset = None
        if spec.target == "VisionPathModel":
            # one random shift of the perceived lane, held while the fault lasts
            self.path_offset = self._u(self.p["delta_p"])
        if spec.target == "CarSteer":
            fixed = self.p.get("offset")
            if fixed is not None:
                self.steer_offset = float(fixed)
            else:
                lim = math.radians(self.p["max_offset_deg"])
                self.steer_offset = float(self.rng.uniform(-lim, lim))
        self._effect = None
        if spec.target == "VisionImageEffect":
            from .vision.effects import EffectParams

            # weather is one condition per experiment; occluding blobs stay put
            self._effect = EffectParams.from_dict(self.p).pinned(self.rng)
            self._fixed_frame_seed = int(self.rng.integers(0, 2**63))

    @property
    def targets_vision(self) -> bool:
        return self.spec.target in VISION_TARGETS

    def _u(self, half: float) -> float:
        return float(self.rng.uniform(-half, half))

    def corrupt_vision(self, reading: VisionReading, active: bool, world=None) -> VisionReading:
        """Apply the vision part of the fault (called once per vision tick)."""
        if not active:
            return reading
        target = self.spec.target
        if target == "VisionImageEffect":
            if world is None or self.vision_source is None:
                raise ValueError("image effects need the world state and a vision pipeline")
            if self._effect.effect == "Occlusion":
                seed = self._fixed_frame_seed
            else:
                seed = int(self.rng.integers(0, 2**63))
            self.vision_ticks += 1
            return self.vision_source.read(world, effect=self._effect, seed=seed)
        if target == "VisionCameraUnavailable":
            return replace(reading, valid=False)
        if not reading.valid:
            return reading
        if target == "VisionPathModel":
            b = self.path_offset
            return replace(reading, left_lane_x=reading.left_lane_x + b,
                           right_lane_x=reading.right_lane_x + b)
        if target in ("VisionDRel", "RadarAndVisionDRel"):
            if reading.d_rel_vision is None:
                return reading
            d = max(MIN_DREL, reading.d_rel_vision + self._u(self.p["delta_d"]))
            return replace(reading, d_rel_vision=d)
        return reading

    def corrupt_radar(self, radar: RadarReading) -> RadarReading:
        target = self.spec.target
        if target == "RadarJam":
            return RadarReading(False, ())
        if target == "RadarInvisible":
            return RadarReading(radar.valid, ())
        if target == "RadarGhost":
            ghost = RadarTrack(self.p["d_ghost"], self.p["v_ghost"])
            return RadarReading(radar.valid, radar.tracks[:1] + (ghost,))
        if target == "RadarChaff":
            tracks = tuple(
                RadarTrack(max(MIN_DREL, tr.d_rel + self._u(self.p["delta_d"])),
                           tr.v_rel + self._u(self.p["delta_v"]))
                for tr in radar.tracks)
            return RadarReading(radar.valid, tracks)
        if target == "RadarAndVisionDRel":
            tracks = tuple(RadarTrack(max(MIN_DREL, tr.d_rel + self._u(self.p["delta_d"])), tr.v_rel)
                           for tr in radar.tracks)
            return RadarReading(radar.valid, tracks)
        return radar

    def corrupt_car(self, frame: SensorFrame) -> SensorFrame:
        car = frame.car
        if self.spec.target == "CarSpeed":
            offset = self.p.get("offset")
            if offset is None:
                half = self.p.get("offset_range")
                half = car.cruise_set if half is None else half
                offset = self._u(half)
            speed = min(max(car.speed + offset, 0.0), 2.0 * car.cruise_set)
            return replace(frame, car=replace(car, speed=speed))
        if self.spec.target == "CarSteer":
            return replace(frame, car=replace(car, steer_angle=car.steer_angle + self.steer_offset))
        return frame


def apply_fault(frame: SensorFrame, injector: FaultInjector, active: bool, *,
                vision_tick: bool = True, world=None) -> SensorFrame:
    """Corrupt ``frame`` per the injector's spec; identity when inactive.

    With ``vision_tick=False`` the vision channel is left alone (it is held
    between vision ticks and was corrupted when it was sampled).
    """
    if not active:
        return frame
    if vision_tick and injector.targets_vision:
        frame = replace(frame, vision=injector.corrupt_vision(frame.vision, True, world))
    radar = injector.corrupt_radar(frame.radar)
    if radar is not frame.radar:
        frame = replace(frame, radar=radar)
    return injector.corrupt_car(frame)
