"""Closed-loop execution of one experiment against its fault-free twin.

The twin of a scenario is deterministic and shared by every experiment of
that scenario, so it is simulated once and cached.  A faulted run is
identical to its twin until the trigger first fires; execution of the
faulted loop therefore starts from the twin's state at the activation tick.
"""
from __future__ import annotations

import hashlib
import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..config import Config, to_plain
from ..controller import MODEL_ERROR, Controller, ControlOutput
from ..faults import FaultInjector, FaultSpec, apply_fault, eval_trigger, observe
from ..hazards import HazardMonitor
from ..plant import NonFiniteStateError, WorldState, init_run, step_world
from ..sensors import RadarReading, RadarTrack, SensorFrame, sense_car, sense_radar
from ..vision.pipeline import VisionSource, check_lookahead


@dataclass(frozen=True)
class Experiment:
    id: str
    scenario_id: str
    mode: str
    fault: FaultSpec | None
    seed: int
    entry: str = ""


@dataclass
class TickRecord:
    t: float
    world: WorldState
    frame: SensorFrame
    output: ControlOutput
    alerts: tuple


@dataclass
class RunLog:
    experiment_id: str
    scenario_id: str
    target: str
    mode: str
    entry: str = ""
    t_activation: float | None = None
    t_manifest: float | None = None
    hazards: dict = field(default_factory=dict)  # kind -> first t
    collision_t: float | None = None
    alerts: dict = field(default_factory=dict)  # kind -> first t (at/after activation)
    t_end: float = 0.0
    invalid: bool = False
    reason: str = ""
    ticks: list | None = None

    @property
    def activated(self) -> bool:
        return self.t_activation is not None

    @property
    def manifested(self) -> bool:
        return self.t_manifest is not None

    @property
    def hazardous(self) -> bool:
        return bool(self.hazards)

    @property
    def t_hazard(self) -> float | None:
        return min(self.hazards.values()) if self.hazards else None

    @property
    def t_alert(self) -> float | None:
        return min(self.alerts.values()) if self.alerts else None

    @property
    def t_reaction(self) -> float | None:
        th, ta = self.t_hazard, self.t_alert
        if th is None or ta is None or not ta < th:
            return None
        return th - ta


class _Loop:
    """Mutable closed-loop state for one run."""

    def __init__(self, cfg: Config, scenario_id: str, vision: VisionSource):
        self.cfg = cfg
        self.profile = cfg.profiles[scenario_id]
        self.world = init_run(scenario_id, cfg.plant, cfg.profiles)
        self.controller = Controller(cfg.controller)
        self.monitor = HazardMonitor(cfg.hazards)
        self.hold = None
        self.vision = vision
        self.injector: FaultInjector | None = None

    def tick(self, k: int, noise: "_Noise", active: bool, keep: list | None):
        """One control period; returns the output, or None on collision."""
        cfg = self.cfg
        world = self.world
        t = world.t
        self.monitor.check(world)
        if self.monitor.collision_t is not None:
            return None
        inj = self.injector
        vision_tick = k % cfg.sensors.vision_period_ticks == 0
        # A latched disengage with ModelError already logged makes the camera
        # irrelevant to outputs and first alerts; skip the raster work then.
        settled = (keep is None and not self.controller.engaged
                   and MODEL_ERROR in self.controller.first_alerts)
        if vision_tick and not settled:
            if inj is not None and active and inj.spec.target == "VisionImageEffect":
                reading = inj.corrupt_vision(None, True, world)
            else:
                reading = self.vision.read(world, d_noise=noise.vision[k])
                if inj is not None and inj.targets_vision:
                    reading = inj.corrupt_vision(reading, active, world)
            self.hold = reading
        radar = sense_radar(world)
        if noise.radar[k] and radar.tracks:
            tr = radar.tracks[0]
            radar = RadarReading(True, (RadarTrack(tr.d_rel + noise.radar[k], tr.v_rel),))
        frame = SensorFrame(radar, self.hold, sense_car(world, cfg.sensors))
        if inj is not None and active:
            frame = apply_fault(frame, inj, True, vision_tick=False)
        out, alerts = self.controller.step(frame, t)
        if keep is not None:
            keep.append(TickRecord(t, world, frame, out, tuple(alerts)))
        self.world = step_world(world, out.accel_cmd, out.steer_torque, self.profile, cfg.plant)
        return out


class _Noise:
    def __init__(self, cfg: Config, seed: int | None):
        n = cfg.plant.n_ticks
        sr, sv = cfg.sensors.radar_sigma, cfg.sensors.vision_drel_sigma
        if (sr > 0 or sv > 0) and seed is not None:
            rng = np.random.Generator(np.random.PCG64(seed))
            self.radar = rng.normal(0.0, sr, n) if sr > 0 else np.zeros(n)
            self.vision = rng.normal(0.0, sv, n) if sv > 0 else np.zeros(n)
        else:
            self.radar = self.vision = np.zeros(n)
        self.radar = self.radar.tolist()
        self.vision = self.vision.tolist()


@dataclass
class TwinTrace:
    worlds: list
    holds: list
    ctl: list
    accel: list
    torque: list
    hazards: dict
    ticks: list | None = None


def config_key(cfg: Config) -> str:
    plain = to_plain(cfg)
    plain.pop("library", None)
    return hashlib.sha256(json.dumps(plain, sort_keys=True, default=str).encode()).hexdigest()


_TWINS: "OrderedDict[tuple, TwinTrace]" = OrderedDict()
_TWIN_CACHE_SIZE = 32


def noise_seed(cfg: Config, seed: int) -> int | None:
    """Twins only depend on the experiment seed when sensors are noisy."""
    if cfg.sensors.radar_sigma > 0 or cfg.sensors.vision_drel_sigma > 0:
        return seed
    return None


def simulate_twin(cfg: Config, scenario_id: str, nseed: int | None = None,
                  keep_ticks: bool = False) -> TwinTrace:
    key = (config_key(cfg), scenario_id, nseed, keep_ticks)
    if key in _TWINS:
        _TWINS.move_to_end(key)
        return _TWINS[key]
    check_lookahead(cfg.sensors, cfg.vision)
    loop = _Loop(cfg, scenario_id, VisionSource(cfg.sensors, cfg.vision))
    noise = _Noise(cfg, nseed)
    trace = TwinTrace([], [], [], [], [], {}, [] if keep_ticks else None)
    for k in range(cfg.plant.n_ticks):
        trace.worlds.append(loop.world)
        trace.holds.append(loop.hold)
        trace.ctl.append(loop.controller.snapshot())
        out = loop.tick(k, noise, False, trace.ticks)
        if out is None:
            break
        trace.accel.append(out.accel_cmd)
        trace.torque.append(out.steer_torque)
    trace.hazards = dict(loop.monitor.first)
    _TWINS[key] = trace
    while len(_TWINS) > _TWIN_CACHE_SIZE:
        _TWINS.popitem(last=False)
    return trace


def run_experiment(exp: Experiment, cfg: Config, keep_ticks: bool = False) -> RunLog:
    spec = exp.fault
    log = RunLog(exp.id, exp.scenario_id, spec.target if spec else "none", exp.mode, exp.entry)
    nseed = noise_seed(cfg, exp.seed)
    try:
        twin = simulate_twin(cfg, exp.scenario_id, nseed, keep_ticks)
    except NonFiniteStateError as exc:
        log.invalid, log.reason = True, f"twin: {exc}"
        return log
    n = len(twin.accel)
    dt = cfg.plant.dt

    k0 = None
    if spec is not None:
        for k in range(n):
            world = twin.worlds[k]
            if eval_trigger(spec.trigger, observe(world, cfg.eps_v), world.t):
                k0 = k
                break
    if k0 is None:
        log.hazards = dict(twin.hazards)
        log.t_end = (n - 1) * dt if n else 0.0
        if keep_ticks:
            log.ticks = list(twin.ticks)
        return log

    vision = VisionSource(cfg.sensors, cfg.vision)
    loop = _Loop(cfg, exp.scenario_id, vision)
    loop.world = twin.worlds[k0]
    loop.hold = twin.holds[k0]
    loop.controller.restore(twin.ctl[k0])
    loop.monitor.first = {h: t for h, t in twin.hazards.items() if t < loop.world.t}
    loop.injector = FaultInjector(spec, vision)
    noise = _Noise(cfg, nseed)
    ticks = list(twin.ticks[:k0]) if keep_ticks else None
    log.t_activation = loop.world.t
    eps = cfg.eps_manifest
    end = k0
    try:
        for k in range(k0, cfg.plant.n_ticks):
            end = k
            world = loop.world
            active = k == k0 or eval_trigger(spec.trigger, observe(world, cfg.eps_v), world.t)
            out = loop.tick(k, noise, active, ticks)
            if out is None:
                break
            if log.t_manifest is None and k < n and (
                    abs(out.accel_cmd - twin.accel[k]) > eps or abs(out.steer_torque - twin.torque[k]) > eps):
                log.t_manifest = world.t
    except NonFiniteStateError as exc:
        log.invalid, log.reason = True, str(exc)
    log.t_end = end * dt
    log.hazards = dict(loop.monitor.first)
    log.collision_t = loop.monitor.collision_t
    log.alerts = {kind: t for kind, t in loop.controller.first_alerts.items()
                  if t >= log.t_activation - 1e-9}
    log.ticks = ticks
    if not all(math.isfinite(v) for v in log.hazards.values()):
        log.invalid, log.reason = True, "non-finite hazard time"
    return log
