"""Configuration blocks and the campaign document loader.

All quantities are SI internally.  Speeds in the configuration document are
given in mph (keys ending in ``_mph``) and converted once here.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Any

import yaml

MPH = 0.44704  # m/s per mph
SCENARIO_IDS = ("S1", "S2", "S3", "S4", "S5")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration documents."""


def mph(value: float) -> float:
    return value * MPH


@dataclass(frozen=True)
class PlantParams:
    dt: float = 0.01
    duration: float = 30.0
    a_min: float = -8.0
    a_max: float = 3.0
    steer_rate_gain: float = 0.5  # rad/s of steering-wheel angle at full torque
    steer_limit: float = math.radians(45.0)
    steer_ratio: float = 15.0  # steering-wheel angle / road-wheel angle
    wheelbase: float = 2.7
    lane_half_width: float = 1.85
    host_speed0: float = mph(60.0)
    d_rel0: float = 50.0

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class Segment:
    start: float  # s
    target: float  # m/s
    accel: float  # m/s², magnitude


@dataclass(frozen=True)
class LeadProfile:
    scenario_id: str
    initial_speed: float
    segments: tuple[Segment, ...]

    def __post_init__(self):
        starts = [s.start for s in self.segments]
        if starts != sorted(starts) or len(set(starts)) != len(starts):
            raise ConfigError(f"{self.scenario_id}: segments must be strictly time-ordered")
        for seg in self.segments:
            if seg.target < 0 or seg.accel <= 0:
                raise ConfigError(f"{self.scenario_id}: bad segment {seg}")
        if self.initial_speed < 0:
            raise ConfigError(f"{self.scenario_id}: negative initial speed")


def _profile(sid: str, initial_mph: float, segs: list[tuple[float, float, float]]) -> LeadProfile:
    return LeadProfile(sid, mph(initial_mph), tuple(Segment(s, mph(v), a) for s, v, a in segs))


# Accel/decel magnitudes and switch times for S3-S5 are not given by the
# source scenarios; these are documented defaults, overridable in config.
DEFAULT_PROFILES: dict[str, LeadProfile] = {
    "S1": _profile("S1", 40.0, [(0.0, 40.0, 1.0)]),
    "S2": _profile("S2", 25.0, [(0.0, 25.0, 1.0)]),
    "S3": _profile("S3", 40.0, [(0.0, 40.0, 1.0), (5.0, 55.0, 1.0), (15.0, 30.0, 1.5)]),
    "S4": _profile("S4", 40.0, [(0.0, 40.0, 1.0), (5.0, 20.0, 1.5), (15.0, 45.0, 1.0)]),
    "S5": _profile("S5", 40.0, [(0.0, 40.0, 1.0), (5.0, 0.0, 2.0)]),
}


@dataclass(frozen=True)
class SensorParams:
    radar_sigma: float = 0.0
    vision_drel_sigma: float = 0.0
    cruise_set: float = mph(60.0)
    vision_period_ticks: int = 5  # 20 Hz vision at a 100 Hz control loop
    lookahead: float = 30.0  # m; lane positions are reported at this distance
    mode: str = "analytic"  # or "pipeline"


@dataclass(frozen=True)
class ControllerParams:
    k_v: float = 0.5
    k_d: float = 0.2
    k_s: float = 0.8
    safe_hwt: float = 2.5
    standstill_gap: float = 5.0
    k_p: float = 0.8
    k_h: float = 10.0
    tau_sat: float = 1.0
    a_fcw: float = 3.0
    a_min: float = -8.0
    a_max: float = 3.0


@dataclass(frozen=True)
class HazardParams:
    d_min: float = 2.0
    v_stop: float = 0.5
    d_far: float = 100.0
    warmup: float = 1.0
    vehicle_half_width: float = 0.9


@dataclass(frozen=True)
class VisionParams:
    width: int = 640
    height: int = 480
    px_per_m: float = 100.0
    road_intensity: int = 40
    marker_intensity: int = 220
    marker_width: int = 8
    view_depth: float = 60.0  # m covered from bottom row to top row
    sobel_threshold: float = 60.0
    eps: float = 6.0
    min_pts: int = 12
    min_cluster_points: int = 120
    pair_px: float = 14.0
    min_lane_width: float = 2.5  # m; narrower or wider detections are rejected
    max_lane_width: float = 5.0
    rain_angle: float = 75.0
    snow_per_thickness: int = 15
    fog_noise_per_thickness: float = 12.0


@dataclass(frozen=True)
class TriggerContext:
    hwt_rel: str  # "LE" | "GT"
    rs_rel: str  # "LE0" | "GT0"


@dataclass(frozen=True)
class LibraryEntry:
    name: str
    target: str
    params: dict = field(default_factory=dict)
    count: int = 1  # repetitions per scenario
    uca: tuple[str, ...] = ("accelerate_provided",)


@dataclass(frozen=True)
class Config:
    plant: PlantParams = PlantParams()
    sensors: SensorParams = SensorParams()
    controller: ControllerParams = ControllerParams()
    hazards: HazardParams = HazardParams()
    vision: VisionParams = VisionParams()
    profiles: dict = field(default_factory=lambda: dict(DEFAULT_PROFILES))
    library: tuple[LibraryEntry, ...] = ()
    scenarios: tuple[str, ...] = SCENARIO_IDS
    modes: tuple[str, ...] = ("guided", "random")
    campaign_seed: int = 2019
    eps_v: float = 0.5
    eps_manifest: float = 1e-6

    def with_library(self, library) -> "Config":
        return replace(self, library=tuple(library))


def _build(cls, data: dict | None, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in fields(cls)}
    converted = {}
    for key, value in data.items():
        name = key[: -len("_mph")] if key.endswith("_mph") else key
        if name not in names:
            raise ConfigError(f"{where}: unknown key {key!r}")
        converted[name] = mph(value) if key.endswith("_mph") else value
    try:
        return cls(**converted)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _build_profiles(data: dict | None) -> dict:
    profiles = dict(DEFAULT_PROFILES)
    for sid, spec in (data or {}).items():
        if sid not in SCENARIO_IDS:
            raise ConfigError(f"unknown scenario id {sid!r}")
        try:
            segs = [(float(s), float(v), float(a)) for s, v, a in spec["segments_mph"]]
            profiles[sid] = _profile(sid, float(spec["initial_speed_mph"]), segs)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"profile {sid}: {exc}") from None
    return profiles


def _build_library(entries) -> tuple[LibraryEntry, ...]:
    from .faults import validate_params  # local import: faults depends on config

    out = []
    seen = set()
    for i, raw in enumerate(entries or []):
        if not isinstance(raw, dict) or "target" not in raw:
            raise ConfigError(f"library[{i}]: entry needs a target")
        name = raw.get("name", f"{raw['target']}-{i}")
        if name in seen:
            raise ConfigError(f"library[{i}]: duplicate name {name!r}")
        seen.add(name)
        uca = raw.get("uca", ["accelerate_provided"])
        entry = LibraryEntry(
            name=name,
            target=raw["target"],
            params=dict(raw.get("params", {})),
            count=int(raw.get("count", 1)),
            uca=tuple([uca] if isinstance(uca, str) else uca),
        )
        validate_params(entry.target, entry.params)
        from .faults import contexts_for_uca

        for u in entry.uca:
            contexts_for_uca(u)
        if entry.count < 0:
            raise ConfigError(f"library[{i}]: negative count")
        out.append(entry)
    return tuple(out)


def config_from_dict(doc: dict) -> Config:
    if not isinstance(doc, dict):
        raise ConfigError("configuration document must be a mapping")
    known = {
        "plant", "sensors", "controller", "hazards", "vision", "profiles",
        "library", "scenarios", "modes", "campaign_seed", "eps_v", "eps_manifest",
    }
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    scenarios = tuple(doc.get("scenarios", SCENARIO_IDS))
    for sid in scenarios:
        if sid not in SCENARIO_IDS:
            raise ConfigError(f"unknown scenario id {sid!r}")
    modes = tuple(doc.get("modes", ("guided", "random")))
    for m in modes:
        if m not in ("guided", "random"):
            raise ConfigError(f"unknown trigger mode {m!r}")
    sensors = _build(SensorParams, doc.get("sensors"), "sensors")
    if sensors.mode not in ("analytic", "pipeline"):
        raise ConfigError(f"sensors.mode must be analytic or pipeline, got {sensors.mode!r}")
    return Config(
        plant=_build(PlantParams, doc.get("plant"), "plant"),
        sensors=sensors,
        controller=_build(ControllerParams, doc.get("controller"), "controller"),
        hazards=_build(HazardParams, doc.get("hazards"), "hazards"),
        vision=_build(VisionParams, doc.get("vision"), "vision"),
        profiles=_build_profiles(doc.get("profiles")),
        library=_build_library(doc.get("library")),
        scenarios=scenarios,
        modes=modes,
        campaign_seed=int(doc.get("campaign_seed", 2019)),
        eps_v=float(doc.get("eps_v", 0.5)),
        eps_manifest=float(doc.get("eps_manifest", 1e-6)),
    )


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        doc = json.loads(text)
    else:
        doc = yaml.safe_load(text)
    return config_from_dict(doc or {})


def to_plain(obj: Any) -> Any:
    """Dataclass tree -> JSON-compatible structure."""
    if is_dataclass(obj):
        return {k: to_plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {k: to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    return obj
