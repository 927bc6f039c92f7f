"""Request and response models shared by the HTTP API and the CLI."""
from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class CampaignSelection(BaseModel):
    """Which configuration to use and which part of its campaign to run."""

    config: dict[str, Any] | None = Field(
        None, description="configuration document; the packaged desk campaign when omitted")
    seed: int | None = Field(None, description="campaign seed override")
    scenarios: list[str] | None = None
    targets: list[str] | None = None


class ContextRequest(BaseModel):
    action: Literal["Accelerate", "Decelerate"]
    provided: bool
    hwt: float | None = Field(None, description="headway time in s; null when undefined")
    rs: float = Field(description="relative speed in m/s, positive when closing")
    safe_hwt: float = 2.5


class ContextResponse(BaseModel):
    label: str | None = Field(description="H1, H2, or null when not hazardous")


class ExperimentOut(BaseModel):
    id: str
    scenario_id: str
    mode: str
    target: str
    entry: str
    seed: int
    trigger: dict[str, Any]


class GenerateResponse(BaseModel):
    total: int
    counts: dict[str, dict[str, int]]
    experiments: list[ExperimentOut]


class RunRequest(CampaignSelection):
    workers: int = Field(1, ge=1)


class ExperimentRequest(CampaignSelection):
    experiment_id: str


class MetricsOut(BaseModel):
    injected: int
    activated: int
    manifested: int
    sdc: int
    hazards: int
    hazards_by_kind: dict[str, int]
    collisions: int
    alerts: int
    alerts_by_kind: dict[str, int]
    hazards_no_alert: int
    alerts_no_hazard: int
    invalid: int
    hazard_coverage: float
    activation_rate: float
    manifestation_rate: float
    no_alert_fraction: float
    mean_reaction_time: float | None


class ComparisonOut(BaseModel):
    guided: dict[str, float]
    random: dict[str, float]
    guided_ge_random: bool


class RunResponse(BaseModel):
    metrics: dict[str, MetricsOut]
    comparison: ComparisonOut | None
    reports: dict[str, str] = Field(description="report file name -> content")


class EventsRequest(BaseModel):
    events: list[dict[str, Any]]
