"""Operations behind both the HTTP endpoints and the in-process CLI."""
from __future__ import annotations

from dataclasses import replace
from importlib.resources import files

from ..campaign.execute import run_campaign
from ..campaign.generate import campaign_counts, generate_campaign
from ..campaign.metrics import CampaignMetrics, compare_guided_random, compute_metrics, group_by
from ..campaign.reports import event_record, log_from_event, render_reports
from ..campaign.runner import run_experiment
from ..config import Config, ConfigError, config_from_dict, load_config, to_plain
from ..faults import ContextObservables, classify_context
from . import schemas


def default_config_path():
    return files("faultlab") / "data" / "desk.yaml"


def resolve_config(doc: dict | None) -> Config:
    if doc is None:
        return load_config(default_config_path())
    return config_from_dict(doc)


def _experiments(sel: schemas.CampaignSelection):
    cfg = resolve_config(sel.config)
    if sel.seed is not None:
        cfg = replace(cfg, campaign_seed=sel.seed)
    return cfg, generate_campaign(cfg, scenarios=sel.scenarios, targets=sel.targets)


def classify(req: schemas.ContextRequest) -> schemas.ContextResponse:
    obs = ContextObservables(req.hwt, req.rs)
    return schemas.ContextResponse(label=classify_context(req.action, req.provided, obs, req.safe_hwt))


def generate(sel: schemas.CampaignSelection) -> schemas.GenerateResponse:
    _, exps = _experiments(sel)
    return schemas.GenerateResponse(
        total=len(exps),
        counts=campaign_counts(exps),
        experiments=[schemas.ExperimentOut(
            id=e.id, scenario_id=e.scenario_id, mode=e.mode, target=e.fault.target,
            entry=e.entry, seed=e.seed, trigger=to_plain(e.fault.trigger)) for e in exps],
    )


def metrics_out(m: CampaignMetrics) -> schemas.MetricsOut:
    return schemas.MetricsOut(
        injected=m.injected, activated=m.activated, manifested=m.manifested, sdc=m.sdc,
        hazards=m.hazards, hazards_by_kind=m.hazards_by_kind, collisions=m.collisions,
        alerts=m.alerts, alerts_by_kind=m.alerts_by_kind, hazards_no_alert=m.hazards_no_alert,
        alerts_no_hazard=m.alerts_no_hazard, invalid=m.invalid, hazard_coverage=m.hazard_coverage,
        activation_rate=m.activation_rate, manifestation_rate=m.manifestation_rate,
        no_alert_fraction=m.no_alert_fraction, mean_reaction_time=m.mean_reaction_time,
    )


def _mode_metrics(logs) -> dict[str, CampaignMetrics]:
    out = {mode: compute_metrics(ls) for mode, ls in sorted(group_by(logs, lambda log: log.mode).items())}
    for m in out.values():
        m.check()
    return out


def _comparison(by_mode: dict[str, CampaignMetrics]) -> schemas.ComparisonOut | None:
    if "guided" not in by_mode or "random" not in by_mode:
        return None
    c = compare_guided_random(by_mode["guided"], by_mode["random"])
    return schemas.ComparisonOut(guided=c.guided, random=c.random, guided_ge_random=c.guided_ge_random)


def summarize(logs) -> schemas.RunResponse:
    by_mode = _mode_metrics(logs)
    return schemas.RunResponse(
        metrics={k: metrics_out(v) for k, v in by_mode.items()},
        comparison=_comparison(by_mode),
        reports=render_reports(logs),
    )


def run(req: schemas.RunRequest, progress=None) -> schemas.RunResponse:
    cfg, exps = _experiments(req)
    return summarize(run_campaign(exps, cfg, workers=req.workers, progress=progress))


def run_one(req: schemas.ExperimentRequest) -> dict:
    cfg, exps = _experiments(req)
    for e in exps:
        if e.id == req.experiment_id:
            return event_record(run_experiment(e, cfg))
    raise ConfigError(f"no experiment {req.experiment_id!r} in this campaign")


def report(req: schemas.EventsRequest) -> schemas.RunResponse:
    return summarize([log_from_event(rec) for rec in req.events])
