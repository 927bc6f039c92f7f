"""Event log, per-experiment summary and aggregate tables.

All three files start with a version tag line.  Floats are written with a
fixed format so that identical campaigns produce identical bytes.

events.jsonl   one JSON object per experiment, keys in EVENT_FIELDS order
summary.csv    one row per experiment, columns SUMMARY_HEADER
aggregate.csv  per mode x scenario rows plus a per-mode total, then per
               mode x fault-type rows; columns AGGREGATE_HEADER
"""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

from ..hazards import H1, H2, H3
from .metrics import ALERT_KINDS, HAZARD_KINDS, CampaignMetrics, compute_metrics, fault_key, group_by
from .runner import RunLog

FORMAT_VERSION = 1
EVENTS_TAG = json.dumps({"format": "faultlab-events", "version": FORMAT_VERSION})
SUMMARY_TAG = f"# faultlab-summary v{FORMAT_VERSION}"
AGGREGATE_TAG = f"# faultlab-aggregate v{FORMAT_VERSION}"

EVENT_FIELDS = ("id", "scenario", "fault_target", "entry", "trigger_mode", "activated",
                "t_activation", "t_m", "hazards", "collision_t", "alerts", "t_a", "t_h",
                "t_r", "t_end", "invalid", "reason")
SUMMARY_HEADER = (
    ["id", "scenario", "fault_target", "entry", "trigger_mode", "activated", "t_activation",
     "manifested", "t_m"]
    + [f"{h.lower()}_t" for h in HAZARD_KINDS]
    + ["collision_t"]
    + [f"{a}_t" for a in ALERT_KINDS]
    + ["t_a", "t_h", "t_r", "invalid"]
)
AGGREGATE_HEADER = [
    "table", "trigger_mode", "group", "injected", "activated", "activation_rate",
    "manifested", "manifestation_rate", "sdc", "hazards", "hazard_coverage",
    "h1", "h2", "h3", "collisions", "alerts", "alerts_no_hazard", "hazards_no_alert",
    "no_alert_fraction", "mean_t_r", "invalid",
]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def _t(x):
    return None if x is None else round(x, 6)


def event_record(log) -> dict:
    rec = {
        "id": log.experiment_id,
        "scenario": log.scenario_id,
        "fault_target": log.target,
        "entry": log.entry,
        "trigger_mode": log.mode,
        "activated": log.activated,
        "t_activation": _t(log.t_activation),
        "t_m": _t(log.t_manifest),
        "hazards": {k: _t(log.hazards[k]) for k in HAZARD_KINDS if k in log.hazards},
        "collision_t": _t(log.collision_t),
        "alerts": {k: _t(log.alerts[k]) for k in ALERT_KINDS if k in log.alerts},
        "t_a": _t(log.t_alert),
        "t_h": _t(log.t_hazard),
        "t_r": _t(log.t_reaction),
        "t_end": _t(log.t_end),
        "invalid": log.invalid,
        "reason": log.reason,
    }
    return {k: rec[k] for k in EVENT_FIELDS}


def summary_row(log) -> list[str]:
    row = [log.experiment_id, log.scenario_id, log.target, log.entry, log.mode,
           fmt(log.activated), fmt(log.t_activation), fmt(log.manifested), fmt(log.t_manifest)]
    row += [fmt(log.hazards.get(h)) for h in HAZARD_KINDS]
    row += [fmt(log.collision_t)]
    row += [fmt(log.alerts.get(a)) for a in ALERT_KINDS]
    row += [fmt(log.t_alert), fmt(log.t_hazard), fmt(log.t_reaction), fmt(log.invalid)]
    return row


def aggregate_row(table: str, mode: str, group: str, m: CampaignMetrics) -> list[str]:
    return [
        table, mode, group, fmt(m.injected), fmt(m.activated), fmt(m.activation_rate),
        fmt(m.manifested), fmt(m.manifestation_rate), fmt(m.sdc), fmt(m.hazards),
        fmt(m.hazard_coverage), fmt(m.hazards_by_kind.get(H1, 0)), fmt(m.hazards_by_kind.get(H2, 0)),
        fmt(m.hazards_by_kind.get(H3, 0)), fmt(m.collisions), fmt(m.alerts), fmt(m.alerts_no_hazard),
        fmt(m.hazards_no_alert), fmt(m.no_alert_fraction), fmt(m.mean_reaction_time), fmt(m.invalid),
    ]


def aggregate_rows(logs) -> list[list[str]]:
    rows = []
    by_mode = group_by(logs, lambda log: log.mode)
    for mode in sorted(by_mode):
        mlogs = by_mode[mode]
        by_sid = group_by(mlogs, lambda log: log.scenario_id)
        for sid in sorted(by_sid):
            rows.append(aggregate_row("scenario", mode, sid, compute_metrics(by_sid[sid])))
        rows.append(aggregate_row("scenario", mode, "total", compute_metrics(mlogs)))
    for mode in sorted(by_mode):
        by_fault = group_by(by_mode[mode], fault_key)
        for fk in sorted(by_fault):
            rows.append(aggregate_row("fault", mode, fk, compute_metrics(by_fault[fk])))
    return rows


def _csv(tag: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(tag + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_reports(logs) -> dict[str, str]:
    """File name -> content, for logs in any order (rows are sorted by id)."""
    logs = sorted(logs, key=lambda log: log.experiment_id)
    events = [EVENTS_TAG] + [json.dumps(event_record(log), separators=(",", ":")) for log in logs]
    return {
        "events.jsonl": "\n".join(events) + "\n",
        "summary.csv": _csv(SUMMARY_TAG, SUMMARY_HEADER, [summary_row(log) for log in logs]),
        "aggregate.csv": _csv(AGGREGATE_TAG, AGGREGATE_HEADER, aggregate_rows(logs)),
    }


def emit_reports(logs, out_dir) -> dict[str, Path]:
    """Write the three report files into ``out_dir``.

    Each file is written to a temporary sibling and renamed, so a failure
    leaves no partial report behind.  Raises OSError on unwritable paths.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    contents = render_reports(logs)
    written = {}
    tmp_paths = []
    try:
        for name, text in contents.items():
            tmp = out / f".{name}.tmp"
            tmp_paths.append(tmp)
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for name in contents:
            os.replace(out / f".{name}.tmp", out / name)
            written[name] = out / name
    except OSError as exc:
        for tmp in tmp_paths:
            if tmp.exists():
                tmp.unlink()
        raise OSError(f"cannot write reports to {out}: {exc}") from exc
    return written


def read_events(path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or json.loads(lines[0]) != json.loads(EVENTS_TAG):
        raise ValueError(f"{path}: not a version {FORMAT_VERSION} event log")
    return [json.loads(line) for line in lines[1:] if line]


def log_from_event(rec: dict) -> RunLog:
    """Rebuild the event part of a RunLog from an event record."""
    return RunLog(
        experiment_id=rec["id"], scenario_id=rec["scenario"], target=rec["fault_target"],
        mode=rec["trigger_mode"], entry=rec.get("entry", ""),
        t_activation=rec["t_activation"], t_manifest=rec["t_m"],
        hazards=dict(rec["hazards"]), collision_t=rec["collision_t"], alerts=dict(rec["alerts"]),
        t_end=rec["t_end"], invalid=rec["invalid"], reason=rec.get("reason", ""),
    )
