import csv
import io
import json
import os

import pytest

from faultlab.campaign.execute import run_campaign
from faultlab.campaign.generate import generate_campaign
from faultlab.campaign.reports import (AGGREGATE_HEADER, AGGREGATE_TAG, EVENT_FIELDS, EVENTS_TAG,
                                       SUMMARY_HEADER, SUMMARY_TAG, emit_reports, event_record,
                                       log_from_event, read_events, render_reports)
from faultlab.config import config_from_dict


@pytest.fixture(scope="module")
def smoke():
    cfg = config_from_dict({"library": [{"target": "RadarJam", "count": 3, "uca": "decelerate_not_provided"}],
                            "modes": ["random"]})
    exps = generate_campaign(cfg)
    return cfg, exps, run_campaign(exps, cfg)


def _rows(text):
    lines = text.splitlines()
    return lines[0], list(csv.reader(io.StringIO("\n".join(lines[1:]))))


def test_empty_campaign_headers_only():
    r = render_reports([])
    assert r["events.jsonl"] == EVENTS_TAG + "\n"
    tag, rows = _rows(r["summary.csv"])
    assert tag == SUMMARY_TAG and rows == [SUMMARY_HEADER]
    tag, rows = _rows(r["aggregate.csv"])
    assert tag == AGGREGATE_TAG and rows == [AGGREGATE_HEADER]


def test_smoke_campaign_rows(smoke):
    _, exps, logs = smoke
    r = render_reports(logs)
    _, rows = _rows(r["summary.csv"])
    assert len(rows) == 1 + 15 and all(len(x) == len(SUMMARY_HEADER) for x in rows)
    events = read_events_text(r["events.jsonl"])
    assert [list(e) for e in events] == [list(EVENT_FIELDS)] * 15
    _, agg = _rows(r["aggregate.csv"])
    groups = [(x[0], x[2]) for x in agg[1:]]
    assert groups == [("scenario", s) for s in ("S1", "S2", "S3", "S4", "S5", "total")] + [("fault", "RadarJam")]


def read_events_text(text):
    lines = text.splitlines()
    assert json.loads(lines[0]) == json.loads(EVENTS_TAG)
    return [json.loads(x) for x in lines[1:]]


def test_rerun_byte_identical(smoke):
    cfg, exps, logs = smoke
    again = run_campaign(list(reversed(exps)), cfg)
    assert render_reports(again) == render_reports(logs)


def test_event_roundtrip(smoke):
    _, _, logs = smoke
    back = [log_from_event(event_record(x)) for x in logs]
    assert render_reports(back) == render_reports(logs)


def test_emit_and_read(tmp_path, smoke):
    _, _, logs = smoke
    paths = emit_reports(logs, tmp_path / "out")
    assert sorted(paths) == ["aggregate.csv", "events.jsonl", "summary.csv"]
    assert not [p for p in os.listdir(tmp_path / "out") if p.endswith(".tmp")]
    assert len(read_events(paths["events.jsonl"])) == 15


def test_read_events_rejects_unversioned(tmp_path):
    p = tmp_path / "e.jsonl"
    p.write_text('{"id": "x"}\n')
    with pytest.raises(ValueError):
        read_events(p)


def test_unwritable_path(tmp_path, smoke):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_reports(smoke[2], blocker / "out")


def test_failed_write_leaves_nothing(tmp_path, smoke, monkeypatch):
    import builtins

    real_open = builtins.open
    calls = []

    def flaky(path, *a, **kw):
        calls.append(path)
        if len(calls) == 2:
            raise OSError("disk full")
        return real_open(path, *a, **kw)

    monkeypatch.setattr(builtins, "open", flaky)
    with pytest.raises(OSError, match="cannot write reports"):
        emit_reports(smoke[2], tmp_path)
    monkeypatch.undo()
    assert os.listdir(tmp_path) == []
