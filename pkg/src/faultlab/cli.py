"""Command line: generate, run, report, compare, serve.

Each verb builds a request model and hands it either to the in-process
operations or, with ``--server URL``, to a running faultlab service.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import urllib.error
import urllib.request
from pathlib import Path

import yaml

from .campaign.reports import read_events
from .config import ConfigError
from .service import ops, schemas

DEFAULT_OUT = "faultlab-out"


def _split(values):
    if not values:
        return None
    out = []
    for v in values:
        out.extend(x for x in v.split(",") if x)
    return out


def _load_doc(path: str | None) -> dict | None:
    if path is None:
        return None
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from None
    return (json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)) or {}


class _Remote:
    def __init__(self, base: str):
        self.base = base.rstrip("/")

    def post(self, path: str, model, response_model=None):
        req = urllib.request.Request(
            self.base + path, data=model.model_dump_json().encode(), method="POST",
            headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req) as resp:
                body = json.loads(resp.read())
        except urllib.error.HTTPError as exc:
            raise ConfigError(f"server error {exc.code}: {exc.read().decode(errors='replace')}") from None
        except urllib.error.URLError as exc:
            raise ConnectionError(f"cannot reach {self.base}: {exc.reason}") from None
        return response_model.model_validate(body) if response_model else body


def _selection(args, cls=schemas.CampaignSelection, **extra):
    return cls(config=_load_doc(args.config), seed=args.seed,
               scenarios=_split(args.scenario), targets=_split(args.target), **extra)


def _write_reports(reports: dict[str, str], out_dir: str) -> None:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in reports.items():
            tmp = out / f".{name}.tmp"
            tmp.write_text(text, encoding="utf-8")
            tmp.replace(out / name)
    except OSError as exc:
        raise OSError(f"cannot write reports to {out}: {exc}") from exc


def _print_metrics(resp: schemas.RunResponse) -> None:
    cols = ("injected", "activated", "manifested", "sdc", "hazards", "hazard_coverage",
            "alerts", "hazards_no_alert", "mean_reaction_time", "invalid")
    print("mode      " + " ".join(f"{c:>18}" for c in cols))
    for mode, m in resp.metrics.items():
        vals = []
        for c in cols:
            v = getattr(m, c)
            vals.append(f"{v:>18.4f}" if isinstance(v, float) else f"{'-' if v is None else v:>18}")
        print(f"{mode:<10}" + " ".join(vals))


def _print_comparison(resp: schemas.RunResponse) -> None:
    c = resp.comparison
    if c is None:
        print("comparison needs both guided and random runs")
        return
    print(f"{'metric':<22}{'guided':>12}{'random':>12}")
    for k in c.guided:
        print(f"{k:<22}{c.guided[k]:>12.4f}{c.random[k]:>12.4f}")
    print(f"guided coverage >= random coverage: {c.guided_ge_random}")


def cmd_generate(args, remote) -> int:
    sel = _selection(args)
    resp = remote.post("/campaign/generate", sel, schemas.GenerateResponse) if remote else ops.generate(sel)
    for mode, per in resp.counts.items():
        print(f"{mode}: {sum(per.values())} experiments  " + "  ".join(f"{k}={v}" for k, v in per.items()))
    print(f"total: {resp.total}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "experiments.jsonl", "w", encoding="utf-8") as fh:
            for e in resp.experiments:
                fh.write(e.model_dump_json() + "\n")
        print(f"wrote {out / 'experiments.jsonl'}")
    return 0


def cmd_run(args, remote) -> int:
    req = _selection(args, schemas.RunRequest, workers=args.workers)
    if remote:
        resp = remote.post("/campaign/run", req, schemas.RunResponse)
    else:
        def progress(i, n):
            if i == n or i % 25 == 0:
                print(f"\r{i}/{n}", end="" if i < n else "\n", file=sys.stderr, flush=True)
        resp = ops.run(req, progress=progress)
    out = args.out or DEFAULT_OUT
    _write_reports(resp.reports, out)
    _print_metrics(resp)
    print(f"reports in {out}/")
    return 0


def _from_events(args, remote) -> schemas.RunResponse:
    out = Path(args.out or DEFAULT_OUT)
    req = schemas.EventsRequest(events=read_events(out / "events.jsonl"))
    return remote.post("/reports", req, schemas.RunResponse) if remote else ops.report(req)


def cmd_report(args, remote) -> int:
    resp = _from_events(args, remote)
    out = args.out or DEFAULT_OUT
    _write_reports({k: v for k, v in resp.reports.items() if k != "events.jsonl"}, out)
    _print_metrics(resp)
    print(resp.reports["aggregate.csv"], end="")
    return 0


def cmd_compare(args, remote) -> int:
    _print_comparison(_from_events(args, remote))
    return 0


def cmd_serve(args, remote) -> int:
    import uvicorn

    uvicorn.run("faultlab.service.api:app", host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="configuration file (YAML or JSON); packaged desk campaign by default")
    common.add_argument("-o", "--out", help=f"output directory (default {DEFAULT_OUT})")
    common.add_argument("-j", "--workers", type=int, default=1, help="worker processes for run")
    common.add_argument("--seed", type=int, help="campaign seed override")
    common.add_argument("-s", "--scenario", action="append", help="scenario filter, e.g. S1,S3 (repeatable)")
    common.add_argument("-t", "--target", action="append", help="fault-target filter, e.g. RadarJam (repeatable)")
    common.add_argument("--server", help="base URL of a running faultlab service")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="faultlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    for name, fn, hlp in (
        ("generate", cmd_generate, "expand the fault library and list the campaign"),
        ("run", cmd_run, "execute the campaign and write reports"),
        ("report", cmd_report, "rebuild summary and aggregate tables from events.jsonl"),
        ("compare", cmd_compare, "guided vs random comparison from events.jsonl"),
    ):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.set_defaults(fn=fn)
    sp = sub.add_parser("serve", parents=[common], help="start the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    remote = _Remote(args.server) if args.server else None
    try:
        return args.fn(args, remote)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ConnectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
