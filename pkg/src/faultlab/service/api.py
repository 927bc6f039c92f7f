"""HTTP front end over the campaign operations."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import ConfigError
from . import ops, schemas

app = FastAPI(title="faultlab", version=__version__)


def _guard(fn, *args):
    try:
        return fn(*args)
    except (ConfigError, ValueError, KeyError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/context/classify", response_model=schemas.ContextResponse)
def classify(req: schemas.ContextRequest):
    return _guard(ops.classify, req)


@app.post("/campaign/generate", response_model=schemas.GenerateResponse)
def generate(req: schemas.CampaignSelection):
    return _guard(ops.generate, req)


@app.post("/campaign/run", response_model=schemas.RunResponse)
def run(req: schemas.RunRequest):
    return _guard(ops.run, req)


@app.post("/experiments/run")
def run_experiment(req: schemas.ExperimentRequest) -> dict:
    return _guard(ops.run_one, req)


@app.post("/reports", response_model=schemas.RunResponse)
def report(req: schemas.EventsRequest):
    return _guard(ops.report, req)
