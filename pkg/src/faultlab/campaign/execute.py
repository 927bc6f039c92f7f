"""Work-queue execution of independent experiments."""
from __future__ import annotations

import logging
import multiprocessing as mp
from collections.abc import Callable, Sequence

from ..config import Config
from .runner import Experiment, RunLog, run_experiment

log = logging.getLogger(__name__)

_WORKER_CFG: Config | None = None


def _init_worker(cfg: Config) -> None:
    global _WORKER_CFG
    _WORKER_CFG = cfg


def _run_one(exp: Experiment) -> RunLog:
    return run_experiment(exp, _WORKER_CFG)


def _order(experiments: Sequence[Experiment]) -> list[Experiment]:
    # scenario-major keeps each worker's twin cache warm
    return sorted(experiments, key=lambda e: (e.scenario_id, e.id))


def run_campaign(experiments: Sequence[Experiment], cfg: Config, workers: int = 1,
                 progress: Callable[[int, int], None] | None = None) -> list[RunLog]:
    """Run every experiment; logs come back in the order of ``experiments``.

    Each run is sequential and depends only on (config, experiment), so the
    result does not depend on ``workers``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    todo = _order(experiments)
    total = len(todo)
    by_id: dict[str, RunLog] = {}
    if workers == 1 or total <= 1:
        for i, exp in enumerate(todo, 1):
            by_id[exp.id] = run_experiment(exp, cfg)
            if progress:
                progress(i, total)
    else:
        ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else "spawn")
        with ctx.Pool(min(workers, total), initializer=_init_worker,
                      initargs=(cfg,)) as pool:
            for i, result in enumerate(pool.imap_unordered(_run_one, todo, chunksize=4), 1):
                by_id[result.experiment_id] = result
                if progress:
                    progress(i, total)
    log.info("ran %d experiments on %d worker(s)", total, workers)
    return [by_id[e.id] for e in experiments]
