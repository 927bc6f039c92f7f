"""Expansion of a fault library into a list of experiments."""
from __future__ import annotations

import numpy as np

from ..config import Config, ConfigError
from ..faults import FaultSpec, TriggerSpec, contexts_for_uca
from .runner import Experiment


def _seq(campaign_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(campaign_seed, spawn_key=key)


def derive_seed(campaign_seed: int, index: int, stream: int = 0) -> int:
    """64-bit seed for experiment ``index`` (stream 0: fault, 1: trigger draw)."""
    return int(_seq(campaign_seed, index, stream).generate_state(1, dtype=np.uint64)[0])


def entry_contexts(entry) -> list:
    seen = []
    for uca in entry.uca:
        for ctx in contexts_for_uca(uca):
            if ctx not in seen:
                seen.append(ctx)
    return seen


def generate_campaign(cfg: Config, seed: int | None = None, scenarios=None,
                      targets=None) -> list[Experiment]:
    """Library entries x scenarios x repetitions, for every trigger mode.

    Guided repetitions cycle through the hazardous contexts of the entry's
    unsafe control actions; random repetitions draw a start time uniformly
    over the run.  Seeds derive from the campaign seed and the experiment's
    position in the unfiltered expansion, so filters do not change them.
    """
    seed = cfg.campaign_seed if seed is None else seed
    if scenarios is not None:
        unknown = set(scenarios) - set(cfg.scenarios)
        if unknown:
            raise ConfigError(f"scenario filter names unknown scenarios {sorted(unknown)}")
    out = []
    index = 0
    for mode in cfg.modes:
        for entry in cfg.library:
            contexts = entry_contexts(entry)
            for sid in cfg.scenarios:
                for rep in range(entry.count):
                    i = index
                    index += 1
                    if scenarios is not None and sid not in scenarios:
                        continue
                    if targets is not None and entry.target not in targets:
                        continue
                    if mode == "guided":
                        trig = TriggerSpec("guided", context=contexts[rep % len(contexts)],
                                           hwt_bound=cfg.controller.safe_hwt)
                    else:
                        rng = np.random.Generator(np.random.PCG64(_seq(seed, i, 1)))
                        # start tick uniform over the run, so activation is certain
                        k = int(rng.integers(0, cfg.plant.n_ticks))
                        trig = TriggerSpec("random", t_start=k * cfg.plant.dt)
                    fseed = derive_seed(seed, i, 0)
                    spec = FaultSpec(entry.target, trig, fseed, dict(entry.params))
                    out.append(Experiment(
                        id=f"{mode[0].upper()}-{sid}-{entry.name}-{rep:04d}",
                        scenario_id=sid, mode=mode, fault=spec, seed=fseed, entry=entry.name))
    return out


def campaign_counts(experiments) -> dict:
    counts: dict = {}
    for e in experiments:
        counts.setdefault(e.mode, {}).setdefault(e.scenario_id, 0)
        counts[e.mode][e.scenario_id] += 1
    return counts
