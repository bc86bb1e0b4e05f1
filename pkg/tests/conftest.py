import os
import time
from dataclasses import replace

import pytest

from beamsched.config import ExperimentConfig
from beamsched.engine import summarize
from beamsched.presets import run_replications
from beamsched.streams import replication_seeds

# Acceptance protocol: published operating point, 1e5-slot horizon, 10 seeds.
PROTOCOL_SEEDS = replication_seeds(12345, 10)
WORKERS = min(2, os.cpu_count() or 1)


def _variant(policy="ACI", model="FSO", **tuning):
    cfg = ExperimentConfig(policy=policy, switch_model=model)
    if tuning:
        cfg.policy_tuning = replace(cfg.policy_tuning, **tuning)
    return cfg


GRID_CONFIGS = {
    "MW": _variant("MW", "FSO"),
    "ACI-IID": _variant("ACI", "IID"),
    "ACI-DEP": _variant("ACI", "DEPENDENT"),
    "ACI-FSO": _variant("ACI", "FSO"),
    "ACI-A": _variant("ACI-A", "FSO"),
    "ACI-PA": _variant("ACI-PA", "FSO"),
    "ACI-G0": _variant("ACI", "FSO", gamma=0.0),
    "ACI-B0": _variant("ACI", "FSO", beta=0.0),
}

BUDGET_LABELS = ("MW", "ACI-IID", "ACI-DEP", "ACI-FSO")


@pytest.fixture(scope="session")
def acceptance_grid():
    """All acceptance runs at the protocol scale, executed once per session.

    Returns {"logs": {label: [MetricsLog]}, "summaries": {label: [dict]},
    "budget_wall_s": float}.
    """
    logs = {}
    t0 = time.perf_counter()
    for label in BUDGET_LABELS:
        logs[label] = run_replications(GRID_CONFIGS[label], PROTOCOL_SEEDS,
                                       workers=WORKERS)
    budget_wall = time.perf_counter() - t0
    for label, cfg in GRID_CONFIGS.items():
        if label not in logs:
            logs[label] = run_replications(cfg, PROTOCOL_SEEDS, workers=WORKERS)
    summaries = {label: [summarize(lg, GRID_CONFIGS[label]) for lg in runs]
                 for label, runs in logs.items()}
    return {"logs": logs, "summaries": summaries,
            "budget_wall_s": budget_wall}
