"""Result files for runs and cross-replication report merging.

Every run directory is self-describing: metrics.json (scalars, versioned
with schema_version), delays.csv, budget.csv, switches.csv,
backlog_trace.csv, and an echo of the resolved configuration.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

from scipy import stats

from .config import ExperimentConfig, emit_config
from .engine import SCHEMA_VERSION, MetricsLog, summarize, time_budget


def _dump_json(obj, path) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, sort_keys=True, indent=1, separators=(",", ": "))
        f.write("\n")


def write_run_artifacts(log: MetricsLog, cfg: ExperimentConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics = summarize(log, cfg)
    _dump_json(metrics, out / "metrics.json")

    with open(out / "delays.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["queue", "delay_slots", "count"])
        for i, hist in enumerate(log.delay_hists):
            for d in sorted(hist):
                w.writerow([i, d, hist[d]])

    serving, switching, idle = time_budget(log)
    with open(out / "budget.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["category", "slots", "fraction"])
        for name, slots, frac in (("serving", log.class_counts_post[0], serving),
                                  ("switching", log.class_counts_post[1], switching),
                                  ("idle", log.class_counts_post[2], idle)):
            w.writerow([name, slots, f"{frac:.6f}"])

    with open(out / "switches.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["slot", "from", "to", "theta_deg", "K", "tau_slots",
                    "failed", "model"])
        for e in log.switch_events:
            w.writerow([e.slot, e.src, e.dst, f"{e.theta_deg:.3f}", e.attempts,
                        e.tau_slots, int(e.failed), log.switch_model])

    stride = log.backlog_trace_stride
    with open(out / "backlog_trace.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["slot", "total_bits"]
                   + [f"q{i}_bits" for i in range(log.n_queues)])
        for k, row in enumerate(log.backlog_trace):
            slot = k * stride
            if slot >= log.horizon:
                break
            w.writerow([slot, int(log.total_backlog_trace[slot])]
                       + [int(x) for x in row])

    if log.audit_rows:
        with open(out / "audit.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["slot", "action", "chosen", "G_chosen", "G_max",
                        "zeta", "margin_ratio"])
            for row in log.audit_rows:
                w.writerow(row)

    with open(out / "config_echo.ini", "w") as f:
        f.write(emit_config(cfg))
    return metrics


def t_ci_halfwidth(values, confidence: float = 0.95) -> float:
    """Student-t confidence halfwidth: t_{(1+c)/2, n-1} * s / sqrt(n)."""
    n = len(values)
    if n < 2:
        return 0.0
    s = stats.tstd(values)
    tq = stats.t.ppf(0.5 + confidence / 2.0, n - 1)
    return float(tq * s / math.sqrt(n))


_MERGE_KEYS = ("serving_fraction", "switching_fraction", "idle_fraction",
               "phi_sw", "mean_delay_slots", "delay_q50_slots",
               "delay_q99_slots", "n_switches", "failed_switches")


def merge_reports(run_dirs) -> dict:
    """Cross-replication summary: per-label means with 95% CIs plus
    pairwise mean-delay deltas.  All runs must share one schema_version."""
    if not run_dirs:
        raise ValueError("need at least one run directory")
    groups: dict[str, list[dict]] = {}
    for d in run_dirs:
        path = Path(d) / "metrics.json"
        with open(path) as f:
            m = json.load(f)
        if m.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(
                f"schema mismatch in {path}: {m.get('schema_version')} "
                f"!= {SCHEMA_VERSION}")
        groups.setdefault(m["label"], []).append(m)

    summary: dict = {"schema_version": SCHEMA_VERSION, "groups": {}, "deltas": {}}
    for label, runs in sorted(groups.items()):
        g: dict = {"n_runs": len(runs), "seeds": sorted(r["seed"] for r in runs)}
        for key in _MERGE_KEYS:
            vals = [r[key] for r in runs if r.get(key) is not None]
            if not vals:
                continue
            mean = sum(vals) / len(vals)
            g[key] = {"mean": mean, "ci95": t_ci_halfwidth(vals),
                      "min": min(vals), "max": max(vals)}
        summary["groups"][label] = g
    labels = sorted(groups)
    for a in labels:
        for b in labels:
            if a >= b:
                continue
            ga = summary["groups"][a].get("mean_delay_slots")
            gb = summary["groups"][b].get("mean_delay_slots")
            if ga and gb:
                summary["deltas"][f"{a} - {b}"] = ga["mean"] - gb["mean"]
    return summary


def write_summary(summary: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(summary, out / "summary.json")
    with open(out / "summary.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["label", "metric", "mean", "ci95", "min", "max", "n_runs"])
        for label, g in summary["groups"].items():
            for key in _MERGE_KEYS:
                if key in g:
                    w.writerow([label, key, g[key]["mean"], g[key]["ci95"],
                                g[key]["min"], g[key]["max"], g["n_runs"]])


def git_describe(repo_dir=None) -> str:
    import subprocess
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10,
                             cwd=repo_dir or os.getcwd())
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"
