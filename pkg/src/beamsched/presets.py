"""Experiment presets reproducing the headline figures, plus the batch
replication runner.

channel-pdf     E2E gain histogram and outage-vs-threshold for one slave
switching-trace mobility and switching dynamics of one run
delay-cdf       packet-delivery delay CDFs across policies/switch models
time-budget     serving vs switching time fractions per policy
ablation        mean delay of the full policy vs its no-affinity (gamma=0)
                and no-penalty (beta=0) variants and the Max-Weight baseline
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import channel as ch
from .artifacts import (git_describe, merge_reports, t_ci_halfwidth,
                        write_run_artifacts, write_summary, _dump_json)
from .config import ConfigError, ExperimentConfig, apply_override, emit_config, validate
from .engine import MetricsLog, mean_from_hist, quantile_from_hist, run, time_budget
from .geometry import Formation, write_mobility_csv
from .streams import derive_streams, replication_seeds


class PresetError(ValueError):
    pass


def _run_one(args):
    cfg, seed = args
    return run(cfg, seed)


def run_replications(cfg: ExperimentConfig, seeds, workers: int = 1) -> list[MetricsLog]:
    """Independent replications; results ordered by the seed list, so any
    worker count yields identical output."""
    jobs = [(cfg, s) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def _series_dirs(out: Path, label: str, logs, cfg) -> list[Path]:
    dirs = []
    for log in logs:
        d = out / "runs" / f"{label}_seed{log.seed}"
        write_run_artifacts(log, cfg, d)
        dirs.append(d)
    return dirs


def _manifest(out: Path, name: str, cfg: ExperimentConfig, seeds,
              wall_s: float, extra=None) -> None:
    _dump_json({"preset": name, "seeds": list(seeds),
                "build": git_describe(), "wall_time_s": round(wall_s, 3),
                "schema_version": 1, "config_echo": emit_config(cfg),
                **(extra or {})}, out / "manifest.json")


def _hop_params(cfg: ExperimentConfig, slave_range_m: float):
    c = cfg.channel
    hop1 = ch.HopParams(
        distance_m=cfg.geometry.master_altitude_m,
        aperture_radius_m=c.master_aperture_m,
        beam_radius_m=c.beam_radius_hop1_m,
        extinction_per_m=c.extinction_per_m,
        log_amp_var=c.log_amp_var,
        lateral_jitter_var_m2=c.sigma_platform_m ** 2 + c.sigma_ground_m ** 2)
    hop2 = ch.HopParams(
        distance_m=slave_range_m,
        aperture_radius_m=c.receiver_aperture_m,
        beam_radius_m=c.beam_radius_hop2_m,
        extinction_per_m=c.extinction_per_m,
        log_amp_var=c.log_amp_var,
        lateral_jitter_var_m2=2.0 * c.sigma_platform_m ** 2,
        angular_jitter_var_rad2=((2.0 * c.sigma_theta_rad) ** 2
                                 + c.sigma_theta_rad ** 2
                                 + c.sigma_turb_rad ** 2),
        fov_half_angle_rad=c.fov_half_angle_rad)
    return hop1, hop2


def preset_channel_pdf(cfg: ExperimentConfig, out: Path, seeds) -> None:
    """Monte Carlo PDF of the end-to-end gain of a single slave at nominal
    range plus the outage curve over a decode-threshold sweep."""
    rng = derive_streams(seeds[0]).channel
    hop1, hop2 = _hop_params(cfg, cfg.geometry.slave_ring_radius_m)
    n = 1_000_000
    gains = ch.sample_e2e_gains(hop1, hop2, cfg.channel.mirror_reflectivity, n, rng)
    positive = gains[gains > 0]
    lo = max(positive.min(), 1e-12)
    edges = np.logspace(np.log10(lo), np.log10(gains.max() + 1e-12), 201)
    density, edges = np.histogram(gains, bins=edges, density=True)
    ch.write_channel_pdf_csv(out / "channel_pdf.csv", edges, density)

    h_th_nominal = ch.gain_threshold(cfg.radio.min_snr, cfg.radio.noise_std_a,
                                     cfg.radio.responsivity_a_w,
                                     cfg.radio.tx_power_w)
    grid = np.logspace(np.log10(h_th_nominal) - 2.5,
                       np.log10(h_th_nominal) + 2.5, 41)
    rows = ch.outage_curve(hop1, hop2, cfg.channel.mirror_reflectivity,
                           grid, n, rng)
    ch.write_outage_csv(out / "outage.csv", rows)
    _dump_json({"samples": n, "h_th_nominal": h_th_nominal,
                "p_out_at_nominal": float(np.mean(gains < h_th_nominal)),
                "fov_miss_fraction": float(np.mean(gains == 0.0)),
                "mean_gain": float(gains.mean())},
               out / "channel_summary.json")


def preset_switching_trace(cfg: ExperimentConfig, out: Path, seeds) -> None:
    """One run's mobility and switching dynamics (trace-sized horizon)."""
    cfg = replace(cfg, horizon_slots=min(cfg.horizon_slots, 30_000))
    log = run(cfg, seeds[0])
    write_run_artifacts(log, cfg, out / "runs" / f"trace_seed{log.seed}")
    g = cfg.geometry
    formation = Formation(n_slaves=g.n_slaves,
                          master_pos=(0.0, 0.0, g.master_altitude_m),
                          hex_radius_m=g.slave_ring_radius_m,
                          loiter_radius_m=g.loiter_radius_m,
                          loiter_rate_rad_s=g.loiter_rate_rad_s)
    current = [int(x) if x >= 0 else None for x in log.current_by_slot]
    write_mobility_csv(out / "mobility.csv", cfg.horizon_slots, cfg.slot_len_s,
                       formation, current, stride=10)


_CDF_SERIES = (("ACI", "IID"), ("ACI", "DEPENDENT"), ("ACI", "FSO"),
               ("ACI-A", "FSO"), ("ACI-PA", "FSO"))


def preset_delay_cdf(cfg: ExperimentConfig, out: Path, seeds) -> None:
    """Packet-delivery delay CDF for the policy/switch-model series."""
    quants = {}
    with open(out / "delay_cdf.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["series", "delay_slots", "cdf"])
        for policy, model in _CDF_SERIES:
            c = replace(cfg, policy=policy, switch_model=model)
            logs = run_replications(c, seeds, cfg.workers)
            _series_dirs(out, f"{policy}-{model}", logs, c)
            pooled: dict[int, int] = {}
            for log in logs:
                for d, n in log.censored_delay_hist().items():
                    pooled[d] = pooled.get(d, 0) + n
            total = sum(pooled.values())
            cum = 0
            label = f"{policy}({model})"
            for d in sorted(pooled):
                cum += pooled[d]
                w.writerow([label, d, f"{cum / total:.8f}"])
            quants[label] = {
                "q50": quantile_from_hist(pooled, 0.5),
                "q90": quantile_from_hist(pooled, 0.9),
                "q99": quantile_from_hist(pooled, 0.99),
                "mean": mean_from_hist(pooled), "n": total}
    _dump_json(quants, out / "delay_quantiles.json")


_BUDGET_SERIES = (("MW", "FSO"), ("ACI", "IID"), ("ACI", "DEPENDENT"),
                  ("ACI", "FSO"))


def preset_time_budget(cfg: ExperimentConfig, out: Path, seeds) -> None:
    """Serving/switching/idle fractions per policy and switch model."""
    rows = []
    for policy, model in _BUDGET_SERIES:
        c = replace(cfg, policy=policy, switch_model=model)
        logs = run_replications(c, seeds, cfg.workers)
        _series_dirs(out, f"{policy}-{model}", logs, c)
        budgets = [time_budget(log) for log in logs]
        for k, name in enumerate(("serving", "switching", "idle")):
            vals = [b[k] for b in budgets]
            rows.append((f"{policy}({model})", name,
                         sum(vals) / len(vals), t_ci_halfwidth(vals)))
    with open(out / "time_budget.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["series", "category", "fraction_mean", "ci95"])
        for r in rows:
            w.writerow([r[0], r[1], f"{r[2]:.6f}", f"{r[3]:.6f}"])


def _ablation_variants(cfg: ExperimentConfig):
    full = replace(cfg, policy="ACI", switch_model="FSO")
    no_aff = replace(full, policy_tuning=replace(cfg.policy_tuning, gamma=0.0))
    no_pen = replace(full, policy_tuning=replace(cfg.policy_tuning, beta=0.0))
    mw = replace(cfg, policy="MW", switch_model="FSO")
    return (("ACI(full)", full), ("ACI(gamma=0)", no_aff),
            ("ACI(beta=0)", no_pen), ("MW", mw))


def preset_ablation(cfg: ExperimentConfig, out: Path, seeds) -> None:
    """Mean packet delay of the full policy vs single-component removals
    and the Max-Weight baseline (lower is better)."""
    rows = []
    for label, c in _ablation_variants(cfg):
        logs = run_replications(c, seeds, cfg.workers)
        _series_dirs(out, label.replace("(", "_").strip(")").replace("=", ""),
                     logs, c)
        means = [mean_from_hist(log.censored_delay_hist()) for log in logs]
        rows.append((label, sum(means) / len(means), t_ci_halfwidth(means)))
    with open(out / "ablation.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["variant", "mean_delay_slots", "ci95"])
        for r in rows:
            w.writerow([r[0], f"{r[1]:.3f}", f"{r[2]:.3f}"])


PRESETS = {
    "channel-pdf": preset_channel_pdf,
    "switching-trace": preset_switching_trace,
    "delay-cdf": preset_delay_cdf,
    "time-budget": preset_time_budget,
    "ablation": preset_ablation,
}


def run_preset(name: str, overrides: dict[str, str] | None = None,
               out_dir=None, seed: int | None = None) -> Path:
    if name not in PRESETS:
        raise PresetError(f"unknown preset {name!r}; available: "
                          + ", ".join(sorted(PRESETS)))
    cfg = ExperimentConfig()
    for key, value in (overrides or {}).items():
        apply_override(cfg, key, value)
    validate(cfg)
    if seed is not None:
        cfg.seed = seed
    out = Path(out_dir) if out_dir else Path("results") / name
    out.mkdir(parents=True, exist_ok=True)
    seeds = replication_seeds(cfg.seed, cfg.replications)
    t0 = time.perf_counter()
    PRESETS[name](cfg, out, seeds)
    _manifest(out, name, cfg, seeds, time.perf_counter() - t0)
    return out
