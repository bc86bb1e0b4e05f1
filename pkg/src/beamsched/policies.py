"""Scheduling policies: Max-Weight and the switch-aware family.

Max-Weight picks argmax Q_i * mu_i every slot and ignores switch costs.

The switch-aware index policy scores every candidate (including staying
put) by

    weight_i * amortized_goodput(i) * modulator(i)

where the amortized goodput spreads the forecast frame bits over the switch
plus dwell time, and the modulator (1 + gamma * chi) / (1 + beta * tau)
trades an affinity bonus for near targets against a penalty on the switch
duration in slots.  The weight is the backlog (throughput-optimal form),
the head-of-line age times goodput (latency variant), or the age alone
(pure-age variant).

Staying is scored as the candidate i == current with tau = 0.  Self
transition carries no affinity bonus by default (chi_ii = 0, so the stay
modulator is 1): granting the stay score the full (1 + gamma) bonus makes
removing the affinity term *reduce* switching and shorten queue cycles,
inverting the observed effect of the no-affinity ablation.  The self bonus
is configurable for sensitivity studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class PolicyConfig:
    beta: float = 1.0
    gamma: float = 1.0
    frame_len: int = 3
    proc_overhead_s: float = 0.0
    self_affinity: float = 0.0
    affinity_theta_scale_deg: float = 75.0
    outage_halt_slots: int = 2
    shortfall_factor: float = 0.5
    dominance_margin: float = 2.0

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise ValueError("beta and gamma must be nonnegative")
        if self.frame_len < 1:
            raise ValueError("frame length must be >= 1 slot")
        if not 0.0 <= self.self_affinity <= 1.0:
            raise ValueError("self affinity must be in [0, 1]")
        if self.proc_overhead_s < 0:
            raise ValueError("processing overhead must be nonnegative")


@dataclass
class PolicySnapshot:
    """System state handed to a policy at a decision epoch: backlogs,
    instantaneous rates, HoL ages, and per-candidate switch forecasts
    relative to the current server position."""
    slot: int
    current: int | None
    backlogs: list
    rates_bps: list
    hol_ages: list
    tau_forecast_slots: list
    chi: list
    available: list
    slot_len_s: float


@dataclass
class Decision:
    action: str                    # "stay" | "switch" | "idle"
    target: int | None = None
    dwell_slots: int = 1
    forecast_rate_bps: float = 0.0
    scores: list = field(default_factory=list)


def estimated_frame_bits(rate_bps: float, frame_len: int, slot_len_s: float,
                         proc_overhead_s: float = 0.0) -> float:
    """Forecast bits over a dwell: L * R * (slot_len - t_p)+."""
    if frame_len < 1:
        raise ValueError("frame length must be >= 1")
    usable = max(slot_len_s - proc_overhead_s, 0.0)
    return frame_len * rate_bps * usable


def amortized_goodput(bits: float, tau_slots: float, frame_len: int,
                      slot_len_s: float) -> float:
    """Forecast frame bits over the switch-plus-dwell investment (bits/s).
    The switch duration enters in seconds (tau * slot_len)."""
    if tau_slots < 0 or frame_len < 1:
        raise ValueError("need tau >= 0 and frame length >= 1")
    return bits / ((tau_slots + frame_len) * slot_len_s)


def switching_modulator(tau_slots: float, chi: float,
                        beta: float, gamma: float) -> float:
    """(1 + gamma * chi) / (1 + beta * tau); tau in slots."""
    if tau_slots < 0:
        raise ValueError("tau must be nonnegative")
    return (1.0 + gamma * chi) / (1.0 + beta * tau_slots)


def zeta_bound(beta: float, gamma: float, tau_max_slots: float) -> float:
    """Guaranteed fraction of the unscaled objective achieved by the
    modulated argmax: zeta = f_min / f_max = 1 / ((1 + beta tau_max)(1 + gamma))."""
    if not math.isfinite(tau_max_slots):
        raise ValueError("tau_max must be finite")
    return 1.0 / ((1.0 + beta * tau_max_slots) * (1.0 + gamma))


def starvation_threshold(q_i: float, er_i: float, er_j: float,
                         f_ii: float, f_ij: float, tau_ij_slots: float,
                         frame_len: int, slot_len_s: float) -> float:
    """Backlog of queue j above which staying on i can no longer win:
    Theta = Q_i * (E[R_i] f_ii) / (E[R_j] f_ij) * (1 + tau / L), with the
    switch delay and dwell compared in consistent time units."""
    if er_j <= 0:
        return math.inf
    return (q_i * (er_i * f_ii) / (er_j * f_ij)
            * (1.0 + tau_ij_slots * slot_len_s / (frame_len * slot_len_s)))


def _argmax_lowest_index(values) -> int:
    best, best_i = -math.inf, 0
    for i, v in enumerate(values):
        if v > best:
            best, best_i = v, i
    return best_i


def mw_select(backlogs, mu_slot_bits, current: int | None) -> Decision:
    """argmax Q_i * mu_i; ties broken by lowest index.  All-zero weights
    keep the server where it is (idle if it has no position yet)."""
    if len(backlogs) != len(mu_slot_bits) or not backlogs:
        raise ValueError("backlog and capacity vectors must match, length >= 1")
    weights = [q * m for q, m in zip(backlogs, mu_slot_bits)]
    best = _argmax_lowest_index(weights)
    if weights[best] <= 0:
        if current is None:
            return Decision("idle", scores=weights)
        return Decision("stay", target=current, scores=weights)
    if best == current:
        return Decision("stay", target=current, scores=weights)
    return Decision("switch", target=best, scores=weights)


def _index_scores(snap: PolicySnapshot, cfg: PolicyConfig, weights) -> list:
    """Per-candidate scores weight * amortized_goodput * modulator.
    Unavailable candidates score -inf.  The current queue is scored as a
    stay (tau = 0, chi = self_affinity); with no current position every
    candidate is scored switch-free (initial pointing is free)."""
    L = cfg.frame_len
    dt = snap.slot_len_s
    usable = max(dt - cfg.proc_overhead_s, 0.0)
    scores = []
    for i in range(len(weights)):
        if not snap.available[i]:
            scores.append(-math.inf)
            continue
        if snap.current is None or i == snap.current:
            tau, chi = 0.0, cfg.self_affinity if snap.current is not None else 0.0
        else:
            tau, chi = snap.tau_forecast_slots[i], snap.chi[i]
        bits = L * snap.rates_bps[i] * usable
        goodput = bits / ((tau + L) * dt)
        f = (1.0 + cfg.gamma * chi) / (1.0 + cfg.beta * tau)
        scores.append(weights[i] * goodput * f)
    return scores


def _select_from_scores(snap: PolicySnapshot, scores, cfg: PolicyConfig,
                        idle_when_all_zero: bool = False) -> Decision:
    best = _argmax_lowest_index(scores)
    if not math.isfinite(scores[best]) or scores[best] <= 0:
        if snap.current is None or idle_when_all_zero:
            return Decision("idle", scores=scores)
        return Decision("stay", target=snap.current,
                        dwell_slots=cfg.frame_len,
                        forecast_rate_bps=snap.rates_bps[snap.current],
                        scores=scores)
    if best == snap.current or snap.current is None:
        tgt = best if snap.current is None else snap.current
        return Decision("stay" if snap.current is not None else "switch",
                        target=tgt, dwell_slots=cfg.frame_len,
                        forecast_rate_bps=snap.rates_bps[tgt], scores=scores)
    return Decision("switch", target=best, dwell_slots=cfg.frame_len,
                    forecast_rate_bps=snap.rates_bps[best], scores=scores)


def aci_select(snap: PolicySnapshot, cfg: PolicyConfig) -> Decision:
    """Backlog-weighted switch-aware selection."""
    scores = _index_scores(snap, cfg, snap.backlogs)
    return _select_from_scores(snap, scores, cfg)


def aci_a_select(snap: PolicySnapshot, cfg: PolicyConfig) -> Decision:
    """Age-aware variant: HoL age replaces backlog; goodput and modulator
    kept.  All-empty system (all ages zero) parks the server idle."""
    scores = _index_scores(snap, cfg, snap.hol_ages)
    all_empty = all(a == 0 for a in snap.hol_ages)
    return _select_from_scores(snap, scores, cfg, idle_when_all_zero=all_empty)


def aci_pa_select(snap: PolicySnapshot, cfg: PolicyConfig) -> Decision:
    """Pure-age variant: argmax HoL age, no channel or switch term.  A
    zero-rate queue with the oldest head is still selected."""
    scores = [float(a) if avail else -math.inf
              for a, avail in zip(snap.hol_ages, snap.available)]
    all_empty = all(a == 0 for a in snap.hol_ages)
    return _select_from_scores(snap, scores, cfg, idle_when_all_zero=all_empty)


def early_halt_check(backlog_bits: int, outage_run_slots: int,
                     realized_rate_mean_bps: float, realized_rate_count: int,
                     forecast_rate_bps: float, current_score: float,
                     best_other_score: float, cfg: PolicyConfig) -> str | None:
    """Reason a committed frame should end early, or None.

    (i) queue drained; (ii) persistent outage; (iii) realized rate running
    consistently below the commit-time forecast; (iv) another candidate's
    score dominating the current one.
    """
    if backlog_bits <= 0:
        return "drained"
    if outage_run_slots >= cfg.outage_halt_slots:
        return "outage"
    if (realized_rate_count >= 2 and forecast_rate_bps > 0
            and realized_rate_mean_bps < cfg.shortfall_factor * forecast_rate_bps):
        return "shortfall"
    if best_other_score > cfg.dominance_margin * current_score:
        return "dominated"
    return None
