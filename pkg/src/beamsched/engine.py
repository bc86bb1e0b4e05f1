"""Slotted simulation loop and run-level metrics.

Per-slot order: (1) the block-fading channel is frozen for the slot (all
rates pre-drawn per (slot, queue)); (2) this slot's arrivals are staged;
(3) if a blackout is active the slot is lost to switching, else if a frame
is committed the early-halt conditions run, else the policy decides; (4)
service applies to the start-of-slot backlog; (5) staged arrivals join the
ledgers and the slot is logged.

Arrival and channel randomness is pre-generated from dedicated streams, so
two policies given the same seed see identical arrivals and rates
(common-random-numbers); only the switching stream is policy-driven.
All bit counters are integers: conservation is exact.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, stats

from . import policies as pol
from . import queueing as qmod
from . import switching as sw
from .config import ExperimentConfig
from .geometry import Formation, ranges_and_units
from .streams import derive_streams

SCHEMA_VERSION = 1
_CHUNK = 8192

CLS_SERVE, CLS_SWITCH, CLS_IDLE = 0, 1, 2


class EmptySampleError(ValueError):
    pass


@dataclass
class SwitchEvent:
    slot: int
    src: int
    dst: int
    theta_deg: float
    attempts: int
    tau_slots: int
    failed: bool


@dataclass
class MetricsLog:
    policy: str
    switch_model: str
    seed: int
    horizon: int
    slot_len_s: float
    n_queues: int
    warmup_slots: int
    # slot classification, full horizon and post-warmup
    class_counts: list = field(default_factory=lambda: [0, 0, 0])
    class_counts_post: list = field(default_factory=lambda: [0, 0, 0])
    # per-queue aggregates
    arrived_bits: list = field(default_factory=list)
    departed_bits: list = field(default_factory=list)
    arrived_packets: list = field(default_factory=list)
    departed_packets: list = field(default_factory=list)
    final_backlog_bits: list = field(default_factory=list)
    serve_slots: list = field(default_factory=list)
    max_service_gap: list = field(default_factory=list)
    delay_hists: list = field(default_factory=list)      # per queue {delay: n}
    visit_slots: list = field(default_factory=list)
    visit_counts: list = field(default_factory=list)
    residual_age_hist: dict = field(default_factory=dict)
    mean_service_rate_bps: list = field(default_factory=list)
    lambdas_bps: list = field(default_factory=list)
    # switching aggregates
    transition_counts: list = field(default_factory=list)   # NxN
    transition_tau_sums: list = field(default_factory=list)  # NxN (slots)
    switch_events: list = field(default_factory=list)
    failed_switches: int = 0
    halts: dict = field(default_factory=dict)
    # traces
    total_backlog_trace: np.ndarray | None = None
    backlog_trace_stride: int = 100
    backlog_trace: np.ndarray | None = None              # strided per queue
    current_by_slot: np.ndarray | None = None            # int8: -1 idle, -2 switching
    # audit / determinism
    audit_rows: list = field(default_factory=list)
    zeta_violations: int = -1
    zeta_value: float = 0.0
    arrivals_sha256: str = ""
    channel_sha256: str = ""

    def combined_delay_hist(self) -> dict:
        out: dict[int, int] = {}
        for h in self.delay_hists:
            for d, n in h.items():
                out[d] = out.get(d, 0) + n
        return out

    def censored_delay_hist(self) -> dict:
        """Departed delays plus the ages of packets still queued at the
        horizon (their eventual delays are at least that old).  For stable
        runs this matches the departed histogram; for runs whose backlog
        outgrows the horizon it keeps the delay estimate honest instead of
        counting only the few packets that made it out."""
        out = self.combined_delay_hist()
        for d, n in self.residual_age_hist.items():
            out[d] = out.get(d, 0) + n
        return out


def quantile_from_hist(hist: dict, q: float) -> float:
    """Order-statistics quantile with the midpoint convention at exact
    cut points (median of {1,2,3,4} is 2.5)."""
    n = sum(hist.values())
    if n == 0:
        raise EmptySampleError("no delay samples")
    if not 0 < q <= 1:
        raise ValueError("quantile must be in (0, 1]")
    items = sorted(hist.items())
    target = q * n
    k = math.ceil(target)
    exact = abs(target - round(target)) < 1e-9 and round(target) >= 1
    k = min(k if not exact else int(round(target)), n)
    cum = 0
    for idx, (value, cnt) in enumerate(items):
        cum += cnt
        if cum >= k:
            if exact and cum == k and k < n:
                nxt = items[idx + 1][0]
                return 0.5 * (value + nxt)
            return float(value)
    return float(items[-1][0])


def mean_from_hist(hist: dict) -> float:
    n = sum(hist.values())
    if n == 0:
        raise EmptySampleError("no delay samples")
    return sum(d * c for d, c in hist.items()) / n


def delay_cdf(hist: dict, quantiles=(0.5, 0.9, 0.99)) -> dict:
    """Empirical delay CDF summary: requested quantiles plus the mean."""
    return {"n": sum(hist.values()),
            "mean_slots": mean_from_hist(hist),
            **{f"q{q}": quantile_from_hist(hist, q) for q in quantiles}}


def time_budget(log: MetricsLog) -> tuple[float, float, float]:
    """(serving, switching, idle) fractions of the post-warmup horizon;
    sums to 1 exactly."""
    s, w, i = log.class_counts_post
    total = s + w + i
    if total == 0:
        return (0.0, 0.0, 1.0)
    fs, fw = s / total, w / total
    return (fs, fw, max(0.0, 1.0 - fs - fw))


def phi_sw(log: MetricsLog) -> float:
    """Fraction of busy time lost to switching, from empirical transition
    frequencies and visit lengths: sum p_ij tau_ij / (sum v_k + sum p_ij tau_ij)."""
    switch_slots = sum(sum(row) for row in log.transition_tau_sums)
    visit_slots = sum(log.visit_slots)
    denom = visit_slots + switch_slots
    return switch_slots / denom if denom else 0.0


def feasibility_check(lambdas_bps, service_rates_bps, phi: float) -> tuple[str, float]:
    """Inner-bound verdict: INSIDE iff sum lambda_i / r_i < 1 - phi_sw."""
    load = 0.0
    for lam, r in zip(lambdas_bps, service_rates_bps):
        if r <= 0:
            raise ValueError("mean service rates must be positive")
        load += lam / r
    margin = (1.0 - phi) - load
    return ("INSIDE" if margin > 0 else "OUTSIDE"), margin


def stability_probe(total_backlog: np.ndarray, window: int | None = None,
                    ratio_c: float = 3.0, alpha: float = 0.05) -> str:
    """STABLE unless the tail of the total-backlog trace outgrew its middle
    (max over last window > c * max over middle window) or the last-half
    trend is statistically positive at the given level."""
    trace = np.asarray(total_backlog, dtype=float)
    n = len(trace)
    if window is None:
        window = n // 5
    if n < 3 * window or window < 1:
        raise ValueError("horizon must cover at least 3 windows")
    last = trace[-window:]
    mid_start = (n - window) // 2
    mid = trace[mid_start:mid_start + window]
    max_mid, max_last = float(mid.max()), float(last.max())
    ratio_ok = max_last <= ratio_c * max_mid if max_mid > 0 else max_last == 0

    half = trace[n // 2:]
    nb = 20
    usable = len(half) - len(half) % nb
    buckets = half[:usable].reshape(nb, -1).mean(axis=1)
    xs = np.arange(nb, dtype=float)
    growing = False
    level = float(buckets.mean())
    if np.ptp(buckets) > 0 and level > 0:
        res = stats.linregress(xs, buckets)
        rise = res.slope * (nb - 1)
        # material, statistically positive trend (bucket means smooth out
        # the service-cycle sawtooth; a material-rise floor keeps residual
        # cycle correlation from flagging flat traces)
        if res.slope > 0 and res.pvalue / 2.0 < alpha and rise > 0.25 * level:
            growing = True
    return "STABLE" if (ratio_ok and not growing) else "GROWING"


# ---------------------------------------------------------------------------


def _pregen_channel(cfg: ExperimentConfig, ranges: np.ndarray, rng):
    """Vectorized block-fading rates per (slot, queue); hop 1 is common to
    all slaves within a slot."""
    ch, radio = cfg.channel, cfg.radio
    T, N = ranges.shape
    z1 = cfg.geometry.master_altitude_m

    nu1 = math.sqrt(math.pi) * ch.master_aperture_m / (math.sqrt(2.0) * ch.beam_radius_hop1_m)
    from scipy.special import erf as _erf
    a01 = float(_erf(nu1)) ** 2
    weq1 = ch.beam_radius_hop1_m ** 2 * math.sqrt(
        math.pi * float(_erf(nu1)) / (2.0 * nu1 * math.exp(-nu1 * nu1)))
    nu2 = math.sqrt(math.pi) * ch.receiver_aperture_m / (math.sqrt(2.0) * ch.beam_radius_hop2_m)
    a02 = float(_erf(nu2)) ** 2
    weq2 = ch.beam_radius_hop2_m ** 2 * math.sqrt(
        math.pi * float(_erf(nu2)) / (2.0 * nu2 * math.exp(-nu2 * nu2)))

    hl1 = math.exp(-ch.extinction_per_m * z1)
    hl2 = np.exp(-ch.extinction_per_m * ranges)

    v = ch.log_amp_var
    if v > 0:
        ha1 = np.exp(rng.normal(-2.0 * v, math.sqrt(4.0 * v), T))
        ha2 = np.exp(rng.normal(-2.0 * v, math.sqrt(4.0 * v), (T, N)))
    else:
        ha1, ha2 = np.ones(T), np.ones((T, N))

    pg_var = ch.sigma_platform_m ** 2 + ch.sigma_ground_m ** 2
    r1sq = (rng.normal(0.0, math.sqrt(pg_var), (T, 2)) ** 2).sum(axis=1) \
        if pg_var > 0 else np.zeros(T)
    hp1 = np.exp(-2.0 * r1sq / weq1)

    lat_var = 2.0 * ch.sigma_platform_m ** 2
    ang_var = (2.0 * ch.sigma_theta_rad) ** 2 + ch.sigma_theta_rad ** 2 \
        + ch.sigma_turb_rad ** 2
    lat = rng.normal(0.0, math.sqrt(lat_var), (T, N, 2)) if lat_var > 0 \
        else np.zeros((T, N, 2))
    ang = rng.normal(0.0, math.sqrt(ang_var), (T, N, 2)) if ang_var > 0 \
        else np.zeros((T, N, 2))
    vec = lat + ranges[:, :, None] * ang
    r2sq = np.einsum("tnk,tnk->tn", vec, vec)
    hp2 = np.exp(-2.0 * r2sq / weq2)
    gate = ranges * ch.fov_half_angle_rad
    hp2[r2sq > gate * gate] = 0.0

    gains = (ch.mirror_reflectivity * hl1 * a01 * a02) \
        * (ha1 * hp1)[:, None] * hl2 * ha2 * hp2

    x = radio.responsivity_a_w * radio.tx_power_w / radio.noise_std_a
    snr = (x * gains) ** 2
    rates = np.where(snr >= radio.min_snr,
                     radio.efficiency * radio.bandwidth_hz
                     * np.log2(1.0 + snr / radio.snr_gap), 0.0)
    return rates, (lat_var, ang_var)


def _ar1_path(rng, phi: float, sigma_y: float, shape) -> np.ndarray:
    """Stationary log AR(1) trajectory (slot-major)."""
    if sigma_y <= 0:
        return np.zeros(shape)
    innov = sigma_y * math.sqrt(1.0 - phi * phi)
    eps = rng.normal(0.0, innov, shape)
    y0 = rng.normal(0.0, sigma_y, shape[1:]) if len(shape) > 1 \
        else float(rng.normal(0.0, sigma_y))
    zi = np.atleast_1d(phi * y0)[None, :] if len(shape) > 1 else [phi * y0]
    y, _ = signal.lfilter([1.0], [1.0, -phi], eps, axis=0, zi=zi)
    return y


def _pregen_acquisition(cfg: ExperimentConfig, ranges: np.ndarray,
                        lat_var: float, ang_var: float, rng) -> np.ndarray:
    """Per-(slot, slave) acquisition success probability.

    The open-loop pointing spread during acquisition is the tracking jitter
    scaled by a slowly drifting factor with a global (shared-atmosphere)
    and a per-slave log AR(1) component, which makes switch times
    temporally correlated as p_i(t) drifts.  Probabilities below the reject
    level are geometric rejections: the link is treated as impossible this
    epoch (p = 0) and the candidate is unavailable; survivors are floored
    at p_floor so the switch time stays bounded."""
    s = cfg.switching
    T, N = ranges.shape
    phi = math.exp(-cfg.slot_len_s / s.acq_drift_corr_s)
    y = _ar1_path(rng, phi, s.acq_drift_sigma_global, (T, 1)) \
        + _ar1_path(rng, phi, s.acq_drift_sigma, (T, N))
    scale = s.acq_scale_base * np.exp(y)
    sig2 = lat_var + ranges ** 2 * ang_var * scale ** 2
    gate = ranges * cfg.channel.fov_half_angle_rad
    with np.errstate(divide="ignore", invalid="ignore"):
        hit = np.where(sig2 > 0, 1.0 - np.exp(-gate * gate / (2.0 * sig2)), 1.0)
    p_raw = s.p_base * hit
    p = np.clip(p_raw, s.p_floor, 1.0)
    p[p_raw < s.p_reject] = 0.0
    return p


class Simulation:
    """One seeded run of one policy under one switch-time model."""

    def __init__(self, cfg: ExperimentConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.streams = derive_streams(seed)
        g = cfg.geometry
        self.formation = Formation(
            n_slaves=g.n_slaves,
            master_pos=(0.0, 0.0, g.master_altitude_m),
            hex_radius_m=g.slave_ring_radius_m,
            loiter_radius_m=g.loiter_radius_m,
            loiter_rate_rad_s=g.loiter_rate_rad_s)
        T, N = cfg.horizon_slots, g.n_slaves
        self.T, self.N = T, N
        self.dt = cfg.slot_len_s

        slot_times = np.arange(T, dtype=float) * self.dt
        self.ranges, units = ranges_and_units(self.formation, slot_times)
        self._ux = np.ascontiguousarray(units[:, :, 0])
        self._uy = np.ascontiguousarray(units[:, :, 1])
        self._uz = np.ascontiguousarray(units[:, :, 2])

        rates, (lat_var, ang_var) = _pregen_channel(cfg, self.ranges,
                                                    self.streams.channel)
        # policies and service both see the throughput-capped rate
        self.rates_bps = np.minimum(rates, cfg.radio.throughput_cap_bps)
        usable = max(self.dt - cfg.policy_tuning.proc_overhead_s, 0.0)
        self.mu_slot_bits = (self.rates_bps * usable).astype(np.int64)
        self.mean_rate_bps = self.rates_bps.mean(axis=0)

        lambdas = cfg.lambda_per_queue_bps()
        pkt = cfg.traffic.packet_bits
        means = np.array([lam * self.dt / pkt for lam in lambdas])
        self.arr_cnt = self.streams.arrivals.poisson(
            means[None, :].repeat(T, axis=0)).astype(np.int64)
        self.lambdas = lambdas
        self.pkt = pkt

        self.arrivals_sha = hashlib.sha256(self.arr_cnt.tobytes()).hexdigest()
        self.channel_sha = hashlib.sha256(self.rates_bps.tobytes()).hexdigest()

        self.p_hat = _pregen_acquisition(cfg, self.ranges, lat_var, ang_var,
                                         self.streams.acquisition)
        self.switch_model = self._build_switch_model()

        p = cfg.policy_tuning
        self.pcfg = pol.PolicyConfig(
            beta=p.beta, gamma=p.gamma, frame_len=p.frame_len,
            proc_overhead_s=p.proc_overhead_s, self_affinity=p.self_affinity,
            affinity_theta_scale_deg=p.affinity_theta_scale_deg,
            outage_halt_slots=p.outage_halt_slots,
            shortfall_factor=p.shortfall_factor,
            dominance_margin=p.dominance_margin)
        self.frame_len = 1 if cfg.policy == "MW" else p.frame_len

        # mutable run state
        self.t = 0
        self.queues = [qmod.QueueState(lambda_bps=lam) for lam in lambdas]
        self.current: int | None = None
        self.blackout = 0
        self.pending_target = -1
        self.pending_failed = False
        self.pending_forecast = 0.0
        self.frame_remaining = 0
        self.frame_forecast = 0.0
        self.outage_run = 0
        self.realized_sum = 0.0
        self.realized_cnt = 0
        self._chunk_lo = -1
        self._chunk = None

        self.warmup = int(cfg.metrics.warmup_frac * T)
        self.log = MetricsLog(
            policy=cfg.policy, switch_model=cfg.switch_model, seed=seed,
            horizon=T, slot_len_s=self.dt, n_queues=N, warmup_slots=self.warmup,
            arrived_bits=[0] * N, departed_bits=[0] * N,
            arrived_packets=[0] * N, departed_packets=[0] * N,
            final_backlog_bits=[0] * N, serve_slots=[0] * N,
            max_service_gap=[T] * N, delay_hists=[dict() for _ in range(N)],
            visit_slots=[0] * N, visit_counts=[0] * N,
            mean_service_rate_bps=[float(x) for x in self.mean_rate_bps],
            lambdas_bps=list(lambdas),
            transition_counts=[[0] * N for _ in range(N)],
            transition_tau_sums=[[0] * N for _ in range(N)],
            backlog_trace_stride=cfg.metrics.trace_stride,
            arrivals_sha256=self.arrivals_sha, channel_sha256=self.channel_sha)
        self.log.zeta_value = pol.zeta_bound(p.beta, p.gamma,
                                             self.switch_model.tau_max_slots)
        self.log.zeta_violations = 0 if cfg.audit else -1
        self._trace = np.zeros(T, dtype=np.int64)
        self._qtrace = np.zeros((math.ceil(T / cfg.metrics.trace_stride), N),
                                dtype=np.int64)
        self._curtrace = np.full(T, -1, dtype=np.int16)
        self._last_opp = [-1] * N
        self._first_opp = [-1] * N
        self._gap = [0] * N
        self._visit_q = -1
        self._visit_len = 0

    # -- switch model -----------------------------------------------------

    def _theta_deg(self, i: int, j: int, slot: int) -> float:
        d = (self._ux[slot, i] * self._ux[slot, j]
             + self._uy[slot, i] * self._uy[slot, j]
             + self._uz[slot, i] * self._uz[slot, j])
        return math.degrees(math.acos(min(1.0, max(-1.0, float(d)))))

    def _build_switch_model(self):
        cfg = self.cfg
        s = cfg.switching
        limits = sw.GimbalLimits(s.v_max_deg_s, s.a_max_deg_s2, s.j_max_deg_s3)
        acq = sw.AcquisitionParams(s.t_fsm_s, s.t_pilot_s)
        p_hat = self.p_hat

        def p_fn(slot, j):
            return float(p_hat[slot, j])

        fso = sw.FsoSwitchModel(limits, acq, self.dt, self._theta_deg, p_fn,
                                p_floor=s.p_floor, k_cap=s.k_cap,
                                time_scale=s.switch_time_scale)
        if cfg.switch_model == "FSO":
            return fso
        means = sw.calibrate_ring_means(fso, self.N, self.T,
                                        self.streams.calibration,
                                        samples_per_class=s.calib_samples)
        if cfg.switch_model == "IID":
            return sw.IidSwitchModel(means, s.iid_sigma, self.N,
                                     fso.tau_max_slots, theta_fn=self._theta_deg)
        return sw.DependentSwitchModel(
            means, self.N, fso.tau_max_slots, self.streams.calibration,
            phi_global=s.ar_phi_global, phi_target=s.ar_phi_target,
            sigma_y_global=s.ar_sigma_global, sigma_y_target=s.ar_sigma_target,
            theta_fn=self._theta_deg)

    # -- per-slot data ----------------------------------------------------

    def _rows(self, t: int):
        if self._chunk is None or not (self._chunk_lo <= t < self._chunk_lo + _CHUNK):
            lo = (t // _CHUNK) * _CHUNK
            hi = min(lo + _CHUNK, self.T)
            self._chunk_lo = lo
            self._chunk = (self.arr_cnt[lo:hi].tolist(),
                           self.mu_slot_bits[lo:hi].tolist(),
                           self.rates_bps[lo:hi].tolist())
        k = t - self._chunk_lo
        c = self._chunk
        return c[0][k], c[1][k], c[2][k]

    # -- decision machinery -------------------------------------------------

    def _snapshot(self, t: int, rate_row) -> pol.PolicySnapshot:
        cur = self.current
        n = self.N
        taus = [0.0] * n
        chis = [0.0] * n
        avail = [True] * n
        if cur is not None:
            for j in range(n):
                if j == cur:
                    continue
                try:
                    taus[j] = self.switch_model.forecast_slots(cur, j, t)
                except sw.LinkUnavailableError:
                    avail[j] = False
                    continue
                theta = self._theta_deg(cur, j, t)
                chis[j] = max(0.0, 1.0 - theta
                              / self.pcfg.affinity_theta_scale_deg)
        return pol.PolicySnapshot(
            slot=t, current=cur,
            backlogs=[q.backlog_bits for q in self.queues],
            rates_bps=rate_row,
            hol_ages=[qmod.hol_age(q, t) for q in self.queues],
            tau_forecast_slots=taus, chi=chis, available=avail,
            slot_len_s=self.dt)

    def _decide(self, t: int, mu_row, rate_row) -> pol.Decision:
        policy = self.cfg.policy
        if policy == "MW":
            backlogs = [q.backlog_bits for q in self.queues]
            return pol.mw_select(backlogs, mu_row, self.current)
        snap = self._snapshot(t, rate_row)
        if policy == "ACI":
            d = pol.aci_select(snap, self.pcfg)
        elif policy == "ACI-A":
            d = pol.aci_a_select(snap, self.pcfg)
        else:
            d = pol.aci_pa_select(snap, self.pcfg)
        if self.cfg.audit and policy == "ACI":
            self._audit(snap, d)
        return d

    def _audit(self, snap: pol.PolicySnapshot, d: pol.Decision) -> None:
        """Exact check of the constant-fraction lemma on the unscaled
        objective G = weight * amortized goodput (same forecasts the policy
        used, no modulator)."""
        L = self.pcfg.frame_len
        dt = snap.slot_len_s
        usable = max(dt - self.pcfg.proc_overhead_s, 0.0)
        gs = []
        for i in range(self.N):
            if not snap.available[i]:
                gs.append(0.0)
                continue
            tau = 0.0 if (snap.current is None or i == snap.current) \
                else snap.tau_forecast_slots[i]
            bits = L * snap.rates_bps[i] * usable
            gs.append(snap.backlogs[i] * bits / ((tau + L) * dt))
        gmax = max(gs) if gs else 0.0
        star = d.target if d.action in ("stay", "switch") else None
        if star is None or gmax <= 0:
            return
        zeta = self.log.zeta_value
        ok = gs[star] + 1e-9 * gmax >= zeta * gmax
        if not ok:
            self.log.zeta_violations += 1
        self.log.audit_rows.append(
            (snap.slot, d.action, star, gs[star], gmax, zeta,
             gs[star] / (zeta * gmax) if gmax > 0 else math.inf))

    def _policy_scores(self, t: int, rate_row):
        """Candidate scores used for the mid-frame dominance halt (same
        scoring as the decision rule)."""
        snap = self._snapshot(t, rate_row)
        policy = self.cfg.policy
        if policy == "ACI":
            return pol._index_scores(snap, self.pcfg, snap.backlogs)
        if policy == "ACI-A":
            return pol._index_scores(snap, self.pcfg, snap.hol_ages)
        return [float(a) if av else -math.inf
                for a, av in zip(snap.hol_ages, snap.available)]

    # -- slot step ----------------------------------------------------------

    def step(self) -> None:
        t = self.t
        cnt_row, mu_row, rate_row = self._rows(t)
        log = self.log
        serving = -1
        cls = CLS_IDLE

        if self.blackout > 0:
            cls = CLS_SWITCH
            self.blackout -= 1
            if self.blackout == 0:
                if self.pending_failed:
                    self.current = None
                else:
                    self.current = self.pending_target
                    self.frame_remaining = self.frame_len
                    self.frame_forecast = self.pending_forecast
                    self.outage_run = 0
                    self.realized_sum = 0.0
                    self.realized_cnt = 0
        elif self.current is None or self.frame_remaining <= 0:
            d = self._decide(t, mu_row, rate_row)
            if d.action == "idle":
                self.current = None
                cls = CLS_IDLE
            elif d.action == "stay" or self.current is None:
                tgt = d.target if d.target is not None else self.current
                self.current = tgt
                self.frame_remaining = self.frame_len - 1
                self.frame_forecast = d.forecast_rate_bps or rate_row[tgt]
                self.outage_run = 0
                self.realized_sum = 0.0
                self.realized_cnt = 0
                serving = tgt
                cls = CLS_SERVE
            else:
                tgt = d.target
                sample = None
                try:
                    sample = self.switch_model.sample(self.current, tgt, t,
                                                      self.streams.switching)
                except sw.LinkUnavailableError:
                    # geometric rejection at commit: lose the slot, re-decide
                    self.current = None
                    cls = CLS_IDLE
                if sample is not None:
                    log.transition_counts[self.current][tgt] += 1
                    log.transition_tau_sums[self.current][tgt] += sample.tau_slots
                    log.switch_events.append(SwitchEvent(
                        t, self.current, tgt, sample.theta_deg, sample.attempts,
                        sample.tau_slots, sample.failed))
                    if sample.failed:
                        log.failed_switches += 1
                    self.blackout = sample.tau_slots
                    self.pending_target = tgt
                    self.pending_failed = sample.failed
                    self.pending_forecast = d.forecast_rate_bps
                    cls = CLS_SWITCH
                    self.blackout -= 1
                    if self.blackout == 0:
                        if sample.failed:
                            self.current = None
                        else:
                            self.current = tgt
                            self.frame_remaining = self.frame_len
                            self.frame_forecast = self.pending_forecast
                            self.outage_run = 0
                            self.realized_sum = 0.0
                            self.realized_cnt = 0
        else:
            # committed frame in progress
            cur = self.current
            q = self.queues[cur]
            best_other = -math.inf
            cur_score = math.inf
            if self.cfg.policy != "MW":
                scores = self._policy_scores(t, rate_row)
                cur_score = scores[cur]
                best_other = max(s for i, s in enumerate(scores) if i != cur) \
                    if self.N > 1 else -math.inf
            mean_realized = (self.realized_sum / self.realized_cnt
                             if self.realized_cnt else math.inf)
            reason = pol.early_halt_check(
                q.backlog_bits, self.outage_run, mean_realized,
                self.realized_cnt, self.frame_forecast, cur_score,
                best_other, self.pcfg)
            if reason:
                log.halts[reason] = log.halts.get(reason, 0) + 1
                self.frame_remaining = 0
            else:
                self.frame_remaining -= 1
            serving = cur
            cls = CLS_SERVE

        if serving >= 0:
            q = self.queues[serving]
            mu = mu_row[serving]
            backlog = q.backlog_bits
            dep = backlog if backlog < mu else mu
            if dep:
                qmod.consume(q, dep, t, log.delay_hists[serving], self.warmup)
            rate_now = rate_row[serving]
            self.outage_run = self.outage_run + 1 if rate_now == 0.0 else 0
            self.realized_sum += rate_now
            self.realized_cnt += 1
            last = self._last_opp[serving]
            gap = t - last if last >= 0 else t + 1
            if gap > self._gap[serving]:
                self._gap[serving] = gap
            self._last_opp[serving] = t
            if self._first_opp[serving] < 0:
                self._first_opp[serving] = t
            log.serve_slots[serving] += 1
            if self._visit_q != serving:
                if self._visit_q >= 0:
                    log.visit_slots[self._visit_q] += self._visit_len
                    log.visit_counts[self._visit_q] += 1
                self._visit_q = serving
                self._visit_len = 1
            else:
                self._visit_len += 1
        else:
            if self._visit_q >= 0:
                log.visit_slots[self._visit_q] += self._visit_len
                log.visit_counts[self._visit_q] += 1
                self._visit_q = -1
                self._visit_len = 0

        pkt = self.pkt
        total_backlog = 0
        for i, q in enumerate(self.queues):
            c = cnt_row[i]
            if c:
                qmod.enqueue_count(q, t, c, pkt)
            total_backlog += q.backlog_bits
        self._trace[t] = total_backlog
        stride = log.backlog_trace_stride
        if t % stride == 0:
            row = self._qtrace[t // stride]
            for i, q in enumerate(self.queues):
                row[i] = q.backlog_bits
        self._curtrace[t] = serving if serving >= 0 \
            else (-2 if cls == CLS_SWITCH else -1)

        log.class_counts[cls] += 1
        if t >= self.warmup:
            log.class_counts_post[cls] += 1
        self.t = t + 1

    def run(self) -> MetricsLog:
        while self.t < self.T:
            self.step()
        return self._finalize()

    def _finalize(self) -> MetricsLog:
        log = self.log
        if self._visit_q >= 0:
            log.visit_slots[self._visit_q] += self._visit_len
            log.visit_counts[self._visit_q] += 1
            self._visit_q = -1
        for i, q in enumerate(self.queues):
            log.arrived_bits[i] = q.arrived_bits
            log.departed_bits[i] = q.departed_bits
            log.arrived_packets[i] = q.arrived_packets
            log.departed_packets[i] = q.departed_packets
            log.final_backlog_bits[i] = q.backlog_bits
            if self._last_opp[i] >= 0:
                end_gap = (self.T - 1) - self._last_opp[i]
                log.max_service_gap[i] = max(self._gap[i], end_gap)
            for arr_slot, n_pkts, pkt_bits, consumed in q.ledger:
                if arr_slot < self.warmup:
                    continue
                left = n_pkts - consumed // pkt_bits
                if left > 0:
                    age = self.T - arr_slot
                    log.residual_age_hist[age] = \
                        log.residual_age_hist.get(age, 0) + left
        log.total_backlog_trace = self._trace
        log.backlog_trace = self._qtrace
        log.current_by_slot = self._curtrace
        return log


def run(cfg: ExperimentConfig, seed: int) -> MetricsLog:
    """Run one seeded simulation to completion."""
    return Simulation(cfg, seed).run()


def summarize(log: MetricsLog, cfg: ExperimentConfig | None = None) -> dict:
    """Scalar metrics for metrics.json (deterministic content)."""
    serving, switching, idle = time_budget(log)
    phi = phi_sw(log)
    combined = log.combined_delay_hist()
    n_delay = sum(combined.values())
    delays = delay_cdf(combined) if n_delay else \
        {"n": 0, "mean_slots": None, "q0.5": None, "q0.9": None, "q0.99": None}
    censored = log.censored_delay_hist()
    n_cens = sum(censored.values())
    cens = delay_cdf(censored) if n_cens else \
        {"n": 0, "mean_slots": None, "q0.5": None, "q0.9": None, "q0.99": None}
    usable_slots = log.horizon - log.class_counts[CLS_SWITCH]
    alphas = [s / usable_slots if usable_slots else 0.0 for s in log.serve_slots]
    verdict, margin = feasibility_check(log.lambdas_bps,
                                        log.mean_service_rate_bps, phi)
    ratio_c = cfg.metrics.stability_ratio if cfg is not None else 3.0
    try:
        stability = stability_probe(log.total_backlog_trace, ratio_c=ratio_c)
    except ValueError:
        stability = "UNKNOWN"
    out = {
        "schema_version": SCHEMA_VERSION,
        "policy": log.policy,
        "switch_model": log.switch_model,
        "label": f"{log.policy}({log.switch_model})",
        "seed": log.seed,
        "horizon_slots": log.horizon,
        "slot_len_s": log.slot_len_s,
        "n_queues": log.n_queues,
        "warmup_slots": log.warmup_slots,
        "serving_fraction": serving,
        "switching_fraction": switching,
        "idle_fraction": idle,
        "phi_sw": phi,
        "alpha": alphas,
        "varphi": [(1.0 - phi) * a for a in alphas],
        "n_switches": sum(sum(r) for r in log.transition_counts),
        "failed_switches": log.failed_switches,
        "switching_slots_total": int(sum(sum(r) for r in log.transition_tau_sums)),
        "halts": dict(sorted(log.halts.items())),
        "mean_delay_slots": delays["mean_slots"],
        "delay_q50_slots": delays["q0.5"],
        "delay_q90_slots": delays["q0.9"],
        "delay_q99_slots": delays["q0.99"],
        "delay_samples": delays["n"],
        "mean_delay_censored_slots": cens["mean_slots"],
        "delay_q50_censored_slots": cens["q0.5"],
        "delay_q99_censored_slots": cens["q0.99"],
        "censored_packets": n_cens - n_delay,
        "arrived_bits": list(log.arrived_bits),
        "departed_bits": list(log.departed_bits),
        "final_backlog_bits": list(log.final_backlog_bits),
        "arrived_packets": list(log.arrived_packets),
        "departed_packets": list(log.departed_packets),
        "mean_service_rate_bps": list(log.mean_service_rate_bps),
        "lambda_bps": list(log.lambdas_bps),
        "max_service_gap_slots": list(log.max_service_gap),
        "starvation_window_slots": max(log.max_service_gap) + 1,
        "feasibility_verdict": verdict,
        "feasibility_margin": margin,
        "stability_verdict": stability,
        "zeta_value": log.zeta_value,
        "zeta_violations": log.zeta_violations,
        "arrivals_sha256": log.arrivals_sha256,
        "channel_sha256": log.channel_sha256,
    }
    return out
