"""Experiment configuration: defaults, INI parsing, validation, echo.

The file format is flat INI with one section per subsystem.  Every key is
declared in REGISTRY; unknown sections or keys are rejected (typo safety)
and every value is validated against its physical bound before a run.  An
empty file yields the defaults (the published operating point: N=6 slaves,
10.41 ms slots, L=3, beta=gamma=1, 350 Mbps aggregate, 9 mrad FOV, 120/600/
4000 gimbal limits, 22 dBm transmit power).
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field

POLICIES = ("MW", "ACI", "ACI-A", "ACI-PA")
SWITCH_MODELS = ("IID", "DEPENDENT", "FSO")

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, field_path: str, message: str):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


@dataclass
class TrafficConfig:
    total_arrival_rate_bps: float = 350e6
    packet_bits: int = 12000
    rate_weights: str = ""          # comma floats; empty = uniform split


@dataclass
class GeometryConfig:
    n_slaves: int = 6
    master_altitude_m: float = 500.0
    slave_ring_radius_m: float = 250.0
    loiter_radius_m: float = 150.0
    loiter_rate_rad_s: float = 0.1


@dataclass
class ChannelConfig:
    wavelength_m: float = 1.55e-6
    extinction_per_m: float = 1e-4
    log_amp_var: float = 0.02
    mirror_reflectivity: float = 0.95
    master_aperture_m: float = 0.075
    receiver_aperture_m: float = 0.075
    beam_radius_hop1_m: float = 0.22
    beam_radius_hop2_m: float = 2.4
    sigma_platform_m: float = 0.05
    sigma_ground_m: float = 0.05
    sigma_theta_rad: float = 1e-3
    sigma_turb_rad: float = 0.5e-3
    fov_half_angle_rad: float = 9e-3
    cn2_ground: float = 1.7e-14
    wind_ground_m_s: float = 5.0


@dataclass
class RadioConfig:
    responsivity_a_w: float = 0.5
    tx_power_dbm: float = 22.0
    noise_std_a: float = 1e-7
    efficiency: float = 0.8
    bandwidth_hz: float = 1e9
    snr_gap: float = 2.0
    min_snr_db: float = 20.0
    throughput_cap_bps: float = 0.5e9

    @property
    def tx_power_w(self) -> float:
        return 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)

    @property
    def min_snr(self) -> float:
        return 10.0 ** (self.min_snr_db / 10.0)


@dataclass
class SwitchingConfig:
    v_max_deg_s: float = 120.0
    a_max_deg_s2: float = 600.0
    j_max_deg_s3: float = 4000.0
    t_fsm_s: float = 3e-3
    t_pilot_s: float = 1e-3
    p_base: float = 0.9
    p_floor: float = 0.03
    p_reject: float = 0.005
    k_cap: int = 50
    acq_scale_base: float = 6.0
    acq_drift_sigma: float = 0.9
    acq_drift_sigma_global: float = 0.8
    acq_drift_corr_s: float = 20.0
    ar_phi_global: float = 0.90
    ar_phi_target: float = 0.9
    ar_sigma_global: float = 0.07
    ar_sigma_target: float = 0.06
    iid_sigma: float = 0.02
    switch_time_scale: float = 1.0
    calib_samples: int = 600


@dataclass
class PolicyTuning:
    beta: float = 1.0
    gamma: float = 1.0
    frame_len: int = 3
    proc_overhead_s: float = 0.0
    self_affinity: float = 0.0
    affinity_theta_scale_deg: float = 75.0
    outage_halt_slots: int = 2
    shortfall_factor: float = 0.5
    dominance_margin: float = 2.0


@dataclass
class MetricsConfig:
    warmup_frac: float = 0.05
    trace_stride: int = 100
    stability_ratio: float = 3.0


@dataclass
class ExperimentConfig:
    scenario: str = "table2"
    policy: str = "ACI"
    switch_model: str = "FSO"
    horizon_slots: int = 100_000
    replications: int = 10
    seed: int = 12345
    audit: bool = False
    workers: int = 1
    slot_len_s: float = 0.01041
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    switching: SwitchingConfig = field(default_factory=SwitchingConfig)
    policy_tuning: PolicyTuning = field(default_factory=PolicyTuning)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def lambda_per_queue_bps(self) -> list[float]:
        n = self.geometry.n_slaves
        if self.traffic.rate_weights.strip():
            w = [float(x) for x in self.traffic.rate_weights.split(",")]
            if len(w) != n:
                raise ConfigError("traffic.rate_weights",
                                  f"needs {n} weights, got {len(w)}")
            s = sum(w)
            return [self.traffic.total_arrival_rate_bps * x / s for x in w]
        return [self.traffic.total_arrival_rate_bps / n] * n

    def label(self) -> str:
        return f"{self.policy}({self.switch_model})"


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _frac(x):
    return 0.0 <= x <= 1.0


def _unit_open(x):
    return 0.0 <= x < 1.0


# (section, key) -> (attr path, type, constraint fn, constraint text)
REGISTRY: dict[tuple[str, str], tuple[str, type, object, str]] = {
    ("experiment", "scenario"): ("scenario", str, lambda s: bool(s), "nonempty"),
    ("experiment", "policy"): ("policy", str, lambda s: s in POLICIES,
                               f"one of {POLICIES}"),
    ("experiment", "switch_model"): ("switch_model", str,
                                     lambda s: s in SWITCH_MODELS,
                                     f"one of {SWITCH_MODELS}"),
    ("experiment", "horizon_slots"): ("horizon_slots", int, _pos, "must be >= 1"),
    ("experiment", "replications"): ("replications", int, _pos, "must be >= 1"),
    ("experiment", "seed"): ("seed", int, _nonneg, "must be >= 0"),
    ("experiment", "audit"): ("audit", bool, lambda b: True, ""),
    ("experiment", "workers"): ("workers", int, _pos, "must be >= 1"),
    ("experiment", "slot_len_s"): ("slot_len_s", float, _pos, "must be > 0"),
    ("traffic", "total_arrival_rate_bps"): ("traffic.total_arrival_rate_bps",
                                            float, _nonneg, "must be >= 0"),
    ("traffic", "packet_bits"): ("traffic.packet_bits", int, _pos, "must be >= 1"),
    ("traffic", "rate_weights"): ("traffic.rate_weights", str, lambda s: True, ""),
    ("geometry", "n_slaves"): ("geometry.n_slaves", int, _pos, "must be >= 1"),
    ("geometry", "master_altitude_m"): ("geometry.master_altitude_m", float,
                                        _pos, "must be > 0"),
    ("geometry", "slave_ring_radius_m"): ("geometry.slave_ring_radius_m", float,
                                          _pos, "must be > 0"),
    ("geometry", "loiter_radius_m"): ("geometry.loiter_radius_m", float,
                                      _nonneg, "must be >= 0"),
    ("geometry", "loiter_rate_rad_s"): ("geometry.loiter_rate_rad_s", float,
                                        _nonneg, "must be >= 0"),
    ("channel", "wavelength_m"): ("channel.wavelength_m", float, _pos, "must be > 0"),
    ("channel", "extinction_per_m"): ("channel.extinction_per_m", float,
                                      _nonneg, "must be >= 0"),
    ("channel", "log_amp_var"): ("channel.log_amp_var", float, _nonneg,
                                 "must be >= 0"),
    ("channel", "mirror_reflectivity"): ("channel.mirror_reflectivity", float,
                                         lambda x: 0 < x <= 1, "must be in (0, 1]"),
    ("channel", "master_aperture_m"): ("channel.master_aperture_m", float,
                                       _pos, "must be > 0"),
    ("channel", "receiver_aperture_m"): ("channel.receiver_aperture_m", float,
                                         _pos, "must be > 0"),
    ("channel", "beam_radius_hop1_m"): ("channel.beam_radius_hop1_m", float,
                                        _pos, "must be > 0"),
    ("channel", "beam_radius_hop2_m"): ("channel.beam_radius_hop2_m", float,
                                        _pos, "must be > 0"),
    ("channel", "sigma_platform_m"): ("channel.sigma_platform_m", float,
                                      _nonneg, "must be >= 0"),
    ("channel", "sigma_ground_m"): ("channel.sigma_ground_m", float,
                                    _nonneg, "must be >= 0"),
    ("channel", "sigma_theta_rad"): ("channel.sigma_theta_rad", float,
                                     _nonneg, "must be >= 0"),
    ("channel", "sigma_turb_rad"): ("channel.sigma_turb_rad", float,
                                    _nonneg, "must be >= 0"),
    ("channel", "fov_half_angle_rad"): ("channel.fov_half_angle_rad", float,
                                        _pos, "must be > 0"),
    ("channel", "cn2_ground"): ("channel.cn2_ground", float, _pos, "must be > 0"),
    ("channel", "wind_ground_m_s"): ("channel.wind_ground_m_s", float,
                                     _nonneg, "must be >= 0"),
    ("radio", "responsivity_a_w"): ("radio.responsivity_a_w", float, _pos,
                                    "must be > 0"),
    ("radio", "tx_power_dbm"): ("radio.tx_power_dbm", float,
                                lambda x: math.isfinite(x), "must be finite"),
    ("radio", "noise_std_a"): ("radio.noise_std_a", float, _pos, "must be > 0"),
    ("radio", "efficiency"): ("radio.efficiency", float,
                              lambda x: 0 < x <= 1, "must be in (0, 1]"),
    ("radio", "bandwidth_hz"): ("radio.bandwidth_hz", float, _pos, "must be > 0"),
    ("radio", "snr_gap"): ("radio.snr_gap", float, lambda x: x >= 1,
                           "must be >= 1"),
    ("radio", "min_snr_db"): ("radio.min_snr_db", float,
                              lambda x: math.isfinite(x), "must be finite"),
    ("radio", "throughput_cap_bps"): ("radio.throughput_cap_bps", float, _pos,
                                      "must be > 0"),
    ("switching", "v_max_deg_s"): ("switching.v_max_deg_s", float, _pos,
                                   "must be > 0"),
    ("switching", "a_max_deg_s2"): ("switching.a_max_deg_s2", float, _pos,
                                    "must be > 0"),
    ("switching", "j_max_deg_s3"): ("switching.j_max_deg_s3", float, _pos,
                                    "must be > 0"),
    ("switching", "t_fsm_s"): ("switching.t_fsm_s", float, _nonneg,
                               "must be >= 0"),
    ("switching", "t_pilot_s"): ("switching.t_pilot_s", float, _nonneg,
                                 "must be >= 0"),
    ("switching", "p_base"): ("switching.p_base", float, _frac,
                              "must be in [0, 1]"),
    ("switching", "p_floor"): ("switching.p_floor", float,
                               lambda x: 0 < x <= 1, "must be in (0, 1]"),
    ("switching", "p_reject"): ("switching.p_reject", float, _frac,
                                "must be in [0, 1]"),
    ("switching", "k_cap"): ("switching.k_cap", int, _pos, "must be >= 1"),
    ("switching", "acq_scale_base"): ("switching.acq_scale_base", float, _pos,
                                      "must be > 0"),
    ("switching", "acq_drift_sigma"): ("switching.acq_drift_sigma", float,
                                       _nonneg, "must be >= 0"),
    ("switching", "acq_drift_sigma_global"): ("switching.acq_drift_sigma_global",
                                              float, _nonneg, "must be >= 0"),
    ("switching", "acq_drift_corr_s"): ("switching.acq_drift_corr_s", float,
                                        _pos, "must be > 0"),
    ("switching", "ar_phi_global"): ("switching.ar_phi_global", float,
                                     _unit_open, "must be in [0, 1)"),
    ("switching", "ar_phi_target"): ("switching.ar_phi_target", float,
                                     _unit_open, "must be in [0, 1)"),
    ("switching", "ar_sigma_global"): ("switching.ar_sigma_global", float,
                                       _nonneg, "must be >= 0"),
    ("switching", "ar_sigma_target"): ("switching.ar_sigma_target", float,
                                       _nonneg, "must be >= 0"),
    ("switching", "iid_sigma"): ("switching.iid_sigma", float, _nonneg,
                                 "must be >= 0"),
    ("switching", "switch_time_scale"): ("switching.switch_time_scale", float,
                                         _pos, "must be > 0"),
    ("switching", "calib_samples"): ("switching.calib_samples", int, _pos,
                                     "must be >= 1"),
    ("policy", "beta"): ("policy_tuning.beta", float, _nonneg, "must be >= 0"),
    ("policy", "gamma"): ("policy_tuning.gamma", float, _nonneg, "must be >= 0"),
    ("policy", "frame_len"): ("policy_tuning.frame_len", int, _pos,
                              "must be >= 1 slot"),
    ("policy", "proc_overhead_s"): ("policy_tuning.proc_overhead_s", float,
                                    _nonneg, "must be >= 0"),
    ("policy", "self_affinity"): ("policy_tuning.self_affinity", float, _frac,
                                  "must be in [0, 1]"),
    ("policy", "affinity_theta_scale_deg"): ("policy_tuning.affinity_theta_scale_deg",
                                             float, _pos, "must be > 0"),
    ("policy", "outage_halt_slots"): ("policy_tuning.outage_halt_slots", int,
                                      _pos, "must be >= 1"),
    ("policy", "shortfall_factor"): ("policy_tuning.shortfall_factor", float,
                                     _frac, "must be in [0, 1]"),
    ("policy", "dominance_margin"): ("policy_tuning.dominance_margin", float,
                                     lambda x: x >= 1, "must be >= 1"),
    ("metrics", "warmup_frac"): ("metrics.warmup_frac", float, _unit_open,
                                 "must be in [0, 1)"),
    ("metrics", "trace_stride"): ("metrics.trace_stride", int, _pos,
                                  "must be >= 1"),
    ("metrics", "stability_ratio"): ("metrics.stability_ratio", float,
                                     lambda x: x >= 1, "must be >= 1"),
}


def _get(cfg: ExperimentConfig, path: str):
    obj = cfg
    *heads, last = path.split(".")
    for h in heads:
        obj = getattr(obj, h)
    return getattr(obj, last)


def _set(cfg: ExperimentConfig, path: str, value):
    obj = cfg
    *heads, last = path.split(".")
    for h in heads:
        obj = getattr(obj, h)
    setattr(obj, last, value)


def _coerce(raw: str, typ: type, path: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(path, f"cannot parse {raw!r} as {typ.__name__}") from exc


def apply_override(cfg: ExperimentConfig, dotted_key: str, raw_value: str) -> None:
    """Apply a 'section.key=value' override (CLI --set)."""
    if "." not in dotted_key:
        raise ConfigError(dotted_key, "override keys are section.key")
    section, key = dotted_key.split(".", 1)
    entry = REGISTRY.get((section, key))
    if entry is None:
        raise ConfigError(dotted_key, "unknown configuration key")
    path, typ, check, msg = entry
    value = _coerce(raw_value, typ, dotted_key)
    if not check(value):
        raise ConfigError(dotted_key, f"{msg} (got {value!r})")
    _set(cfg, path, value)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    for (section, key), (path, typ, check, msg) in REGISTRY.items():
        value = _get(cfg, path)
        if not check(value):
            raise ConfigError(f"{section}.{key}", f"{msg} (got {value!r})")
    if cfg.policy_tuning.proc_overhead_s >= cfg.slot_len_s:
        raise ConfigError("policy.proc_overhead_s",
                          "must be smaller than the slot length")
    cfg.lambda_per_queue_bps()   # validates rate_weights shape
    return cfg


def parse_config(path_or_text) -> ExperimentConfig:
    """Load a config file; unknown keys are rejected, missing ones default."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if hasattr(path_or_text, "read"):
        parser.read_file(path_or_text)
    else:
        try:
            with open(path_or_text, "r") as f:
                parser.read_file(f)
        except configparser.Error as exc:
            raise ConfigError(str(path_or_text), f"parse error: {exc}") from exc
    cfg = ExperimentConfig()
    for section in parser.sections():
        for key, raw in parser.items(section):
            entry = REGISTRY.get((section, key))
            if entry is None:
                raise ConfigError(f"{section}.{key}", "unknown configuration key")
            path, typ, check, msg = entry
            value = _coerce(raw, typ, f"{section}.{key}")
            if not check(value):
                raise ConfigError(f"{section}.{key}", f"{msg} (got {value!r})")
            _set(cfg, path, value)
    return validate(cfg)


def emit_config(cfg: ExperimentConfig) -> str:
    """Full INI echo of the resolved configuration (round-trips exactly)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for (section, key), (path, typ, _check, _msg) in REGISTRY.items():
        if not parser.has_section(section):
            parser.add_section(section)
        value = _get(cfg, path)
        parser.set(section, key, repr(value) if typ is float else str(value))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
