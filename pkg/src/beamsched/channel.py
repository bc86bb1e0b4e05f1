"""Two-hop factored FSO channel: gains, rates, outage, coherence time.

The end-to-end optical gain from ground to slave i is the product of the
ground->master hop and the master->slave hop, scaled by mirror reflectivity:

    H_i = rho * H_1 * H_2i,   H_k = h_path * h_turb * h_geom * h_point

with
    h_path  = exp(-xi * Z)                        large-scale extinction
    h_turb  = exp(X), X ~ N(-2V, 4V)              lognormal scintillation, E=1
    h_geom  = A0 = erf(nu)^2, nu = sqrt(pi) a / (sqrt(2) w_z)
    h_point = exp(-2 r^2 / w_eq^2),
              w_eq^2 = w_z^2 sqrt(pi erf(nu) / (2 nu exp(-nu^2)))

Hop 1 has a Rayleigh radial pointing error (per-axis variance sigma_pg^2).
Hop 2 combines lateral displacement and range-scaled angular deviation and
is hard-gated to zero whenever ||r|| exceeds Z * theta_fov.

SNR is the inversion of the decode-threshold relation
h_th = sqrt(SNR_min) sigma_n / (R P_t), i.e. SNR(H) = (R P_t H / sigma_n)^2,
and the instantaneous rate is eta * B_e * log2(1 + SNR / Gamma), zero below
SNR_min.  The per-slot service capacity applies the throughput cap on top.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erf


@dataclass
class HopParams:
    """One hop of the optical path. FOV gating applies only where
    fov_half_angle_rad > 0 (hop 2)."""
    distance_m: float
    aperture_radius_m: float
    beam_radius_m: float
    extinction_per_m: float = 0.0
    log_amp_var: float = 0.0
    lateral_jitter_var_m2: float = 0.0      # per axis
    angular_jitter_var_rad2: float = 0.0    # per axis
    fov_half_angle_rad: float = 0.0

    def __post_init__(self):
        if self.distance_m <= 0 or self.beam_radius_m <= 0 or self.aperture_radius_m <= 0:
            raise ValueError("distance, beam radius and aperture must be positive")
        for v in (self.log_amp_var, self.lateral_jitter_var_m2,
                  self.angular_jitter_var_rad2):
            if v < 0:
                raise ValueError("variances must be nonnegative")


@dataclass
class RadioParams:
    responsivity_a_w: float = 0.5
    tx_power_w: float = 0.15848931924611134   # 22 dBm
    noise_std_a: float = 1e-7
    efficiency: float = 0.8
    bandwidth_hz: float = 1e9
    snr_gap: float = 2.0
    min_snr: float = 100.0                    # 20 dB
    throughput_cap_bps: float = 2.5e9

    def __post_init__(self):
        vals = (self.responsivity_a_w, self.tx_power_w, self.noise_std_a,
                self.efficiency, self.bandwidth_hz, self.snr_gap,
                self.min_snr, self.throughput_cap_bps)
        if any(v <= 0 for v in vals):
            raise ValueError("radio parameters must be strictly positive")
        if self.snr_gap < 1.0:
            raise ValueError("snr_gap must be >= 1")


@dataclass
class ChannelDraw:
    """One slot's factored gains for a single slave."""
    h_path: float
    h_turb: float
    h_geom: float
    h_point: float
    e2e_gain: float
    rate_bps: float = 0.0
    fov_miss: bool = False


def path_loss(xi_per_m: float, z_m: float) -> float:
    """exp(-xi Z); 1.0 when lossless."""
    if z_m <= 0:
        raise ValueError("range must be positive")
    if xi_per_m < 0:
        raise ValueError("extinction must be nonnegative")
    return math.exp(-xi_per_m * z_m)


def turbulence_sample(log_amp_var: float, rng, size=None):
    """Lognormal scintillation gain with unit mean: exp(N(-2V, 4V))."""
    if log_amp_var < 0:
        raise ValueError("log-amplitude variance must be nonnegative")
    if log_amp_var == 0:
        return 1.0 if size is None else np.ones(size)
    x = rng.normal(-2.0 * log_amp_var, math.sqrt(4.0 * log_amp_var), size)
    return math.exp(x) if size is None else np.exp(x)


def geometric_coupling(aperture_radius_m: float,
                       beam_radius_m: float) -> tuple[float, float]:
    """(nu, A0): peak collection fraction under perfect alignment."""
    if aperture_radius_m <= 0 or beam_radius_m <= 0:
        raise ValueError("aperture and beam radius must be positive")
    nu = math.sqrt(math.pi) * aperture_radius_m / (math.sqrt(2.0) * beam_radius_m)
    a0 = float(erf(nu)) ** 2
    return nu, a0


def equivalent_beam_width_sq(beam_radius_m: float, nu: float) -> float:
    """w_eq^2 >= w_z^2 for all nu > 0."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return beam_radius_m ** 2 * math.sqrt(
        math.pi * float(erf(nu)) / (2.0 * nu * math.exp(-nu * nu)))


def pointing_loss(radial_error_m: float, beam_radius_m: float, nu: float) -> float:
    """exp(-2 r^2 / w_eq^2); 1 at r=0, monotone decreasing in r."""
    if radial_error_m < 0:
        raise ValueError("radial error must be nonnegative")
    w_eq_sq = equivalent_beam_width_sq(beam_radius_m, nu)
    return math.exp(-2.0 * radial_error_m ** 2 / w_eq_sq)


def hop2_error(lat_var_m2: float, ang_var_rad2: float, z_m: float,
               fov_half_angle_rad: float, rng) -> tuple[float, bool]:
    """Radial pointing error of the dynamic hop and the FOV-gate verdict.

    r = || delta_lat + Z * theta_ang || with independent 2-axis Gaussians;
    the gate fires when r exceeds Z * theta_fov.
    """
    if z_m <= 0:
        raise ValueError("range must be positive")
    lat = rng.normal(0.0, math.sqrt(lat_var_m2), 2) if lat_var_m2 > 0 else np.zeros(2)
    ang = rng.normal(0.0, math.sqrt(ang_var_rad2), 2) if ang_var_rad2 > 0 else np.zeros(2)
    vec = lat + z_m * ang
    r = float(np.hypot(vec[0], vec[1]))
    miss = fov_half_angle_rad > 0 and r > z_m * fov_half_angle_rad
    return r, miss


def e2e_gain_sample(hop1: HopParams, hop2: HopParams, rho: float, rng,
                    radio: RadioParams | None = None) -> ChannelDraw:
    """Draw one slot's end-to-end gain H = rho * H1 * H2 (zero on FOV miss)."""
    if not 0.0 < rho <= 1.0:
        raise ValueError("mirror reflectivity must be in (0, 1]")
    hl1 = path_loss(hop1.extinction_per_m, hop1.distance_m) if hop1.extinction_per_m else 1.0
    hl2 = path_loss(hop2.extinction_per_m, hop2.distance_m) if hop2.extinction_per_m else 1.0
    ha1 = float(turbulence_sample(hop1.log_amp_var, rng))
    ha2 = float(turbulence_sample(hop2.log_amp_var, rng))
    nu1, a01 = geometric_coupling(hop1.aperture_radius_m, hop1.beam_radius_m)
    nu2, a02 = geometric_coupling(hop2.aperture_radius_m, hop2.beam_radius_m)

    # hop 1: Rayleigh radial error from per-axis jitter; no FOV gate
    if hop1.lateral_jitter_var_m2 > 0:
        v = rng.normal(0.0, math.sqrt(hop1.lateral_jitter_var_m2), 2)
        r1 = float(np.hypot(v[0], v[1]))
    else:
        r1 = 0.0
    hp1 = pointing_loss(r1, hop1.beam_radius_m, nu1)

    r2, miss = hop2_error(hop2.lateral_jitter_var_m2, hop2.angular_jitter_var_rad2,
                          hop2.distance_m, hop2.fov_half_angle_rad, rng)
    hp2 = 0.0 if miss else pointing_loss(r2, hop2.beam_radius_m, nu2)

    gain = rho * (hl1 * ha1 * a01 * hp1) * (hl2 * ha2 * a02 * hp2)
    draw = ChannelDraw(h_path=hl1 * hl2, h_turb=ha1 * ha2, h_geom=a01 * a02,
                       h_point=hp1 * hp2, e2e_gain=gain, fov_miss=miss)
    if radio is not None:
        draw.rate_bps = snr_and_rate(gain, radio)
    return draw


def gain_threshold(min_snr: float, noise_std_a: float,
                   responsivity_a_w: float, tx_power_w: float) -> float:
    """Minimum decodable gain: sqrt(SNR_min) sigma_n / (R P_t)."""
    if min(min_snr, noise_std_a, responsivity_a_w, tx_power_w) <= 0:
        raise ValueError("all arguments must be positive")
    return math.sqrt(min_snr) * noise_std_a / (responsivity_a_w * tx_power_w)


def snr_from_gain(gain, radio: RadioParams):
    """SNR(H) = (R P_t H / sigma_n)^2 (inversion of the decode threshold)."""
    x = radio.responsivity_a_w * radio.tx_power_w * gain / radio.noise_std_a
    return x * x


def snr_and_rate(gain: float, radio: RadioParams) -> float:
    """Instantaneous rate in bits/s; 0 below the decode SNR.

    Uncapped: the throughput cap applies when converting to per-slot
    service capacity (min(cap, rate)).
    """
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    snr = snr_from_gain(gain, radio)
    if snr < radio.min_snr:
        return 0.0
    return radio.efficiency * radio.bandwidth_hz * math.log2(1.0 + snr / radio.snr_gap)


def sample_e2e_gains(hop1: HopParams, hop2: HopParams, rho: float,
                     n_samples: int, rng) -> np.ndarray:
    """Vectorized Monte Carlo of the end-to-end gain (same model as
    e2e_gain_sample; one block draw for speed)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    hl = (path_loss(hop1.extinction_per_m, hop1.distance_m)
          * path_loss(hop2.extinction_per_m, hop2.distance_m))
    ha = (turbulence_sample(hop1.log_amp_var, rng, n_samples)
          * turbulence_sample(hop2.log_amp_var, rng, n_samples))
    nu1, a01 = geometric_coupling(hop1.aperture_radius_m, hop1.beam_radius_m)
    nu2, a02 = geometric_coupling(hop2.aperture_radius_m, hop2.beam_radius_m)
    weq1 = equivalent_beam_width_sq(hop1.beam_radius_m, nu1)
    weq2 = equivalent_beam_width_sq(hop2.beam_radius_m, nu2)

    r1sq = (rng.normal(0.0, math.sqrt(hop1.lateral_jitter_var_m2), (n_samples, 2)) ** 2
            ).sum(axis=1) if hop1.lateral_jitter_var_m2 > 0 else np.zeros(n_samples)
    hp1 = np.exp(-2.0 * r1sq / weq1)

    lat = rng.normal(0.0, math.sqrt(hop2.lateral_jitter_var_m2), (n_samples, 2)) \
        if hop2.lateral_jitter_var_m2 > 0 else np.zeros((n_samples, 2))
    ang = rng.normal(0.0, math.sqrt(hop2.angular_jitter_var_rad2), (n_samples, 2)) \
        if hop2.angular_jitter_var_rad2 > 0 else np.zeros((n_samples, 2))
    vec = lat + hop2.distance_m * ang
    r2sq = (vec ** 2).sum(axis=1)
    hp2 = np.exp(-2.0 * r2sq / weq2)
    if hop2.fov_half_angle_rad > 0:
        gate = hop2.distance_m * hop2.fov_half_angle_rad
        hp2[r2sq > gate * gate] = 0.0

    return rho * hl * ha * a01 * a02 * hp1 * hp2


def outage_probability(hop1: HopParams, hop2: HopParams, rho: float,
                       h_th: float, n_samples: int, rng) -> tuple[float, float]:
    """MC estimate of P[H < h_th] plus a 95% binomial CI halfwidth."""
    gains = sample_e2e_gains(hop1, hop2, rho, n_samples, rng)
    p = float(np.mean(gains < h_th))
    ci = 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n_samples)
    return p, ci


def outage_curve(hop1: HopParams, hop2: HopParams, rho: float,
                 h_ths: np.ndarray, n_samples: int, rng) -> list[tuple[float, float, float]]:
    """Outage estimates over a threshold grid from ONE common sample set,
    so monotonicity in h_th is exact, not statistical."""
    gains = np.sort(sample_e2e_gains(hop1, hop2, rho, n_samples, rng))
    rows = []
    for h in np.asarray(h_ths, dtype=float):
        p = float(np.searchsorted(gains, h, side="left")) / n_samples
        ci = 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n_samples)
        rows.append((float(h), p, ci))
    return rows


# ---------------------------------------------------------------------------
# Atmospheric profiles and coherence time
# ---------------------------------------------------------------------------

def hufnagel_valley(cn2_ground: float = 1.7e-14, v_rms: float = 21.0):
    """HV-5/7 refractive-index structure profile Cn^2(h), h in meters."""
    def cn2(h):
        h = np.asarray(h, dtype=float)
        return (5.94e-53 * (v_rms / 27.0) ** 2 * h ** 10 * np.exp(-h / 1000.0)
                + 2.7e-16 * np.exp(-h / 1500.0)
                + cn2_ground * np.exp(-h / 100.0))
    return cn2


def bufton_wind(v_ground: float = 5.0, v_peak: float = 30.0,
                h_peak: float = 9400.0, h_width: float = 4800.0):
    """Bufton wind speed profile v(h), h in meters."""
    def wind(h):
        h = np.asarray(h, dtype=float)
        return v_ground + v_peak * np.exp(-((h - h_peak) / h_width) ** 2)
    return wind


class QuadratureError(RuntimeError):
    pass


def coherence_time(cn2_profile, wind_profile, wavelength_m: float,
                   path_length_m: float, zenith_rad: float = 0.0) -> float:
    """Greenwood-style atmospheric coherence time over a slant path.

    t0 = [2.91 k^2 integral Cn^2(h(s)) v(h(s))^{5/3} ds]^{-3/5},
    k = 2 pi / lambda, h(s) = s cos(zenith).
    """
    if wavelength_m <= 0 or path_length_m <= 0:
        raise ValueError("wavelength and path length must be positive")
    k = 2.0 * math.pi / wavelength_m
    cosz = math.cos(zenith_rad)

    def integrand(s):
        h = s * cosz
        return float(cn2_profile(h)) * float(wind_profile(h)) ** (5.0 / 3.0)

    val, err, *info = integrate.quad(integrand, 0.0, path_length_m,
                                     limit=200, full_output=True)
    if len(info) > 1:  # quadpack message present => trouble converging
        raise QuadratureError(f"coherence-time quadrature did not converge: {info[1]}")
    if not math.isfinite(val) or val <= 0:
        raise QuadratureError("coherence-time integral is non-finite or non-positive")
    return (2.91 * k * k * val) ** (-3.0 / 5.0)


# ---------------------------------------------------------------------------
# CSV emitters (plot-ready, schema per the channel interfaces)
# ---------------------------------------------------------------------------

def write_channel_pdf_csv(path, edges: np.ndarray, density: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin_left", "bin_right", "density"])
        for lo, hi, d in zip(edges[:-1], edges[1:], density):
            w.writerow([f"{lo:.8e}", f"{hi:.8e}", f"{d:.8e}"])


def write_outage_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["h_th", "p_out", "ci_halfwidth"])
        for h, p, ci in rows:
            w.writerow([f"{h:.8e}", f"{p:.8e}", f"{ci:.8e}"])
