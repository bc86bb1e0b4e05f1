"""Switchover delays under three interchangeable models.

FSO: physics-driven.  Retargeting the beam from slave i to slave j costs a
deterministic gimbal slew (trapezoidal S-curve over the angular separation)
plus a geometric number of fixed-length acquisition attempts whose success
probability depends on range and instantaneous pointing accuracy:

    T = T_slew(theta_ij) + K * T_acq,   tau = ceil(T / slot_len)  (slots)

DEPENDENT: ring-distance means (near/mid/far, calibrated from the FSO
model) modulated by two AR(1) levels (global and per-target) so switch
costs drift through persistent cheap/expensive phases.

IID: the same ring-distance means with memoryless fluctuation.

tau_ii = 0 by contract; every realized switch between distinct queues costs
at least one slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class LinkUnavailableError(RuntimeError):
    """Acquisition success probability is exactly zero: the link is
    physically impossible this epoch and the candidate must be skipped."""


@dataclass
class GimbalLimits:
    v_max_deg_s: float = 120.0
    a_max_deg_s2: float = 600.0
    j_max_deg_s3: float = 4000.0

    def __post_init__(self):
        if min(self.v_max_deg_s, self.a_max_deg_s2, self.j_max_deg_s3) <= 0:
            raise ValueError("gimbal limits must be strictly positive")


@dataclass
class AcquisitionParams:
    t_fsm_s: float = 3e-3
    t_pilot_s: float = 1e-3

    @property
    def t_acq_s(self) -> float:
        return self.t_fsm_s + self.t_pilot_s

    def __post_init__(self):
        if self.t_fsm_s + self.t_pilot_s <= 0:
            raise ValueError("acquisition attempt duration must be positive")


def slew_time(theta_deg: float, limits: GimbalLimits) -> float:
    """Trapezoidal S-curve retarget time (s), affine in the slew angle."""
    if theta_deg < 0:
        raise ValueError("slew angle must be nonnegative")
    return (theta_deg / limits.v_max_deg_s
            + limits.v_max_deg_s / limits.a_max_deg_s2
            + 4.0 * limits.a_max_deg_s2 / limits.j_max_deg_s3)


def acquisition_rounds(p: float, rng) -> int:
    """Number of attempts until link lock, K ~ Geometric(p) on {1,2,...}."""
    if p == 0:
        raise LinkUnavailableError("acquisition success probability is zero")
    if not 0 < p <= 1:
        raise ValueError("success probability must be in (0, 1]")
    return int(rng.geometric(p))


def acquisition_success_probability(range_m, lat_var_m2, ang_var_rad2,
                                    fov_half_angle_rad, p_base):
    """Default acquisition model: an attempt locks iff the open-loop beam
    lands inside the receiver FOV cone; p = p_base * P[no FOV miss].
    Vectorized over range / variances."""
    gate = np.asarray(range_m, dtype=float) * fov_half_angle_rad
    sig2 = lat_var_m2 + np.asarray(range_m, dtype=float) ** 2 * ang_var_rad2
    with np.errstate(divide="ignore"):
        hit = 1.0 - np.exp(-gate * gate / (2.0 * sig2))
    return p_base * np.where(sig2 > 0, hit, 1.0)


def ring_distance(i: int, j: int, n: int) -> int:
    """Hexagon ring distance between slave slots (1=near .. n//2=far)."""
    d = abs(i - j)
    return min(d, n - d)


@dataclass
class SwitchSample:
    tau_slots: int
    theta_deg: float
    attempts: int = 0
    failed: bool = False


class FsoSwitchModel:
    """Slew + acquisition physics.  `theta_fn(i, j, slot)` supplies the
    current angular separation in degrees and `p_fn(slot, j)` the current
    acquisition success probability for target j (already floored)."""

    name = "FSO"

    def __init__(self, limits: GimbalLimits, acq: AcquisitionParams,
                 slot_len_s: float, theta_fn, p_fn,
                 p_floor: float = 0.05, k_cap: int = 50,
                 time_scale: float = 1.0):
        self.limits = limits
        self.acq = acq
        self.slot_len_s = slot_len_s
        self.theta_fn = theta_fn
        self.p_fn = p_fn
        self.p_floor = p_floor
        self.k_cap = k_cap
        self.time_scale = time_scale

    @property
    def tau_max_slots(self) -> int:
        t = (slew_time(180.0, self.limits) + self.k_cap * self.acq.t_acq_s)
        return math.ceil(t * self.time_scale / self.slot_len_s)

    def forecast_slots(self, i: int, j: int, slot: int) -> float:
        if i == j:
            return 0.0
        p = self.p_fn(slot, j)
        if p <= 0:
            raise LinkUnavailableError(f"target {j} unavailable at slot {slot}")
        p = max(p, self.p_floor)
        t = slew_time(self.theta_fn(i, j, slot), self.limits) \
            + self.acq.t_acq_s / p
        return min(t * self.time_scale / self.slot_len_s, float(self.tau_max_slots))

    def sample(self, i: int, j: int, slot: int, rng) -> SwitchSample:
        if i == j:
            return SwitchSample(0, 0.0)
        theta = self.theta_fn(i, j, slot)
        p = self.p_fn(slot, j)
        if p <= 0:
            raise LinkUnavailableError(f"target {j} unavailable at slot {slot}")
        k = acquisition_rounds(max(p, self.p_floor), rng)
        if k > self.k_cap:
            t = slew_time(theta, self.limits) + self.k_cap * self.acq.t_acq_s
            tau = max(1, math.ceil(t * self.time_scale / self.slot_len_s))
            return SwitchSample(min(tau, self.tau_max_slots), theta,
                                attempts=self.k_cap, failed=True)
        t = slew_time(theta, self.limits) + k * self.acq.t_acq_s
        tau = max(1, math.ceil(t * self.time_scale / self.slot_len_s))
        return SwitchSample(min(tau, self.tau_max_slots), theta, attempts=k)


class IidSwitchModel:
    """Memoryless fluctuation around ring-distance means (slots)."""

    name = "IID"

    def __init__(self, ring_means_slots: dict[int, float], sigma_log: float,
                 n_queues: int, tau_max_slots: int, theta_fn=None):
        self.ring_means = ring_means_slots
        self.sigma = sigma_log
        self.n = n_queues
        self._tau_max = tau_max_slots
        self.theta_fn = theta_fn

    @property
    def tau_max_slots(self) -> int:
        return self._tau_max

    def _theta(self, i, j, slot):
        return self.theta_fn(i, j, slot) if self.theta_fn else 0.0

    def forecast_slots(self, i: int, j: int, slot: int) -> float:
        if i == j:
            return 0.0
        return min(self.ring_means[ring_distance(i, j, self.n)],
                   float(self._tau_max))

    def sample(self, i: int, j: int, slot: int, rng) -> SwitchSample:
        if i == j:
            return SwitchSample(0, 0.0)
        mean = self.ring_means[ring_distance(i, j, self.n)]
        # unit-mean lognormal noise
        mult = math.exp(rng.normal(-0.5 * self.sigma ** 2, self.sigma))
        tau = max(1, round(mean * mult))
        return SwitchSample(min(tau, self._tau_max), self._theta(i, j, slot))


class DependentSwitchModel:
    """Ring-distance means modulated by AR(1) drift at two levels.

    Log-domain AR(1): y' = phi * y + eps keeps each multiplier
    exp(y - sigma_y^2 / 2) at stationary mean exactly 1, so ring means stay
    calibrated across models.  State advances once per realized sample;
    forecasts read the current state without advancing it.
    """

    name = "DEPENDENT"

    def __init__(self, ring_means_slots: dict[int, float], n_queues: int,
                 tau_max_slots: int, rng_init,
                 phi_global: float = 0.95, phi_target: float = 0.9,
                 sigma_y_global: float = 0.12, sigma_y_target: float = 0.10,
                 theta_fn=None):
        if not (0 <= phi_global < 1 and 0 <= phi_target < 1):
            raise ValueError("AR(1) persistence must be in [0, 1)")
        self.ring_means = ring_means_slots
        self.n = n_queues
        self._tau_max = tau_max_slots
        self.phi_g = phi_global
        self.phi_t = phi_target
        self.sig_g = sigma_y_global
        self.sig_t = sigma_y_target
        self.innov_g = sigma_y_global * math.sqrt(1.0 - phi_global ** 2)
        self.innov_t = sigma_y_target * math.sqrt(1.0 - phi_target ** 2)
        self.y_global = float(rng_init.normal(0.0, sigma_y_global)) if sigma_y_global else 0.0
        self.y_target = [float(rng_init.normal(0.0, sigma_y_target)) if sigma_y_target else 0.0
                         for _ in range(n_queues)]
        self.theta_fn = theta_fn

    @property
    def tau_max_slots(self) -> int:
        return self._tau_max

    def multiplier(self, j: int) -> float:
        return math.exp(self.y_global - 0.5 * self.sig_g ** 2) \
            * math.exp(self.y_target[j] - 0.5 * self.sig_t ** 2)

    def forecast_slots(self, i: int, j: int, slot: int) -> float:
        if i == j:
            return 0.0
        mean = self.ring_means[ring_distance(i, j, self.n)]
        return min(mean * self.multiplier(j), float(self._tau_max))

    def sample(self, i: int, j: int, slot: int, rng) -> SwitchSample:
        if i == j:
            return SwitchSample(0, 0.0)
        self.y_global = self.phi_g * self.y_global \
            + (float(rng.normal(0.0, self.innov_g)) if self.innov_g else 0.0)
        self.y_target[j] = self.phi_t * self.y_target[j] \
            + (float(rng.normal(0.0, self.innov_t)) if self.innov_t else 0.0)
        mean = self.ring_means[ring_distance(i, j, self.n)]
        tau = max(1, round(mean * self.multiplier(j)))
        theta = self.theta_fn(i, j, slot) if self.theta_fn else 0.0
        return SwitchSample(min(tau, self._tau_max), theta)


def sample_switch(model, i: int, j: int, slot: int, rng) -> SwitchSample:
    """tau_ii = 0; otherwise delegate to the active model."""
    if i == j:
        return SwitchSample(0, 0.0)
    return model.sample(i, j, slot, rng)


def calibrate_ring_means(fso_model: FsoSwitchModel, n_queues: int,
                         horizon_slots: int, rng,
                         samples_per_class: int = 600) -> dict[int, float]:
    """Mean realized FSO switch time per hexagon ring class, from a Monte
    Carlo pre-pass over pairs and times (successful switches only).  Used to
    pin the IID/DEPENDENT means so all three models are compared at matched
    switch-cost scale."""
    means: dict[int, float] = {}
    for d in range(1, n_queues // 2 + 1 if n_queues > 1 else 1):
        pairs = [(i, (i + d) % n_queues) for i in range(n_queues)
                 if ring_distance(i, (i + d) % n_queues, n_queues) == d]
        total, count = 0.0, 0
        while count < samples_per_class:
            i, j = pairs[int(rng.integers(len(pairs)))]
            slot = int(rng.integers(max(horizon_slots, 1)))
            try:
                s = fso_model.sample(i, j, slot, rng)
            except LinkUnavailableError:
                continue    # rejected epochs contribute no switch time
            if not s.failed:
                total += s.tau_slots
                count += 1
        means[d] = total / count
    return means
