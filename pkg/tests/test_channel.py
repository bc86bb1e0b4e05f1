import math

import numpy as np
import pytest

from beamsched.channel import (ChannelDraw, HopParams, QuadratureError,
                               RadioParams, bufton_wind, coherence_time,
                               e2e_gain_sample, equivalent_beam_width_sq,
                               gain_threshold, geometric_coupling,
                               hop2_error, hufnagel_valley, outage_curve,
                               outage_probability, path_loss, pointing_loss,
                               sample_e2e_gains, snr_and_rate,
                               turbulence_sample)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestPathLoss:
    def test_lossless(self):
        assert path_loss(0.0, 100.0) == 1.0

    def test_values(self):
        assert path_loss(0.001, 500.0) == pytest.approx(math.exp(-0.5), rel=1e-12)
        assert path_loss(0.001, 250.0) == pytest.approx(0.7788, abs=1e-4)

    def test_domain(self):
        with pytest.raises(ValueError):
            path_loss(0.001, 0.0)


class TestTurbulence:
    def test_no_turbulence_exact_one(self):
        assert turbulence_sample(0.0, rng()) == 1.0

    @pytest.mark.parametrize("v", [0.01, 0.1, 0.5])
    def test_unit_mean_within_3_se(self, v):
        n = 1_000_000
        x = turbulence_sample(v, rng(1), size=n)
        se = x.std() / math.sqrt(n)
        assert abs(x.mean() - 1.0) < 3 * se

    def test_variance_matches_lognormal(self):
        # Var = exp(4V) - 1 for a unit-mean lognormal
        v = 0.1
        x = turbulence_sample(v, rng(2), size=1_000_000)
        assert x.var() == pytest.approx(math.exp(4 * v) - 1.0, rel=0.05)


class TestGeometricCoupling:
    def test_full_capture_limit(self):
        _, a0 = geometric_coupling(1000.0, 1.0)
        assert a0 == pytest.approx(1.0, abs=1e-12)

    def test_equal_radii(self):
        nu, a0 = geometric_coupling(1.0, 1.0)
        assert nu == pytest.approx(1.2533, abs=1e-4)
        assert a0 == pytest.approx(0.85319, abs=1e-4)

    def test_small_aperture(self):
        _, a0 = geometric_coupling(0.1, 1.0)
        assert a0 == pytest.approx(0.019792, abs=2e-5)

    def test_monotone_in_ratio(self):
        a0s = [geometric_coupling(a, 1.0)[1] for a in (0.1, 0.5, 1.0, 2.0)]
        assert a0s == sorted(a0s)


class TestPointingLoss:
    def test_perfect_alignment(self):
        assert pointing_loss(0.0, 1.0, 1.2533) == 1.0

    def test_weq_wider_than_beam(self):
        assert equivalent_beam_width_sq(1.0, 1.2533) >= 1.0
        assert equivalent_beam_width_sq(1.0, 1.2533) == pytest.approx(2.3599, abs=1e-3)

    def test_e_minus_one_point(self):
        w_eq = math.sqrt(equivalent_beam_width_sq(1.0, 1.2533))
        assert pointing_loss(w_eq / math.sqrt(2.0), 1.0, 1.2533) == \
            pytest.approx(math.exp(-1.0), rel=1e-9)

    def test_monotone_decreasing(self):
        vals = [pointing_loss(r, 1.0, 0.5) for r in np.linspace(0, 3, 20)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestHop2Error:
    def test_all_zero_variances(self):
        r, miss = hop2_error(0.0, 0.0, 250.0, 9e-3, rng())
        assert r == 0.0 and miss is False

    def test_rayleigh_mean(self):
        # two platforms at sigma_p = 0.05 m -> per-axis std 0.05*sqrt(2);
        # radial error is then Rayleigh with mean scale*sqrt(pi/2)
        scale = 0.05 * math.sqrt(2.0)
        g = rng(3)
        rs = np.array([hop2_error(scale ** 2, 0.0, 100.0, 1.0, g)[0]
                       for _ in range(30_000)])
        assert rs.mean() == pytest.approx(scale * math.sqrt(math.pi / 2), rel=0.02)

    def test_fov_gate_matches_rayleigh_tail(self):
        # angular jitter dominating: gate radius Z*theta_fov = 2.25 m
        z, fov = 250.0, 9e-3
        ang_var = 5.25e-6
        n = 200_000
        g = rng(4)
        misses = 0
        vec = g.normal(0.0, math.sqrt(ang_var), (n, 2)) * z
        rr = np.hypot(vec[:, 0], vec[:, 1])
        misses = float(np.mean(rr > z * fov))
        analytic = math.exp(-(z * fov) ** 2 / (2 * ang_var * z * z))
        assert misses == pytest.approx(analytic, rel=0.15)

    def test_scalar_api_gate(self):
        r, miss = hop2_error(0.0, 1e-2, 250.0, 9e-3, rng(5))
        assert miss == (r > 250.0 * 9e-3)


def _hops(**over):
    hop1 = HopParams(distance_m=500.0, aperture_radius_m=0.075,
                     beam_radius_m=0.22, extinction_per_m=0.0,
                     log_amp_var=0.0, lateral_jitter_var_m2=0.0)
    hop2 = HopParams(distance_m=250.0, aperture_radius_m=0.075,
                     beam_radius_m=2.4, extinction_per_m=0.0,
                     log_amp_var=0.0, lateral_jitter_var_m2=0.0,
                     angular_jitter_var_rad2=0.0, fov_half_angle_rad=9e-3)
    for k, v in over.items():
        obj, attr = k.split("__")
        setattr(hop1 if obj == "h1" else hop2, attr, v)
    return hop1, hop2


class TestE2EGain:
    def test_deterministic_product(self):
        hop1, hop2 = _hops()
        _, a01 = geometric_coupling(0.075, 0.22)
        _, a02 = geometric_coupling(0.075, 2.4)
        d = e2e_gain_sample(hop1, hop2, 1.0, rng())
        assert d.e2e_gain == pytest.approx(a01 * a02, rel=1e-12)

    def test_fov_gate_zeroes_gain(self):
        # enormous angular jitter: every draw misses the FOV cone
        hop1, hop2 = _hops(h2__angular_jitter_var_rad2=1.0)
        draws = [e2e_gain_sample(hop1, hop2, 0.95, rng(i)) for i in range(20)]
        assert all(d.e2e_gain == 0.0 for d in draws if d.fov_miss)
        assert any(d.fov_miss for d in draws)

    def test_gain_bounded_by_rho_times_turbulence(self):
        hop1, hop2 = _hops(h1__log_amp_var=0.1, h2__log_amp_var=0.1,
                           h1__lateral_jitter_var_m2=0.005,
                           h2__lateral_jitter_var_m2=0.005,
                           h2__angular_jitter_var_rad2=5.25e-6)
        g = rng(6)
        for _ in range(200):
            d = e2e_gain_sample(hop1, hop2, 0.95, g)
            assert 0.0 <= d.e2e_gain <= 0.95 * d.h_turb + 1e-15

    def test_pdf_skewed_toward_low_values(self):
        hop1, hop2 = _hops(h1__log_amp_var=0.02, h2__log_amp_var=0.02,
                           h1__lateral_jitter_var_m2=0.005,
                           h2__lateral_jitter_var_m2=0.005,
                           h2__angular_jitter_var_rad2=5.25e-6)
        gains = sample_e2e_gains(hop1, hop2, 0.95, 200_000, rng(7))
        assert np.mean(gains < gains.mean()) > 0.5

    def test_rho_validated(self):
        hop1, hop2 = _hops()
        with pytest.raises(ValueError):
            e2e_gain_sample(hop1, hop2, 0.0, rng())


class TestGainThreshold:
    def test_unit_snr(self):
        assert gain_threshold(1.0, 1e-7, 0.5, 0.1) == \
            pytest.approx(1e-7 / 0.05, rel=1e-12)

    def test_table_point(self):
        p_t = 10 ** ((22 - 30) / 10)
        assert gain_threshold(100.0, 1e-7, 0.5, p_t) == \
            pytest.approx(1.2619e-5, rel=1e-4)

    def test_power_proportionality(self):
        a = gain_threshold(100.0, 1e-7, 0.5, 0.1)
        b = gain_threshold(100.0, 1e-7, 0.5, 0.2)
        assert a == pytest.approx(2 * b, rel=1e-12)


class TestRate:
    def radio(self, **kw):
        base = dict(responsivity_a_w=0.5, tx_power_w=0.1585, noise_std_a=1e-7,
                    efficiency=1.0, bandwidth_hz=1e9, snr_gap=1.0,
                    min_snr=1.0, throughput_cap_bps=2.5e9)
        base.update(kw)
        return RadioParams(**base)

    def test_zero_gain_zero_rate(self):
        assert snr_and_rate(0.0, self.radio()) == 0.0

    def test_snr_equals_gap(self):
        # SNR == Gamma -> rate = eta * B
        radio = self.radio(snr_gap=2.0, min_snr=1.0, efficiency=0.8)
        h = math.sqrt(2.0) * radio.noise_std_a / (
            radio.responsivity_a_w * radio.tx_power_w)
        assert snr_and_rate(h, radio) == pytest.approx(0.8e9, rel=1e-9)

    def test_log2_value(self):
        radio = self.radio(efficiency=1.0, bandwidth_hz=1e9, snr_gap=1.0)
        h = math.sqrt(3.0) * radio.noise_std_a / (
            radio.responsivity_a_w * radio.tx_power_w)
        assert snr_and_rate(h, radio) == pytest.approx(2e9, rel=1e-9)

    def test_monotone_and_decode_threshold(self):
        radio = self.radio(min_snr=100.0)
        h_th = gain_threshold(100.0, radio.noise_std_a, radio.responsivity_a_w,
                              radio.tx_power_w)
        hs = np.linspace(0, 5 * h_th, 60)
        rates = [snr_and_rate(h, radio) for h in hs]
        assert all(a <= b + 1e-9 for a, b in zip(rates, rates[1:]))
        for h, r in zip(hs, rates):
            assert (r == 0.0) == (h < h_th) or math.isclose(h, h_th)


class TestOutage:
    def hops(self):
        return _hops(h1__log_amp_var=0.02, h2__log_amp_var=0.02,
                     h1__lateral_jitter_var_m2=0.005,
                     h2__lateral_jitter_var_m2=0.005,
                     h2__angular_jitter_var_rad2=5.25e-6)

    def test_zero_threshold(self):
        hop1, hop2 = self.hops()
        p, _ = outage_probability(hop1, hop2, 0.95, 0.0, 10_000, rng(8))
        assert p == 0.0

    def test_inf_threshold(self):
        hop1, hop2 = self.hops()
        p, _ = outage_probability(hop1, hop2, 0.95, math.inf, 10_000, rng(8))
        assert p == 1.0

    def test_seeded_reproducibility(self):
        hop1, hop2 = self.hops()
        a = outage_probability(hop1, hop2, 0.95, 1e-5, 50_000, rng(9))
        b = outage_probability(hop1, hop2, 0.95, 1e-5, 50_000, rng(9))
        assert a == b

    def test_monotone_under_common_random_numbers(self):
        hop1, hop2 = self.hops()
        ths = np.logspace(-8, -2, 25)
        rows = outage_curve(hop1, hop2, 0.95, ths, 100_000, rng(10))
        ps = [p for _, p, _ in rows]
        assert all(a <= b for a, b in zip(ps, ps[1:]))  # exact, same samples


class TestCoherenceTime:
    def test_table_profiles_order_of_magnitude(self):
        t0 = coherence_time(hufnagel_valley(1.7e-14), bufton_wind(5.0),
                            1.55e-6, 500.0)
        assert 3e-3 <= t0 <= 30e-3

    def test_wind_scaling(self):
        cn2, wind = hufnagel_valley(), bufton_wind(5.0)
        t0 = coherence_time(cn2, wind, 1.55e-6, 500.0)
        t0_fast = coherence_time(cn2, lambda h: 2.0 * wind(h), 1.55e-6, 500.0)
        assert t0_fast == pytest.approx(t0 / 2.0, rel=1e-6)

    def test_cn2_scaling(self):
        cn2, wind = hufnagel_valley(), bufton_wind(5.0)
        t0 = coherence_time(cn2, wind, 1.55e-6, 500.0)
        t0_hot = coherence_time(lambda h: 2.0 * cn2(h), wind, 1.55e-6, 500.0)
        assert t0_hot == pytest.approx(t0 * 2 ** (-3 / 5), rel=1e-6)

    def test_bad_profile_raises(self):
        with pytest.raises((QuadratureError, ValueError)):
            coherence_time(lambda h: -1.0, bufton_wind(), 1.55e-6, 500.0)
