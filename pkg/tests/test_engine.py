import math
from dataclasses import replace

import numpy as np
import pytest

from beamsched.config import ExperimentConfig
from beamsched.engine import (EmptySampleError, MetricsLog, Simulation,
                              delay_cdf, feasibility_check, mean_from_hist,
                              phi_sw, quantile_from_hist, run, stability_probe,
                              summarize, time_budget)
from beamsched.queueing import enqueue_count


def deterministic_cfg(**over):
    """Two-queue config with a noiseless channel and deterministic switch
    times, for hand-traceable engine behavior."""
    cfg = ExperimentConfig()
    cfg.geometry = replace(cfg.geometry, n_slaves=2, loiter_radius_m=0.0)
    cfg.channel = replace(cfg.channel, log_amp_var=0.0, sigma_platform_m=0.0,
                          sigma_ground_m=0.0, sigma_theta_rad=0.0,
                          sigma_turb_rad=0.0, extinction_per_m=0.0)
    cfg.switching = replace(cfg.switching, iid_sigma=0.0,
                            acq_drift_sigma=0.0, acq_drift_sigma_global=0.0,
                            p_base=1.0)
    cfg.switch_model = "IID"
    cfg.horizon_slots = 2000
    cfg.metrics = replace(cfg.metrics, warmup_frac=0.0)
    for k, v in over.items():
        setattr(cfg, k, v)
    return cfg


class TestRunBasics:
    def test_zero_arrivals_all_idle(self):
        cfg = deterministic_cfg(horizon_slots=500)
        cfg.traffic = replace(cfg.traffic, total_arrival_rate_bps=0.0)
        log = run(cfg, seed=1)
        assert log.class_counts == [0, 0, 500]
        assert sum(log.combined_delay_hist().values()) == 0
        assert phi_sw(log) == 0.0
        assert stability_probe(log.total_backlog_trace) == "STABLE"

    def test_single_queue_never_switches(self):
        cfg = deterministic_cfg(horizon_slots=3000)
        cfg.geometry = replace(cfg.geometry, n_slaves=1)
        cfg.traffic = replace(cfg.traffic, total_arrival_rate_bps=50e6)
        log = run(cfg, seed=2)
        assert phi_sw(log) == 0.0
        assert not log.switch_events
        assert log.class_counts[1] == 0
        assert log.serve_slots[0] > 0

    def test_slot_partition_exact(self):
        cfg = deterministic_cfg(horizon_slots=4000)
        log = run(cfg, seed=3)
        assert sum(log.class_counts) == 4000

    def test_conservation_per_queue(self):
        cfg = deterministic_cfg(horizon_slots=5000)
        log = run(cfg, seed=4)
        for i in range(log.n_queues):
            assert log.arrived_bits[i] == \
                log.departed_bits[i] + log.final_backlog_bits[i]

    def test_blackout_accounting(self):
        cfg = deterministic_cfg(horizon_slots=8000)
        log = run(cfg, seed=5)
        assert log.class_counts[1] == sum(e.tau_slots for e in log.switch_events)


class TestBlackoutSemantics:
    def test_no_service_during_blackout_then_frame(self):
        cfg = deterministic_cfg(horizon_slots=600)
        cfg.traffic = replace(cfg.traffic, total_arrival_rate_bps=0.0)
        sim = Simulation(cfg, seed=6)
        # park the server on queue 0, then make queue 1 irresistible
        enqueue_count(sim.queues[0], 0, 1, 12_000)
        enqueue_count(sim.queues[1], 0, 10_000_000, 12_000)
        sim.current = 0
        sim.frame_remaining = 0
        sim.run()
        log = sim.log
        assert log.switch_events and log.switch_events[0].slot == 0
        tau = log.switch_events[0].tau_slots
        assert tau >= 1
        trace = log.current_by_slot
        assert all(trace[t] == -2 for t in range(tau))      # blacked out
        assert trace[tau] == 1                              # then serving
        assert log.departed_bits[1] > 0
        # mid-blackout slots served nothing even though rates were high
        assert log.departed_bits[0] == 0

    def test_frame_runs_its_length_without_halts(self):
        cfg = deterministic_cfg(horizon_slots=12)
        cfg.traffic = replace(cfg.traffic, total_arrival_rate_bps=0.0)
        sim = Simulation(cfg, seed=7)
        enqueue_count(sim.queues[0], 0, 100_000, 12_000)  # never drains
        log = sim.run()
        assert log.halts == {}
        assert log.class_counts[0] == 12   # uninterrupted serving

    def test_halt_on_drain_releases_next_slot(self):
        cfg = deterministic_cfg(horizon_slots=10)
        cfg.traffic = replace(cfg.traffic, total_arrival_rate_bps=0.0)
        sim = Simulation(cfg, seed=8)
        # 1.5 slots of service: drains mid-frame, halt fires next slot
        mu = int(sim.mu_slot_bits[0, 0])
        enqueue_count(sim.queues[0], 0, (3 * mu) // (2 * 12_000), 12_000)
        log = sim.run()
        assert log.halts.get("drained", 0) >= 1
        assert log.class_counts[1] == 0    # halting never caused a switch


class TestCommonRandomNumbers:
    def test_policies_see_identical_arrivals_and_channel(self):
        cfg_a = deterministic_cfg(horizon_slots=1500)
        cfg_a.channel = replace(cfg_a.channel, log_amp_var=0.05,
                                sigma_platform_m=0.05, sigma_ground_m=0.05,
                                sigma_theta_rad=1e-3)
        cfg_b = replace(cfg_a, policy="MW")
        log_a = run(cfg_a, seed=9)
        log_b = run(cfg_b, seed=9)
        assert log_a.arrivals_sha256 == log_b.arrivals_sha256
        assert log_a.channel_sha256 == log_b.channel_sha256
        assert log_a.policy != log_b.policy

    def test_different_seeds_differ(self):
        cfg = deterministic_cfg(horizon_slots=500)
        assert run(cfg, seed=1).arrivals_sha256 != run(cfg, seed=2).arrivals_sha256


class TestDeterminism:
    def test_identical_runs_identical_summaries(self):
        cfg = deterministic_cfg(horizon_slots=2500)
        cfg.channel = replace(cfg.channel, log_amp_var=0.05,
                              sigma_platform_m=0.05, sigma_ground_m=0.05,
                              sigma_theta_rad=1e-3)
        cfg.switch_model = "FSO"
        a, b = summarize(run(cfg, seed=11)), summarize(run(cfg, seed=11))
        assert a == b


class TestWorkConservation:
    def test_mw_never_idles_with_backlog(self):
        cfg = deterministic_cfg(horizon_slots=4000, policy="MW")
        log = run(cfg, seed=12)
        # only the empty-system prefix may idle under Max-Weight with an
        # always-on deterministic channel
        assert log.class_counts[2] <= 1


class TestTimeBudget:
    def make_log(self, counts):
        log = MetricsLog(policy="X", switch_model="Y", seed=0, horizon=sum(counts),
                         slot_len_s=0.01, n_queues=1, warmup_slots=0)
        log.class_counts_post = list(counts)
        return log

    def test_all_idle(self):
        assert time_budget(self.make_log([0, 0, 50])) == (0.0, 0.0, 1.0)

    def test_counting(self):
        s, w, i = time_budget(self.make_log([60, 40, 0]))
        assert (s, w, i) == (0.6, 0.4, 0.0)

    def test_partition_sums_to_one(self):
        s, w, i = time_budget(self.make_log([13, 7, 3]))
        assert s + w + i == 1.0


class TestPhiSw:
    def test_no_switches(self):
        log = MetricsLog(policy="X", switch_model="Y", seed=0, horizon=10,
                         slot_len_s=0.01, n_queues=2, warmup_slots=0,
                         visit_slots=[5, 5],
                         transition_counts=[[0, 0], [0, 0]],
                         transition_tau_sums=[[0, 0], [0, 0]])
        assert phi_sw(log) == 0.0

    def test_alternating_visits(self):
        # visits (3,3) with mean switchover 2 each way -> 4/10
        log = MetricsLog(policy="X", switch_model="Y", seed=0, horizon=10,
                         slot_len_s=0.01, n_queues=2, warmup_slots=0,
                         visit_slots=[3, 3],
                         transition_counts=[[0, 1], [1, 0]],
                         transition_tau_sums=[[0, 2], [2, 0]])
        assert phi_sw(log) == pytest.approx(0.4)

    def test_bounded(self):
        cfg = deterministic_cfg(horizon_slots=6000)
        log = run(cfg, seed=13)
        assert 0.0 <= phi_sw(log) < 1.0


class TestFeasibility:
    def test_zero_load(self):
        v, margin = feasibility_check([0.0, 0.0], [1e9, 1e9], 0.3)
        assert v == "INSIDE" and margin == pytest.approx(0.7)

    def test_inside_with_margin(self):
        v, margin = feasibility_check([0.25e9, 0.25e9], [1e9, 1e9], 0.3)
        assert v == "INSIDE" and margin == pytest.approx(0.2)

    def test_outside(self):
        v, margin = feasibility_check([0.4e9, 0.4e9], [1e9, 1e9], 0.3)
        assert v == "OUTSIDE" and margin == pytest.approx(-0.1)

    def test_rejects_zero_rates(self):
        with pytest.raises(ValueError):
            feasibility_check([1.0], [0.0], 0.1)


class TestDelayCdf:
    def test_single_sample_step(self):
        assert quantile_from_hist({7: 1}, 0.5) == 7.0
        assert quantile_from_hist({7: 1}, 0.99) == 7.0

    def test_median_midpoint_convention(self):
        hist = {1: 1, 2: 1, 3: 1, 4: 1}
        assert quantile_from_hist(hist, 0.5) == 2.5

    def test_quantiles_monotone(self):
        hist = {1: 10, 5: 5, 20: 3, 100: 1}
        qs = [quantile_from_hist(hist, q) for q in (0.1, 0.5, 0.9, 0.99)]
        assert qs == sorted(qs)

    def test_mean(self):
        assert mean_from_hist({2: 2, 8: 2}) == 5.0

    def test_empty_signals(self):
        with pytest.raises(EmptySampleError):
            quantile_from_hist({}, 0.5)
        with pytest.raises(EmptySampleError):
            delay_cdf({})


class TestStabilityProbe:
    def test_zero_arrivals_stable(self):
        assert stability_probe(np.zeros(10_000)) == "STABLE"

    def test_constructed_drift_growing(self):
        assert stability_probe(np.arange(100_000, dtype=float)) == "GROWING"

    def test_flat_sawtooth_stable(self):
        t = np.arange(100_000)
        saw = 1e9 + 5e8 * ((t % 4000) / 4000.0)
        assert stability_probe(saw) == "STABLE"

    def test_window_validation(self):
        with pytest.raises(ValueError):
            stability_probe(np.zeros(100), window=50)


class TestMetricsSummary:
    def test_alpha_varphi_consistent(self):
        cfg = deterministic_cfg(horizon_slots=5000)
        m = summarize(run(cfg, seed=14))
        assert m["varphi"] == pytest.approx(
            [(1 - m["phi_sw"]) * a for a in m["alpha"]])
        assert 0.0 <= m["phi_sw"] < 1.0
        assert m["schema_version"] == 1
