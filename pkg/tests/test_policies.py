import math

import pytest

from beamsched.policies import (Decision, PolicyConfig, PolicySnapshot,
                                aci_a_select, aci_pa_select, aci_select,
                                amortized_goodput, early_halt_check,
                                estimated_frame_bits, mw_select,
                                starvation_threshold, switching_modulator,
                                zeta_bound)

DT = 0.01041


def snap(backlogs, rates, current=0, taus=None, chis=None, ages=None,
         available=None, slot_len=DT):
    n = len(backlogs)
    return PolicySnapshot(
        slot=10, current=current, backlogs=list(backlogs),
        rates_bps=list(rates), hol_ages=list(ages or [0] * n),
        tau_forecast_slots=list(taus or [0.0] * n),
        chi=list(chis or [0.0] * n),
        available=list(available or [True] * n), slot_len_s=slot_len)


CFG = PolicyConfig(beta=1.0, gamma=1.0, frame_len=3)


class TestMaxWeight:
    def test_weighted_argmax(self):
        d = mw_select([10, 5], [1, 3], current=0)
        assert d.action == "switch" and d.target == 1   # weights 10 vs 15

    def test_all_zero_stays(self):
        d = mw_select([0, 0, 0], [5, 5, 5], current=2)
        assert d.action == "stay" and d.target == 2
        assert mw_select([0, 0], [1, 1], current=None).action == "idle"

    def test_tie_breaks_lowest_index(self):
        d = mw_select([7, 7], [2, 2], current=None)
        assert d.target == 0

    def test_scale_invariance(self):
        a = mw_select([3, 9, 4], [2, 1, 2], current=0)
        b = mw_select([30, 90, 40], [2, 1, 2], current=0)
        assert a.target == b.target and a.action == b.action


class TestFrameBits:
    def test_zero_rate(self):
        assert estimated_frame_bits(0.0, 3, DT) == 0.0

    def test_overhead_clamp(self):
        assert estimated_frame_bits(1e9, 3, 0.01, proc_overhead_s=0.02) == 0.0

    def test_linear(self):
        assert estimated_frame_bits(1e9, 3, 0.01) == pytest.approx(3e7)


class TestAmortizedGoodput:
    def test_no_switch_limit(self):
        # tau = 0: B/(L dt) recovers the rate net of processing overhead
        bits = estimated_frame_bits(1e9, 3, 0.01, 0.001)
        assert amortized_goodput(bits, 0, 3, 0.01) == pytest.approx(1e9 * 0.9)

    def test_arithmetic(self):
        assert amortized_goodput(3e7, 2, 3, 0.01) == pytest.approx(6e8)

    def test_vanishes_with_large_tau(self):
        assert amortized_goodput(3e7, 1e12, 3, 0.01) < amortized_goodput(
            3e7, 100, 3, 0.01) / 1e6


class TestModulator:
    def test_neutral(self):
        assert switching_modulator(0, 0.0, 1.0, 1.0) == 1.0

    def test_bonus_cancels_penalty(self):
        assert switching_modulator(1, 1.0, 1.0, 1.0) == 1.0

    def test_penalty(self):
        assert switching_modulator(3, 0.0, 1.0, 0.0) == 0.25

    def test_bounds(self):
        tau_max = 400
        f_min = 1.0 / (1.0 + 1.0 * tau_max)
        f_max = 1.0 + 1.0
        for tau in (0, 1, 10, 400):
            for chi in (0.0, 0.5, 1.0):
                f = switching_modulator(tau, chi, 1.0, 1.0)
                assert f_min - 1e-12 <= f <= f_max + 1e-12


class TestZeta:
    def test_mw_limit(self):
        assert zeta_bound(0.0, 0.0, 100) == 1.0

    def test_arithmetic(self):
        assert zeta_bound(1.0, 1.0, 10) == pytest.approx(1 / 22)

    def test_monotone(self):
        base = zeta_bound(1.0, 1.0, 10)
        assert zeta_bound(2.0, 1.0, 10) < base
        assert zeta_bound(1.0, 2.0, 10) < base
        assert zeta_bound(1.0, 1.0, 20) < base

    def test_requires_finite_tau_max(self):
        with pytest.raises(ValueError):
            zeta_bound(1.0, 1.0, math.inf)


class TestStarvationThreshold:
    def test_symmetric_case(self):
        assert starvation_threshold(100.0, 1e9, 1e9, 1.0, 1.0, 0.0, 3, DT) == \
            pytest.approx(100.0)

    def test_arithmetic(self):
        # rate/modulator ratio 2, tau/(L dt) = 1 -> Theta = 400
        theta = starvation_threshold(100.0, 2e9, 1e9, 1.0, 1.0, 3.0, 3, DT)
        assert theta == pytest.approx(400.0)

    def test_decreasing_in_dwell(self):
        a = starvation_threshold(100.0, 1e9, 1e9, 1.0, 1.0, 6.0, 3, DT)
        b = starvation_threshold(100.0, 1e9, 1e9, 1.0, 1.0, 6.0, 6, DT)
        assert b < a

    def test_unservable_queue_infinite(self):
        assert starvation_threshold(100.0, 1e9, 0.0, 1.0, 1.0, 3.0, 3, DT) \
            == math.inf


class TestAciSelect:
    def test_single_queue(self):
        d = aci_select(snap([100], [1e9], current=0), CFG)
        assert d.action == "stay" and d.target == 0

    def test_identical_queues_stay(self):
        # any positive switch time strictly discounts the challenger
        s = snap([100, 100], [1e9, 1e9], current=0, taus=[0, 50], chis=[0, 1.0])
        d = aci_select(s, CFG)
        assert d.action == "stay" and d.target == 0

    def test_threshold_crossing_forces_switch(self):
        tau, chi = 120.0, 0.2
        f_ii = 1.0  # self affinity 0
        f_ij = (1 + CFG.gamma * chi) / (1 + CFG.beta * tau)
        theta = starvation_threshold(100.0, 1e9, 1e9, f_ii, f_ij, tau,
                                     CFG.frame_len, DT)
        below = snap([100, theta * 0.99], [1e9, 1e9], current=0,
                     taus=[0, tau], chis=[0, chi])
        above = snap([100, theta * 1.01], [1e9, 1e9], current=0,
                     taus=[0, tau], chis=[0, chi])
        assert aci_select(below, CFG).action == "stay"
        d = aci_select(above, CFG)
        assert d.action == "switch" and d.target == 1

    def test_scaling_backlogs_preserves_decision(self):
        s1 = snap([5, 900, 20], [1e9, 1e9, 1e9], current=0,
                  taus=[0, 120, 120], chis=[0, 0.3, 0.0])
        s2 = snap([50, 9000, 200], [1e9, 1e9, 1e9], current=0,
                  taus=[0, 120, 120], chis=[0, 0.3, 0.0])
        assert aci_select(s1, CFG).target == aci_select(s2, CFG).target

    def test_unavailable_candidates_excluded(self):
        s = snap([1, 1e9], [1e9, 1e9], current=0, taus=[0, 10],
                 available=[True, False])
        d = aci_select(s, CFG)
        assert d.action == "stay" and d.target == 0

    def test_idle_when_no_position_and_nothing_positive(self):
        s = snap([0, 0], [1e9, 1e9], current=None)
        assert aci_select(s, CFG).action == "idle"

    def test_dwell_is_frame_length(self):
        s = snap([10, 1e12], [1e9, 1e9], current=0, taus=[0, 10])
        d = aci_select(s, CFG)
        assert d.dwell_slots == CFG.frame_len


class TestAgeVariants:
    def test_all_empty_idles(self):
        s = snap([0, 0], [1e9, 1e9], current=0, ages=[0, 0])
        assert aci_a_select(s, CFG).action == "idle"
        assert aci_pa_select(s, CFG).action == "idle"

    def test_equal_ages_reduce_to_goodput_argmax(self):
        s = snap([1, 1], [1e9, 2e9], current=None, ages=[50, 50])
        d = aci_a_select(s, CFG)
        assert d.target == 1

    def test_age_argmax(self):
        s = snap([1, 1], [1e9, 1e9], current=None, ages=[100, 10])
        assert aci_a_select(s, CFG).target == 0

    def test_pure_age_argmax_and_tie(self):
        s = snap([1, 1, 1], [1e9, 1e9, 1e9], current=None, ages=[5, 9, 1])
        assert aci_pa_select(s, CFG).target == 1
        s_tie = snap([1, 1], [1e9, 1e9], current=None, ages=[9, 9])
        assert aci_pa_select(s_tie, CFG).target == 0

    def test_pure_age_ignores_zero_rate(self):
        # documents the hazard: oldest head wins even on a dead channel
        s = snap([1, 1], [0.0, 1e9], current=1, ages=[500, 5])
        assert aci_pa_select(s, CFG).target == 0


class TestEarlyHalt:
    def test_drain(self):
        assert early_halt_check(0, 0, 1e9, 5, 1e9, 1.0, 0.0, CFG) == "drained"

    def test_persistent_outage(self):
        assert early_halt_check(10, 2, 1e9, 5, 1e9, 1.0, 0.0, CFG) == "outage"

    def test_shortfall(self):
        # forecast 1e9, realized (4e8, 4e8) -> mean below half the forecast
        assert early_halt_check(10, 0, 4e8, 2, 1e9, 1.0, 0.0, CFG) == "shortfall"

    def test_dominated(self):
        assert early_halt_check(10, 0, 1e9, 5, 1e9, 1.0, 2.5, CFG) == "dominated"

    def test_healthy_frame_continues(self):
        assert early_halt_check(10, 1, 0.9e9, 3, 1e9, 1.0, 1.5, CFG) is None

    def test_shortfall_needs_two_slots(self):
        assert early_halt_check(10, 0, 1e8, 1, 1e9, 1.0, 0.0, CFG) is None


class TestConfigValidation:
    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            PolicyConfig(beta=-1.0)

    def test_frame_length_positive(self):
        with pytest.raises(ValueError):
            PolicyConfig(frame_len=0)
