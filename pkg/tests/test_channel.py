"""Tests for the LoS channel: gain, noise, budgets, waveform synthesis."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vlcloc.channel import (
    HIGH_NOISE,
    LOW_NOISE,
    ChannelCondition,
    LinkBudget,
    QrxConfig,
    TxConfig,
    cell_noise_variance,
    channel_gain,
    feedback_resistance,
    lambertian_order,
    link_budget,
    noise_variance,
    optical_gain,
    reverse_link,
    sample_times,
    synthesize_rx,
    tone_correlation,
    tone_phase,
)
from vlcloc.errors import AliasingError, DomainError
from vlcloc.geometry import LinkGeometry, Pose2D, link_geometry

FORWARD = math.pi / 2.0


def boresight_link(distance: float) -> LinkGeometry:
    return link_geometry(
        Pose2D(0.0, 0.0, FORWARD), Pose2D(0.0, distance, -FORWARD)
    )


class TestLambertianOrder:
    def test_20_degrees_gives_11(self):
        assert lambertian_order(math.radians(20.0)) == 11

    def test_60_degrees_classic(self):
        assert lambertian_order(math.radians(60.0)) == 1

    def test_30_degrees_direct_evaluation(self):
        # floor(-ln 2 / ln cos 30deg) = floor(4.81884...) = 4
        assert lambertian_order(math.radians(30.0)) == 4

    def test_domain(self):
        with pytest.raises(DomainError):
            lambertian_order(0.0)
        with pytest.raises(DomainError):
            lambertian_order(math.pi / 2.0)


class TestFeedbackResistance:
    def test_reference_hardware_value(self):
        # 2.84 kOhm within 1 percent for G=10, B=10 MHz, C_T=56 pF.
        assert feedback_resistance(10.0, 1e7, 56e-12) == pytest.approx(2840.0, rel=0.01)
        assert feedback_resistance(10.0, 1e7, 56e-12) == pytest.approx(
            2842.0525552124167, rel=1e-12
        )

    def test_unit_cancellation(self):
        assert feedback_resistance(2.0 * math.pi, 1.0, 1.0) == pytest.approx(1.0)

    def test_inverse_proportionality(self):
        assert feedback_resistance(10.0, 2e7, 56e-12) == pytest.approx(
            feedback_resistance(10.0, 1e7, 56e-12) / 2.0
        )

    def test_domain(self):
        with pytest.raises(DomainError):
            feedback_resistance(-1.0, 1e7, 56e-12)


class TestChannelGain:
    tx = TxConfig()
    rx = QrxConfig()

    def test_boresight_5m_hand_value(self):
        # (m+1)/(2 pi) * A / d^2 = (12 / 2 pi) * 50e-6 / 25
        link = boresight_link(5.0)
        assert optical_gain(link, self.tx, self.rx) == pytest.approx(
            3.8197186342054881e-06, rel=1e-12
        )
        assert channel_gain(link, self.tx, self.rx) == pytest.approx(
            0.5 * 3.8197186342054881e-06, rel=1e-12
        )

    def test_beam_edge_zero(self):
        # Lamp turned sideways: irradiance angle 90 degrees.
        link = link_geometry(Pose2D(0, 0, FORWARD), Pose2D(0, 5, 0.0))
        assert link.irradiance_phi == pytest.approx(math.pi / 2.0)
        assert channel_gain(link, self.tx, self.rx) == 0.0

    def test_fov_clip(self):
        # Incidence just outside +/-80 degrees.
        ang = math.radians(80.5)
        tx_pose = Pose2D(5.0 * math.sin(ang), 5.0 * math.cos(ang), -FORWARD)
        link = link_geometry(Pose2D(0, 0, FORWARD), tx_pose)
        assert channel_gain(link, self.tx, self.rx) == 0.0
        ang = math.radians(79.5)
        tx_pose = Pose2D(5.0 * math.sin(ang), 5.0 * math.cos(ang), -FORWARD)
        link = link_geometry(Pose2D(0, 0, FORWARD), tx_pose)
        assert channel_gain(link, self.tx, self.rx) > 0.0

    def test_inverse_square_law(self):
        g1 = optical_gain(boresight_link(4.0), self.tx, self.rx)
        g2 = optical_gain(boresight_link(8.0), self.tx, self.rx)
        assert g2 == pytest.approx(g1 / 4.0, rel=1e-12)


class TestNoiseVariance:
    rx = QrxConfig()

    def test_zero_signal_keeps_floor(self):
        sigma2 = noise_variance(self.rx, LOW_NOISE, 0.0)
        assert sigma2 > 0.0
        # background shot + thermal only
        with_signal = noise_variance(self.rx, LOW_NOISE, 3.82e-6)
        assert with_signal > sigma2

    def test_reference_operating_point(self):
        # Frozen from an arbitrary-precision evaluation of the shot and
        # thermal terms at P_r = 3.8197186342e-6 W, I_bg = 10 uA, T = 273 K.
        sigma2 = noise_variance(self.rx, LOW_NOISE, 3.8197186342054881e-06)
        assert sigma2 == pytest.approx(6.204250078863544e-17, rel=1e-10)
        assert sigma2 == pytest.approx(6.2e-17, rel=0.01)

    def test_high_noise_dominates(self):
        p = 3.82e-6
        assert noise_variance(self.rx, HIGH_NOISE, p) > noise_variance(
            self.rx, LOW_NOISE, p
        )

    def test_monotonic_in_all_drivers(self):
        base = noise_variance(self.rx, LOW_NOISE, 1e-6)
        assert noise_variance(self.rx, LOW_NOISE, 2e-6) > base
        more_bg = ChannelCondition(20e-6, 273.0, "x")
        assert noise_variance(self.rx, more_bg, 1e-6) > base
        hotter = ChannelCondition(10e-6, 300.0, "x")
        assert noise_variance(self.rx, hotter, 1e-6) > base
        import dataclasses

        wider = dataclasses.replace(self.rx, bandwidth_b=2e7)
        assert noise_variance(wider, LOW_NOISE, 1e-6) > base

    def test_negative_power_rejected(self):
        with pytest.raises(DomainError):
            noise_variance(self.rx, LOW_NOISE, -1e-9)

    def test_cell_noise_splits_background(self):
        """Four cell front ends: shot scales with the per-cell light and a
        quarter background each; thermal repeats per cell."""
        p_total = 3.82e-6
        total = 4.0 * cell_noise_variance(self.rx, LOW_NOISE, p_total / 4.0)
        single = noise_variance(self.rx, LOW_NOISE, p_total)
        thermal = noise_variance(self.rx, ChannelCondition(0.0, 273.0, "t"), 0.0)
        assert total == pytest.approx(single + 3.0 * thermal, rel=1e-12)


class TestLinkBudget:
    def test_budget_consistency(self):
        tx, rx = TxConfig(), QrxConfig()
        link = boresight_link(5.0)
        budget = link_budget(link, tx, rx, LOW_NOISE)
        assert budget.received_optical_power == pytest.approx(3.8197e-6, rel=1e-4)
        assert budget.gain_h == pytest.approx(rx.responsivity * 3.8197e-6, rel=1e-4)
        assert budget.noise_variance > 0
        expected_snr = budget.gain_h**2 / (2 * budget.noise_variance)
        assert budget.snr == pytest.approx(expected_snr)

    def test_clipped_budget_keeps_noise(self):
        tx, rx = TxConfig(), QrxConfig()
        link = link_geometry(Pose2D(0, 0, FORWARD), Pose2D(0, 5, 0.0))
        budget = link_budget(link, tx, rx, LOW_NOISE)
        assert budget.gain_h == 0.0
        assert budget.noise_variance > 0.0
        assert budget.snr == 0.0


def test_reverse_link_swaps_angles():
    rx = Pose2D(0.0, 0.0, FORWARD)
    tx = Pose2D(2.0, 6.0, -FORWARD + 0.2)
    fwd = link_geometry(rx, tx)
    rev = reverse_link(fwd)
    assert rev.distance_d == fwd.distance_d
    assert rev.delay_tau == fwd.delay_tau
    incidence_fwd = abs(fwd.aoa_theta - math.pi / 2.0)
    incidence_rev = abs(rev.aoa_theta - math.pi / 2.0)
    assert incidence_rev == pytest.approx(fwd.irradiance_phi, abs=1e-12)
    assert rev.irradiance_phi == pytest.approx(incidence_fwd, abs=1e-12)


class TestSynthesizeRx:
    fs = 1.0e7

    def test_noiseless_tone_phase(self):
        tau = 1.668e-8
        f = 1.0e6
        r = synthesize_rx([(f, 1.0, 2.0e-6, tau)], 0.0, 1.0 / 200.0, self.fs, seed=1)
        corr = tone_correlation(r, f, self.fs)
        assert abs(corr) == pytest.approx(2.0e-6, rel=1e-9)
        measured = tone_phase(corr)
        assert measured == pytest.approx(2.0 * math.pi * f * tau, abs=1e-9)

    def test_noise_only_variance(self):
        sigma = 3.0e-9
        r = synthesize_rx([], sigma, 1e5 / self.fs, self.fs, seed=42)
        assert r.shape == (100000,)
        assert np.var(r) == pytest.approx(sigma**2, rel=0.05)

    def test_two_tone_separation_against_dft_oracle(self):
        taus = (1.1e-8, 2.9e-8)
        freqs = (1.0e6, 0.9e6)
        r = synthesize_rx(
            [(freqs[0], 1.0, 1.5e-6, taus[0]), (freqs[1], 1.0, 2.5e-6, taus[1])],
            0.0,
            1.0 / 200.0,
            self.fs,
            seed=0,
        )
        # Oracle: direct DFT coefficient at each tone bin of the noiseless
        # waveform, computed independently of tone_correlation.
        n = r.size
        t = np.arange(n) / self.fs
        for f, tau in zip(freqs, taus):
            coeff = 2.0 / n * np.sum(r * np.exp(-2j * np.pi * f * t))
            psi = tone_phase(coeff)
            assert psi == pytest.approx(2.0 * math.pi * f * tau, abs=1e-6)

    def test_bit_reproducible(self):
        args = ([(1e6, 1.0, 1e-6, 1e-8)], 5e-9, 1e-3, self.fs)
        a = synthesize_rx(*args, seed=7)
        b = synthesize_rx(*args, seed=7)
        assert np.array_equal(a, b)
        c = synthesize_rx(*args, seed=8)
        assert not np.array_equal(a, c)

    def test_nyquist_guard(self):
        with pytest.raises(AliasingError):
            synthesize_rx([(6e6, 1.0, 1e-6, 0.0)], 0.0, 1e-4, self.fs, seed=0)


@given(st.floats(1.5, 25.0))
@settings(max_examples=40, deadline=None)
def test_gain_inverse_square_property(distance):
    tx, rx = TxConfig(), QrxConfig()
    g1 = optical_gain(boresight_link(distance), tx, rx)
    g2 = optical_gain(boresight_link(2.0 * distance), tx, rx)
    assert g2 == pytest.approx(g1 / 4.0, rel=1e-12)
