"""Gain mixing, per-port Poisson counts, contrast reduction, and the SiPM model."""

import math

import numpy as np
import pytest
import scipy.stats

from fwmqkd._kernels import STREAM_SESSION
from fwmqkd.errors import DegenerateInputError, ParameterError
from fwmqkd.photons import (
    AttenuationConfig,
    ContrastStats,
    Resolution,
    accumulate_contrast,
    compute_g2,
    draw_photon_counts,
    emulate_sipm,
    gain_from_uniform,
    invert_sipm,
    resolution,
)


def test_attenuation_config_validation():
    with pytest.raises(ParameterError):
        AttenuationConfig(mean_total_photons=0.0)
    with pytest.raises(ParameterError):
        AttenuationConfig(g2_target=0.9)
    with pytest.raises(ParameterError):
        AttenuationConfig(max_photons=0)


class TestGain:
    def test_poissonian_light_has_constant_gain(self):
        u = np.linspace(0.01, 0.99, 50)
        np.testing.assert_array_equal(gain_from_uniform(u, 1.0), np.ones(50))

    def test_matches_gamma_quantiles(self):
        u = np.linspace(0.05, 0.95, 19)
        got = gain_from_uniform(u, 1.5)
        ref = scipy.stats.gamma.ppf(u, a=2.0, scale=0.5)
        np.testing.assert_allclose(got, ref, rtol=1e-12)

    def test_gain_has_unit_mean(self):
        rng = np.random.default_rng(1)
        u = rng.random(200_000)
        assert gain_from_uniform(u, 1.4).mean() == pytest.approx(1.0, abs=0.01)

    def test_rejects_antibunched_targets(self):
        with pytest.raises(ParameterError):
            gain_from_uniform(np.array([0.5]), 0.5)


class TestDrawPhotonCounts:
    def test_dark_port_stays_dark(self):
        batch = draw_photon_counts(0.0, 1.0, AttenuationConfig(), seed=3, count=5000)
        assert not batch.n_h.any()
        assert batch.n_v.any()

    def test_budget_mean_is_respected(self):
        cfg = AttenuationConfig(mean_total_photons=1.0)
        batch = draw_photon_counts(0.5, 0.5, cfg, seed=10, count=100_000)
        total = batch.n_h + batch.n_v
        assert total.mean() == pytest.approx(1.0, abs=0.02)

    def test_ports_split_in_proportion_to_intensity(self):
        cfg = AttenuationConfig(mean_total_photons=1.0)
        batch = draw_photon_counts(0.3, 0.1, cfg, seed=21, count=200_000)
        assert batch.n_h.mean() / batch.n_v.mean() == pytest.approx(3.0, abs=0.2)

    def test_counts_respect_the_resolution_limit(self):
        cfg = AttenuationConfig(mean_total_photons=4.0, max_photons=5)
        batch = draw_photon_counts(0.5, 0.5, cfg, seed=2, count=20_000)
        assert batch.n_h.max() <= 5
        assert batch.n_v.max() <= 5
        assert batch.clamped.any()

    def test_clamping_is_rare_at_the_working_point(self):
        cfg = AttenuationConfig(mean_total_photons=1.0, g2_target=1.2)
        batch = draw_photon_counts(0.5, 0.5, cfg, seed=9, count=100_000)
        rate = batch.clamped.mean()
        assert 0.0 < rate < 0.005

    def test_batches_are_chunk_invariant(self):
        cfg = AttenuationConfig(g2_target=1.2)
        whole = draw_photon_counts(0.4, 0.6, cfg, seed=77, count=200)
        head = draw_photon_counts(0.4, 0.6, cfg, seed=77, count=120)
        tail = draw_photon_counts(0.4, 0.6, cfg, seed=77, count=80, start=120)
        np.testing.assert_array_equal(whole.n_h, np.concatenate([head.n_h, tail.n_h]))
        np.testing.assert_array_equal(whole.n_v, np.concatenate([head.n_v, tail.n_v]))
        np.testing.assert_array_equal(whole.gain, np.concatenate([head.gain, tail.gain]))

    def test_streams_are_independent_draws(self):
        cfg = AttenuationConfig()
        a = draw_photon_counts(0.5, 0.5, cfg, seed=4, count=256)
        b = draw_photon_counts(0.5, 0.5, cfg, seed=4, count=256, stream=STREAM_SESSION)
        assert not np.array_equal(a.n_h, b.n_h) or not np.array_equal(a.n_v, b.n_v)

    def test_poissonian_ports_are_uncorrelated(self):
        batch = draw_photon_counts(0.5, 0.5, AttenuationConfig(), seed=6, count=200_000)
        rho = np.corrcoef(batch.n_h, batch.n_v)[0, 1]
        assert abs(rho) < 0.01

    def test_shared_gain_bunches_the_ports_together(self):
        cfg = AttenuationConfig(g2_target=2.0)
        batch = draw_photon_counts(0.5, 0.5, cfg, seed=6, count=100_000)
        rho = np.corrcoef(batch.n_h, batch.n_v)[0, 1]
        assert rho > 0.2

    def test_input_validation(self):
        cfg = AttenuationConfig()
        with pytest.raises(ParameterError):
            draw_photon_counts(-0.1, 0.5, cfg, seed=1, count=10)
        with pytest.raises(DegenerateInputError):
            draw_photon_counts(0.0, 0.0, cfg, seed=1, count=10)
        with pytest.raises(ParameterError):
            draw_photon_counts(0.5, 0.5, cfg, seed=1, count=-1)


class TestG2:
    def test_single_photon_pulses_show_no_coincidences(self):
        assert compute_g2(np.ones(100, dtype=np.int64)) == 0.0

    def test_constant_pairs(self):
        assert compute_g2(np.full(100, 2)) == pytest.approx(0.5, abs=1e-15)

    def test_half_empty_pairs(self):
        assert compute_g2(np.array([0, 2] * 50)) == pytest.approx(1.0, abs=1e-15)

    def test_empty_record_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            compute_g2(np.zeros(10, dtype=np.int64))

    def test_measured_g2_tracks_the_poisson_target(self):
        batch = draw_photon_counts(0.5, 0.5, AttenuationConfig(), seed=15, count=200_000)
        assert compute_g2(batch.n_h + batch.n_v) == pytest.approx(1.0, abs=0.05)


class TestAccumulateContrast:
    def test_pure_horizontal_records(self):
        stats = accumulate_contrast(np.ones(6, dtype=np.int64), np.zeros(6, dtype=np.int64))
        assert stats.p_bar == 1.0
        assert stats.p_cum == 1.0
        assert stats.sigma == 0.0
        assert (stats.m_total, stats.m_used) == (6, 6)

    def test_alternating_records(self):
        n_h = np.array([1, 0, 1, 0])
        n_v = np.array([0, 1, 0, 1])
        stats = accumulate_contrast(n_h, n_v)
        assert stats.p_bar == 0.0
        assert stats.p_cum == 0.0
        assert stats.sigma == pytest.approx(math.sqrt(4.0 / 12.0), abs=1e-15)

    def test_mixed_records_hand_computed(self):
        stats = accumulate_contrast(np.array([2, 1, 0]), np.array([0, 1, 1]))
        assert stats.to_dict() == {
            "N_H": 3,
            "N_V": 2,
            "P_cum": pytest.approx(0.2, abs=1e-15),
            "P_bar": pytest.approx(0.0, abs=1e-15),
            "sigma_P": pytest.approx(math.sqrt(1.0 / 3.0), abs=1e-15),
            "M": 3,
            "M_used": 3,
        }

    def test_empty_records_are_skipped_not_counted(self):
        stats = accumulate_contrast(np.array([3, 0, 1]), np.array([0, 0, 0]))
        assert stats.m_total == 3
        assert stats.m_used == 2
        assert stats.p_bar == 1.0
        assert stats.sigma == 0.0

    def test_single_used_record_has_no_spread_estimate(self):
        stats = accumulate_contrast(np.array([0, 2]), np.array([0, 1]))
        assert stats.m_used == 1
        assert stats.sigma == 0.0
        assert stats.p_bar == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_mean_is_order_independent(self):
        rng = np.random.default_rng(12)
        n_h = rng.integers(0, 4, 500)
        n_v = rng.integers(0, 4, 500)
        if (n_h + n_v).sum() == 0:
            n_h[0] = 1
        base = accumulate_contrast(n_h, n_v)
        perm = rng.permutation(500)
        shuffled = accumulate_contrast(n_h[perm], n_v[perm])
        assert base.p_bar == shuffled.p_bar
        assert base.sigma == shuffled.sigma

    def test_degenerate_and_invalid_inputs(self):
        with pytest.raises(DegenerateInputError):
            accumulate_contrast(np.zeros(4, dtype=np.int64), np.zeros(4, dtype=np.int64))
        with pytest.raises(ParameterError):
            accumulate_contrast(np.zeros(3, dtype=np.int64), np.zeros(4, dtype=np.int64))


def _stats(p_bar, sigma):
    return ContrastStats(p_bar, p_bar, sigma, 10, 10, 5, 5)


class TestResolution:
    def test_symmetric_separation(self):
        res = resolution(_stats(0.5, 0.1), _stats(-0.5, 0.1))
        assert res.value == pytest.approx(7.0710678118654755, abs=1e-12)
        assert not res.saturated

    def test_zero_spread_saturates(self):
        res = resolution(_stats(0.5, 0.0), _stats(-0.5, 0.0))
        assert res.value == math.inf
        assert res.saturated

    def test_identical_estimates_resolve_to_zero(self):
        res = resolution(_stats(0.3, 0.05), _stats(0.3, 0.05))
        assert res.value == 0.0
        assert not res.saturated


class TestSiPM:
    def test_noiseless_emulation_is_linear(self):
        volts = emulate_sipm(np.array([0, 1, 3]))
        np.testing.assert_allclose(volts, [0.0, 0.6, 1.8], atol=1e-15)

    def test_inversion_rounds_to_nearest_step(self):
        counts = invert_sipm(np.array([-0.2, 0.05, 0.61, 1.75]))
        np.testing.assert_array_equal(counts, [0, 0, 1, 3])
        assert counts.dtype == np.int64

    def test_roundtrip_with_noise_is_exact(self):
        rng = np.random.default_rng(0)
        counts = rng.integers(0, 6, 100_000)
        volts = emulate_sipm(counts, noise_u=rng.random(100_000))
        np.testing.assert_array_equal(invert_sipm(volts), counts)

    def test_extreme_uniforms_stay_finite(self):
        # u = 0 and u = 1 clip to an 8.2 sigma excursion: finite, and at
        # 0.41 V it can shift the rounding by at most one step
        volts = emulate_sipm(np.array([2, 2]), noise_u=np.array([0.0, 1.0]))
        assert np.all(np.isfinite(volts))
        assert np.abs(invert_sipm(volts) - 2).max() <= 1


def test_resolution_type_is_frozen():
    res = Resolution(1.0, False)
    with pytest.raises(AttributeError):
        res.value = 2.0
