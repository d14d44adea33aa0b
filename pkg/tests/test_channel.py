"""
Unit tests for the communication and sensing channel models.
"""

import numpy as np
import pytest

from jcas_lab.core.errors import ConfigurationError, DomainError, PreconditionError
from jcas_lab.core.rng import SeededRng
from jcas_lab.physics.channel import (
    CommLinkParams,
    SenseLinkParams,
    acm,
    acm_batch,
    comm_channel,
    draw_comm,
    partition_windows,
    sample_scene,
    sample_scene_batch,
    sense_channel,
    sense_channel_batch,
    window_symbols,
)
from jcas_lab.physics.waveform import (
    AngleRegion,
    assemble_block,
    beam_gain,
    build_qam,
    matched_beam,
    modulate,
    random_bits,
    steering_vector,
    uniform_beam,
)

COMM = AngleRegion.from_degrees(30.0, 50.0)
SENSING = AngleRegion.from_degrees(-20.0, 20.0)


class TestCommChannel:
    """Single-tap Rayleigh link"""

    def test_noiseless_block_matches_kappa(self):
        """Without noise z = kappa x"""
        params = CommLinkParams(1.0, 0.0, COMM)
        v = uniform_beam(8)
        x = np.exp(1j * np.linspace(0, 1, 20))
        z, real = comm_channel(assemble_block(v, x), params, v, SeededRng(1))
        assert np.allclose(z, real.kappa * x)

    def test_draw_comm_matches_block_channel(self):
        """Symbol-stream and block forms give the same realization"""
        params = CommLinkParams(1.0, 0.1, COMM)
        v = matched_beam(np.deg2rad(40.0), 8)
        x = np.ones(50, dtype=complex)
        z1, r1 = draw_comm(x, v, params, SeededRng(3))
        z2, r2 = comm_channel(assemble_block(v, x), params, v, SeededRng(3))
        assert np.allclose(z1, z2)
        assert np.allclose(r1.kappa, r2.kappa)

    def test_angles_inside_region(self):
        """Receiver angles stay in the configured region"""
        _, real = draw_comm(np.ones(500), uniform_beam(4), CommLinkParams(1.0, 1.0, COMM), SeededRng(2))
        assert np.all((real.angles >= COMM.min) & (real.angles <= COMM.max))

    def test_per_window_angle(self):
        """With per-window angles every symbol of a window shares phi"""
        params = CommLinkParams(1.0, 1.0, COMM, per_symbol_angle=False)
        index = np.repeat(np.arange(4), 5)
        _, real = draw_comm(np.ones(20), uniform_beam(4), params, SeededRng(2), window_index=index)
        for w in range(4):
            assert np.unique(real.angles[index == w]).size == 1

    def test_fading_power(self):
        """E|kappa|^2 equals sigma_c^2 times the mean beam gain"""
        params = CommLinkParams(2.0, 1.0, AngleRegion(0.3, 0.3))
        v = matched_beam(0.3, 4)
        _, real = draw_comm(np.ones(100_000), v, params, SeededRng(4))
        assert np.mean(np.abs(real.kappa) ** 2) == pytest.approx(2.0 * 4.0, rel=0.03)

    def test_received_power_budget(self):
        """E|z|^2 = sigma_c^2 beta(phi) E|x|^2 + sigma_n^2 and the residual is the noise"""
        qam = build_qam(16)
        params = CommLinkParams(1.5, 0.5, COMM)
        v = uniform_beam(4)
        x = modulate(random_bits(200_000, qam, SeededRng(1)), qam)
        z, real = comm_channel(assemble_block(v, x), params, v, SeededRng(2))
        expected = 1.5 * np.mean(beam_gain(v, real.angles) * np.abs(x) ** 2) + 0.5
        assert np.mean(np.abs(z) ** 2) == pytest.approx(expected, rel=0.02)
        assert np.mean(np.abs(z - real.kappa * x) ** 2) == pytest.approx(0.5, rel=0.02)
        assert np.mean(np.abs(real.fading) ** 2) == pytest.approx(1.5, rel=0.02)

    def test_snr(self):
        """SNR is the sigma ratio"""
        assert CommLinkParams(1.0, 0.1, COMM).snr == pytest.approx(10.0)
        assert CommLinkParams(1.0, 0.0, COMM).snr == float("inf")

    def test_negative_power(self):
        """Negative powers are configuration errors"""
        with pytest.raises(ConfigurationError):
            CommLinkParams(1.0, -1.0, COMM)


class TestSensingChannel:
    """Swerling-1 monostatic reflection"""

    def test_absent_target_is_noise_only(self):
        """T = 0 blocks carry no echo"""
        params = SenseLinkParams(1.0, 0.0, SENSING, target_prior=0.0)
        scene = sample_scene(params, 5, SeededRng(1))
        z = sense_channel(assemble_block(uniform_beam(4), np.ones(5)), scene, params, SeededRng(2))
        assert not scene.present
        assert np.allclose(z, 0.0)

    def test_noiseless_echo_is_rank_one(self):
        """Present target without noise gives a rank-one block along a(theta)"""
        params = SenseLinkParams(1.0, 0.0, SENSING, target_prior=1.0)
        scene = sample_scene(params, 6, SeededRng(1))
        z = sense_channel(assemble_block(matched_beam(0.0, 8), np.ones(6)), scene, params, SeededRng(2))
        singular = np.linalg.svd(z, compute_uv=False)
        assert singular[1] < 1e-10 * singular[0]
        a = steering_vector(scene.angle, 8)
        assert np.allclose(z[:, 0] / z[0, 0], a / a[0])

    def test_scene_statistics(self):
        """T ~ Bernoulli(p_T1) and theta uniform on the sensing region"""
        params = SenseLinkParams(1.0, 1.0, SENSING, target_prior=0.3)
        generator = SeededRng(6).generator()
        scenes = [sample_scene(params, 2, generator) for _ in range(20_000)]
        present = np.array([s.present for s in scenes])
        angles = np.array([s.angle for s in scenes])
        assert present.mean() == pytest.approx(0.3, abs=4 * np.sqrt(0.3 * 0.7 / 20_000))
        assert angles.min() >= SENSING.min and angles.max() <= SENSING.max
        width = SENSING.max - SENSING.min
        assert angles.mean() == pytest.approx(SENSING.center, abs=4 * width / np.sqrt(12 * 20_000))
        assert angles.std() == pytest.approx(width / np.sqrt(12), rel=0.02)
        assert np.mean(np.abs(np.concatenate([s.gains for s in scenes])) ** 2) == pytest.approx(1.0, rel=0.03)

    def test_acm_hermitian_psd(self):
        """Corr(Z) is Hermitian positive semi-definite"""
        z = np.random.default_rng(0).standard_normal((4, 7)) + 0j
        corr = acm(z)
        assert np.allclose(corr, corr.conj().T)
        assert np.linalg.eigvalsh(corr).min() > -1e-12

    def test_acm_needs_snapshots(self):
        """Empty blocks are rejected"""
        with pytest.raises(PreconditionError):
            acm(np.zeros((4, 0)))

    def test_scene_window_length(self):
        """Zero-length windows are a domain error"""
        with pytest.raises(DomainError):
            sample_scene(SenseLinkParams(1.0, 1.0, SENSING), 0, SeededRng(1))

    def test_noise_level_of_acm(self):
        """Pure-noise ACM has sigma_ns^2 on the diagonal on average"""
        params = SenseLinkParams(1.0, 0.5, SENSING, target_prior=0.0)
        n = np.full(2000, 3)
        scenes = sample_scene_batch(params, n, SeededRng(1))
        z = sense_channel_batch(np.ones((2000, 3)), uniform_beam(4), scenes, SeededRng(2))
        corr = acm_batch(z, n)
        assert np.mean(np.real(np.einsum("bkk->bk", corr))) == pytest.approx(0.5, rel=0.03)


class TestBatchedWindows:
    """Zero-padded windows of varying length"""

    def test_partition_covers_stream(self):
        """Window lengths sum to the stream length and respect the range"""
        lengths = partition_windows(1000, (1, 15), SeededRng(5))
        assert lengths.sum() == 1000
        assert lengths[:-1].min() >= 1 and lengths.max() <= 15
        assert lengths[-1] >= 1

    def test_partition_invalid_range(self):
        """Reversed ranges are rejected"""
        with pytest.raises(ConfigurationError):
            partition_windows(10, (5, 2), SeededRng(5))

    def test_partition_short_tail(self):
        """Only the final window may fall below the lower bound"""
        for seed in range(20):
            lengths = partition_windows(103, (10, 15), SeededRng(seed))
            assert lengths.sum() == 103
            assert lengths[:-1].min() >= 10 and lengths.max() <= 15
            assert 1 <= lengths[-1] <= 15
        assert partition_windows(7, (10, 15), SeededRng(0)).tolist() == [7]

    def test_window_symbols_layout(self):
        """Symbols land in order inside zero-padded rows"""
        x = np.arange(6) + 0j
        x_windows, index = window_symbols(x, np.array([2, 3, 1]))
        assert x_windows.shape == (3, 3)
        assert np.array_equal(x_windows[1], [2, 3, 4])
        assert x_windows[2, 1] == 0
        assert np.array_equal(index, [0, 0, 1, 1, 1, 2])

    def test_batch_matches_single_window(self):
        """Padded batch blocks equal the single-window channel on the valid part"""
        params = SenseLinkParams(1.0, 0.0, SENSING, target_prior=1.0)
        n = np.array([2, 5])
        scenes = sample_scene_batch(params, n, SeededRng(1))
        x_windows = np.ones((2, 5), dtype=complex) * scenes.mask
        v = matched_beam(0.1, 4)
        z = sense_channel_batch(x_windows, v, scenes, SeededRng(2))
        for i in range(2):
            scene = scenes.scene(i)
            expected = sense_channel(assemble_block(v, np.ones(scene.n_win)), scene, params, SeededRng(9))
            assert np.allclose(z[i, :, : n[i]], expected)
            assert np.allclose(z[i, :, n[i]:], 0.0)

    def test_forced_absence(self):
        """present overrides the prior"""
        scenes = sample_scene_batch(
            SenseLinkParams(1.0, 1.0, SENSING, target_prior=1.0),
            np.full(10, 2),
            SeededRng(1),
            present=np.zeros(10, dtype=bool),
        )
        assert not scenes.present.any()

    def test_echo_scales_with_beam_gain(self):
        """Mean echo power is K beta sigma_s^2 per snapshot"""
        params = SenseLinkParams(1.0, 0.0, AngleRegion(0.2, 0.2), target_prior=1.0)
        v = matched_beam(0.0, 4)
        n = np.full(20_000, 1)
        scenes = sample_scene_batch(params, n, SeededRng(3))
        z = sense_channel_batch(np.ones((20_000, 1)), v, scenes, SeededRng(4))
        power = np.mean(np.sum(np.abs(z) ** 2, axis=(1, 2)))
        assert power == pytest.approx(4 * beam_gain(v, 0.2), rel=0.05)
