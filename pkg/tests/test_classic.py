"""
Unit tests for the model-based baselines: Neyman-Pearson detector, ESPRIT,
Cramer-Rao bound and the exact demapper.
"""

import numpy as np
import pytest

from jcas_lab.classic.bounds import CrbInputs, crb
from jcas_lab.classic.demapper import (
    bmi_estimate,
    exact_llr,
    hard_decision,
    mmse_equalize,
    qam_ber_awgn,
)
from jcas_lab.classic.detection import (
    np_detect,
    np_detect_batch,
    np_statistic,
    np_threshold,
)
from jcas_lab.classic.esprit import esprit_aoa, esprit_aoa_batch
from jcas_lab.core.errors import ContractError, DomainError, EstimationError, SingularityError
from jcas_lab.core.numerics import chi2_quantile, sample_complex_normal
from jcas_lab.core.rng import SeededRng
from jcas_lab.physics.channel import (
    SenseLinkParams,
    acm_batch,
    sample_scene_batch,
    sense_channel_batch,
)
from jcas_lab.physics.waveform import AngleRegion, build_qam, matched_beam, modulate, random_bits, steering_vector


class TestNeymanPearson:
    """Power detector with chi-squared threshold"""

    def test_threshold_is_chi2_quantile(self):
        """Threshold uses 2 K N_win degrees of freedom"""
        assert np_threshold(16, 5, 0.01) == pytest.approx(chi2_quantile(160, 0.99))

    @pytest.mark.parametrize("n_win", [1, 5, 15])
    def test_false_alarm_rate(self, n_win):
        """Pure-noise blocks are declared detections at rate p_f"""
        k, trials, noise_power = 16, 20_000, 0.7
        generator = SeededRng(100 + n_win).generator()
        detections = 0
        for _ in range(4):
            z = sample_complex_normal(generator, noise_power, (trials // 4, k, n_win))
            detections += int(np_detect_batch(z, noise_power, np.full(trials // 4, n_win), 0.01).sum())
        assert 0.007 <= detections / trials <= 0.013

    def test_strong_target_detected(self):
        """A large echo is always detected"""
        z = np.full((4, 3), 10.0 + 0j)
        decision = np_detect(z, 1.0, 0.01)
        assert decision.detected
        assert decision.statistic == pytest.approx(np_statistic(z, 1.0))

    def test_statistic_scales_with_noise(self):
        """t is 2 / sigma_ns^2 times the block energy"""
        z = np.array([[1.0, 1j], [0.0, 2.0]])
        assert np_statistic(z, 0.5) == pytest.approx(4.0 * 6.0)
        assert np_statistic(z, 2.0) == pytest.approx(6.0)

    def test_invalid_inputs(self):
        """Non-positive noise or p_f outside (0, 1] are rejected"""
        with pytest.raises(DomainError):
            np_statistic(np.ones((2, 2)), 0.0)
        with pytest.raises(DomainError):
            np_threshold(4, 1, 0.0)


class TestEsprit:
    """Single-source least-squares ESPRIT"""

    @pytest.mark.parametrize("angle_deg", [-20.0, -5.0, 0.0, 12.0, 20.0])
    def test_exact_on_rank_one(self, angle_deg):
        """Noise-free rank-one correlation gives the exact angle"""
        theta = np.deg2rad(angle_deg)
        a = steering_vector(theta, 8)
        estimate = esprit_aoa(np.outer(a, a.conj()))
        assert estimate.angle == pytest.approx(theta, abs=1e-10)
        assert not estimate.low_confidence

    def test_jacobi_solver(self):
        """The Jacobi eigensolver gives the same estimate"""
        a = steering_vector(0.2, 6)
        corr = np.outer(a, a.conj()) + 0.1 * np.eye(6)
        assert esprit_aoa(corr, method="jacobi").angle == pytest.approx(esprit_aoa(corr).angle, abs=1e-10)

    def test_identity_is_low_confidence(self):
        """A white spectrum returns an angle flagged as low confidence"""
        estimate = esprit_aoa(np.eye(4, dtype=complex))
        assert estimate.low_confidence
        assert abs(estimate.angle) <= np.pi / 2

    def test_zero_matrix(self):
        """Zero correlation cannot be estimated"""
        with pytest.raises(EstimationError):
            esprit_aoa(np.zeros((4, 4), dtype=complex))

    def test_batch_matches_single(self):
        """Batched estimates agree with the single-matrix path"""
        generator = np.random.default_rng(0)
        z = generator.standard_normal((5, 4, 6)) + 1j * generator.standard_normal((5, 4, 6))
        corr = acm_batch(z, np.full(5, 6))
        batch = esprit_aoa_batch(corr)
        for i in range(5):
            assert batch[i] == pytest.approx(esprit_aoa(corr[i]).angle, abs=1e-10)

    def test_batch_zero_matrix_is_nan(self):
        """Zero matrices in a batch give NaN"""
        corr = np.zeros((2, 4, 4), dtype=complex)
        a = steering_vector(0.1, 4)
        corr[1] = np.outer(a, a.conj())
        angles = esprit_aoa_batch(corr)
        assert np.isnan(angles[0])
        assert angles[1] == pytest.approx(0.1, abs=1e-10)

    def test_rmse_within_twice_crb(self):
        """At 20 dB effective SNR the ESPRIT RMSE stays within 2 sqrt(CRB)"""
        k, n_win, trials = 16, 15, 500
        qam = build_qam(16)
        for i, angle_deg in enumerate([-20.0, -10.0, 0.0, 10.0, 20.0]):
            theta = np.deg2rad(angle_deg)
            v = matched_beam(theta, k)
            beta = float(k)
            noise_power = beta / 100.0
            params = SenseLinkParams(1.0, noise_power, AngleRegion(theta, theta), target_prior=1.0)
            generator = SeededRng(77).child(i).generator()
            n = np.full(trials, n_win)
            x = modulate(random_bits(trials * n_win, qam, generator), qam).reshape(trials, n_win)
            scenes = sample_scene_batch(params, n, generator)
            z = sense_channel_batch(x, v, scenes, generator)
            errors = esprit_aoa_batch(acm_batch(z, n)) - theta
            bound = crb(CrbInputs(theta, noise_power, 1.0, beta, k, n_win))
            assert np.sqrt(np.mean(errors ** 2)) <= 2.0 * np.sqrt(bound)


class TestCrb:
    """Structure of the angle bound"""

    def inputs(self, **overrides):
        values = dict(angle=0.2, noise_power=0.5, reflection_power=1.0, beam_gain=4.0, antennas=16, n_win=5)
        values.update(overrides)
        return CrbInputs(**values)

    def test_halves_with_window_doubling(self):
        """Doubling N_win halves the bound"""
        assert crb(self.inputs(n_win=10)) == pytest.approx(crb(self.inputs(n_win=5)) / 2.0, rel=1e-15)

    def test_cosine_law(self):
        """Bound scales with 1 / cos^2(theta)"""
        ratio = crb(self.inputs(angle=0.5)) / crb(self.inputs(angle=0.0))
        assert ratio == pytest.approx(1.0 / np.cos(0.5) ** 2, rel=1e-14)

    @pytest.mark.parametrize("field,values", [
        ("antennas", [4, 8, 16, 32]),
        ("beam_gain", [0.5, 1.0, 4.0, 16.0]),
        ("reflection_power", [0.1, 1.0, 10.0]),
    ])
    def test_decreasing(self, field, values):
        """More antennas, gain or reflection power tighten the bound"""
        bounds = [crb(self.inputs(**{field: v})) for v in values]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))

    def test_conventional_variant(self):
        """The conventional form differs only through the reflection power"""
        assert crb(self.inputs(), conventional=True) == pytest.approx(crb(self.inputs()))
        assert crb(self.inputs(reflection_power=4.0), conventional=True) < crb(self.inputs(reflection_power=4.0))

    def test_singular_at_endfire(self):
        """theta = pi/2 is singular"""
        with pytest.raises(SingularityError):
            crb(self.inputs(angle=np.pi / 2))

    def test_invalid_inputs(self):
        """Non-positive powers are outside the domain"""
        with pytest.raises(DomainError):
            self.inputs(noise_power=0.0)


class TestDemapper:
    """MMSE equalizer, exact LLRs and bit metrics"""

    def test_noiseless_llr_signs(self, qam16):
        """Hard decisions of near-noiseless samples recover the labels"""
        llrs = exact_llr(qam16.points, np.ones(16), 1e-3, qam16)
        assert np.array_equal(hard_decision(llrs), qam16.labels)

    def test_scalar_shape(self, qam16):
        """Scalar input yields one LLR per bit"""
        assert exact_llr(qam16.points[3], 1.0, 0.1, qam16).shape == (4,)

    def test_zero_kappa(self, qam16):
        """No channel means no information"""
        assert mmse_equalize(1.0 + 1j, 0.0, 0.1) == 0
        assert np.allclose(exact_llr(np.zeros(3), np.zeros(3), 0.1, qam16), 0.0)

    def test_equalizer_scaling(self):
        """MMSE output is kappa* z / (|kappa|^2 + sigma^2)"""
        assert mmse_equalize(2.0, 1j, 1.0) == pytest.approx(-1j)

    def test_nonpositive_noise(self, qam16):
        """Exact LLRs need sigma_n^2 > 0"""
        with pytest.raises(DomainError):
            exact_llr(np.zeros(2), np.ones(2), 0.0, qam16)

    def test_awgn_ber_matches_closed_form(self, qam16):
        """Exact demapper on AWGN reproduces the Gray 16QAM BER"""
        snr = 10.0 ** 1.4
        noise_power = 1.0 / snr
        generator = SeededRng(21).generator()
        n = 200_000
        bits = random_bits(n, qam16, generator)
        z = modulate(bits, qam16) + sample_complex_normal(generator, noise_power, n)
        llrs = exact_llr(mmse_equalize(z, np.ones(n), noise_power), np.ones(n), noise_power, qam16)
        ber = np.mean(hard_decision(llrs) != bits)
        expected = qam_ber_awgn(16, snr)
        assert 5e-3 < expected < 2e-2
        assert ber == pytest.approx(expected, rel=0.05)

    def test_bmi_bounds(self, qam16):
        """BMI lies in [0, log2 M] and approaches log2 M at high SNR"""
        generator = SeededRng(3).generator()
        bits = random_bits(5000, qam16, generator)
        x = modulate(bits, qam16)
        for noise_power, low in ((1e-3, 3.99), (1.0, 0.0)):
            z = x + sample_complex_normal(generator, noise_power, 5000)
            llrs = exact_llr(z * 1.0 / (1.0 + noise_power), np.ones(5000), noise_power, qam16)
            bmi = bmi_estimate(llrs.T, bits.T)
            assert low <= bmi <= 4.0

    def test_bmi_shape_mismatch(self):
        """LLR and bit shapes must agree"""
        with pytest.raises(ContractError):
            bmi_estimate(np.zeros((4, 3)), np.zeros((4, 2)))

    def test_closed_form_qpsk(self):
        """QPSK BER is Q(sqrt(SNR))"""
        from scipy.special import erfc
        snr = 4.0
        assert qam_ber_awgn(4, snr) == pytest.approx(0.5 * erfc(np.sqrt(snr / 2.0)), rel=1e-12)
