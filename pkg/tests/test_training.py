"""
Tests for the training losses, threshold calibration, the end-to-end
gradients of the JCAS system and the three-phase training loop.
"""

import json

import numpy as np
import pytest

from jcas_lab.core.errors import CalibrationError, ConfigurationError, DomainError
from jcas_lab.core.rng import SeededRng
from jcas_lab.neural.checkpoint import load_checkpoint
from jcas_lab.physics.waveform import matched_beam
from jcas_lab.simulation.kernel import COMPONENT_ORDER, JcasSystem, SystemConfig
from jcas_lab.simulation.scheduler import Phase, Scheduler, TrainSchedule, schedule_for
from jcas_lab.training.calibration import (
    CalibrationTable,
    calibrate_offsets,
    decide,
    false_alarm_rate,
    threshold_offset,
)
from jcas_lab.training.losses import (
    AngleLoss,
    loss_angle_legacy,
    loss_angle_legacy_grad,
    loss_angle_normalized,
    loss_angle_normalized_grad,
    loss_comm,
    loss_comm_grad,
    loss_detect,
    loss_detect_grad,
    normalization_weights,
    total_loss,
)
from jcas_lab.training.trainer import Trainer, calibrate_thresholds

TINY = TrainSchedule(
    pretrain_symbols=60,
    finetune_symbols=60,
    batch=30,
    lr=1e-3,
    n_win_range=(1, 3),
    calibration_symbols=200,
)


def tiny_system(seed=5, **overrides):
    config = SystemConfig(antennas=4, order=4, **overrides)
    return JcasSystem(config, rng=SeededRng(seed))


class TestLosses:
    """Loss terms and their gradients"""

    def test_comm_loss_at_zero_llr(self):
        """Uninformative LLRs cost ln 2 per bit"""
        assert loss_comm(np.zeros((5, 4)), np.ones((5, 4))) == pytest.approx(np.log(2.0))

    def test_comm_loss_sign_convention(self):
        """Positive LLRs favour bit 0"""
        llrs = np.full((1, 2), 8.0)
        assert loss_comm(llrs, np.zeros((1, 2))) < loss_comm(llrs, np.ones((1, 2)))

    def test_comm_gradient(self):
        """Analytic LLR gradient matches central differences"""
        generator = np.random.default_rng(0)
        llrs = generator.standard_normal((6, 4))
        bits = generator.integers(0, 2, (6, 4))
        _, grad = loss_comm_grad(llrs, bits)
        h = 1e-6
        e = np.zeros_like(llrs)
        e[2, 1] = h
        numeric = (loss_comm(llrs + e, bits) - loss_comm(llrs - e, bits)) / (2 * h)
        assert grad[2, 1] == pytest.approx(numeric, rel=1e-6)

    def test_detect_loss_clamped(self):
        """Certain wrong answers cost -ln(1e-12), not infinity"""
        assert loss_detect(np.array([0.0]), np.array([1.0])) == pytest.approx(-np.log(1e-12))

    def test_detect_gradient_wrt_logit(self):
        """d BCE / d logit = (p - T) / N"""
        value, grad = loss_detect_grad(np.array([0.0, 2.0]), 0.5, np.array([1.0, 0.0]))
        p = 1.0 / (1.0 + np.exp(-np.array([0.5, 2.5])))
        assert np.allclose(grad, (p - [1.0, 0.0]) / 2)
        assert value == pytest.approx(loss_detect(p, np.array([1.0, 0.0])))

    def test_angle_losses_ignore_absent_scenes(self):
        """Only T = 1 scenes contribute, and an empty batch reports no count"""
        theta = np.array([0.1, 0.2, 0.3])
        theta_hat = np.array([0.0, 5.0, 0.5])
        present = np.array([True, False, True])
        legacy = loss_angle_legacy(theta, theta_hat, present)
        assert legacy.value == pytest.approx((0.01 + 0.04) / 2)
        assert legacy.count == 2
        empty = loss_angle_legacy(theta, theta_hat, np.zeros(3, dtype=bool))
        assert empty.empty and empty.value == 0.0

    def test_normalized_loss_weights(self):
        """Squared errors are weighted by N_win / sigma_ns^2"""
        theta = np.zeros(2)
        theta_hat = np.array([0.1, 0.2])
        n_win = np.array([2, 4])
        noise_std = np.array([0.5, 1.0])
        value = loss_angle_normalized(theta, theta_hat, n_win, noise_std, np.ones(2, dtype=bool)).value
        assert value == pytest.approx((8.0 * 0.01 + 4.0 * 0.04) / 2)

    def test_normalized_loss_flattens_operating_points(self):
        """Errors at the achievable scale give equal normalized terms for every (N_win, sigma_ns)"""
        n_win = np.array([1, 2, 5, 15, 1, 15])
        noise_std = np.array([3.0, 3.0, 1.0, 1.0, 0.3, 0.3])
        err = noise_std / np.sqrt(n_win)
        present = np.ones(6, dtype=bool)
        terms = [
            loss_angle_normalized(np.zeros(1), err[i:i + 1], n_win[i:i + 1], noise_std[i:i + 1], present[:1]).value
            for i in range(6)
        ]
        legacy = [loss_angle_legacy(np.zeros(1), err[i:i + 1], present[:1]).value for i in range(6)]
        assert np.allclose(terms, 1.0)
        assert max(legacy) / min(legacy) > 100.0

    def test_normalized_matches_legacy_at_unit_weight(self):
        """With N_win / sigma_ns^2 = 1 the normalized term equals the plain MSE"""
        generator = np.random.default_rng(3)
        theta = generator.uniform(-0.3, 0.3, 5)
        theta_hat = theta + generator.normal(0.0, 0.1, 5)
        n_win = np.array([1, 4, 9, 2, 15])
        noise_std = np.sqrt(n_win.astype(float))
        present = np.array([True, True, False, True, True])
        normalized, g_norm = loss_angle_normalized_grad(theta, theta_hat, n_win, noise_std, present)
        legacy, g_legacy = loss_angle_legacy_grad(theta, theta_hat, present)
        assert normalized.value == pytest.approx(legacy.value, rel=1e-12)
        assert normalized.count == legacy.count == 4
        assert np.allclose(g_norm, g_legacy, rtol=1e-12, atol=0.0)

    def test_normalization_needs_noise(self):
        """sigma_ns = 0 is outside the domain"""
        with pytest.raises(DomainError):
            normalization_weights(np.array([1]), np.array([0.0]))

    def test_total_loss_identity(self):
        """total = (1 - w_s) comm + w_s detect + w_s angle, switched-off terms are 0"""
        breakdown = total_loss(1.0, 2.0, 3.0, 0.25)
        assert breakdown.total == pytest.approx(0.75 + 0.5 + 0.75)
        phase1 = total_loss(1.0, 2.0, 3.0, 0.25, detect_on=False)
        assert phase1.detect == 0.0
        assert phase1.total == pytest.approx(0.75 + 0.75)

    def test_tradeoff_range(self):
        """w_s outside [0, 1] is a configuration error"""
        with pytest.raises(ConfigurationError):
            total_loss(1.0, 1.0, 1.0, 1.5)


class TestCalibration:
    """Constant false-alarm threshold offsets"""

    def test_order_statistic(self):
        """T_off is minus the upper bracketing order statistic"""
        logits = np.arange(100, dtype=float)
        offset = threshold_offset(logits, 0.1)
        assert offset == -np.nextafter(90.0, np.inf)
        assert false_alarm_rate(logits, offset) == pytest.approx(0.09)

    def test_tiny_p_f_uses_maximum(self):
        """p_f below 1/N falls back to the largest logit"""
        logits = np.array([0.3, -1.0, 2.0])
        offset = threshold_offset(logits, 1e-6)
        assert offset == pytest.approx(-2.0)
        assert false_alarm_rate(logits, offset) == 0.0

    def test_decision_at_threshold(self):
        """Logits at or above the threshold are detections, like the NP rule"""
        assert decide(np.array([1.0, 0.999, 1.5]), -1.0).tolist() == [True, False, True]
        constant = np.full(50, 0.7)
        assert false_alarm_rate(constant, threshold_offset(constant, 0.1)) == 0.0

    def test_invalid_inputs(self):
        """Empty logits or p_f outside (0, 1) are rejected"""
        with pytest.raises(DomainError):
            threshold_offset(np.array([]), 0.1)
        with pytest.raises(DomainError):
            threshold_offset(np.ones(3), 0.0)

    def test_table(self):
        """Lookup, coverage and dict round trip"""
        table = CalibrationTable(p_f=0.01, offsets={1: 0.5, 2: -0.25})
        assert table.offset(2) == -0.25
        assert np.allclose(table.offsets_for(np.array([1, 2, 1])), [0.5, -0.25, 0.5])
        assert table.covers((1, 2)) and not table.covers((1, 3))
        assert CalibrationTable.from_dict(table.to_dict()) == table
        with pytest.raises(CalibrationError):
            table.offset(7)

    def test_calibrate_offsets_streams(self):
        """Every N_win draws from its own child stream"""
        def null_logits(n_win, count, stream):
            return stream.generator().standard_normal(count)

        a = calibrate_offsets(null_logits, 0.05, [1, 2, 3], 2000, SeededRng(8))
        b = calibrate_offsets(null_logits, 0.05, [1, 2, 3], 2000, SeededRng(8))
        assert a == b
        assert sorted(a.offsets) == [1, 2, 3]
        assert len(set(a.offsets.values())) == 3
        assert a.offset(1) == pytest.approx(-1.645, abs=0.1)

    def test_held_out_false_alarm_rate(self):
        """Calibrated network decisions hit p_f on fresh target-absent windows"""
        system = tiny_system()
        p_f = 0.05
        table = calibrate_thresholds(system, p_f, (1, 3), 5000, SeededRng(9).child(0))
        assert system.calibration is table
        for n_win in (1, 3):
            fresh = system.null_logits(n_win, 5000, SeededRng(9).child(1, n_win))
            rate = false_alarm_rate(fresh, table.offset(n_win))
            assert 0.5 * p_f <= rate <= 1.5 * p_f


class TestSystemGradients:
    """Reverse-mode gradients of the full transmitter-channel-receiver chain"""

    @pytest.mark.parametrize("angle_loss", [AngleLoss.NORMALIZED, AngleLoss.LEGACY])
    @pytest.mark.parametrize("name", list(COMPONENT_ORDER))
    def test_component_gradient(self, name, angle_loss):
        """Directional derivative of the total loss matches central differences"""
        system = tiny_system(angle_loss=angle_loss)
        batch = system.draw_batch(40, (1, 4), (-5.0, 10.0), (0.0, 20.0), SeededRng(3))
        w_s, offset = 0.4, 0.7
        _, grads, used = system.loss_and_grads(batch, w_s, offset=offset)
        assert used == offset

        def loss():
            result = system.forward(batch, offset=offset)
            return system.losses(batch, result, w_s)[0].total

        params = system.components[name].params
        generator = np.random.default_rng(11)
        directions = [generator.standard_normal(block.shape) for block in params.blocks()]
        analytic = sum(float(np.sum(g * d)) for g, d in zip(grads[name].blocks(), directions))
        h = 1e-5
        for block, d in zip(params.blocks(), directions):
            block += h * d
        plus = loss()
        for block, d in zip(params.blocks(), directions):
            block -= 2 * h * d
        minus = loss()
        for block, d in zip(params.blocks(), directions):
            block += h * d
        numeric = (plus - minus) / (2 * h)
        assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-9)

    @pytest.mark.parametrize("batch_seed", range(4))
    def test_gradients_at_16qam(self, batch_seed):
        """K=4, 16QAM: every component agrees with central differences over a step sweep"""
        system = JcasSystem(SystemConfig(antennas=4, order=16), rng=SeededRng(30 + batch_seed))
        batch = system.draw_batch(64, (1, 15), (-10.0, 10.0), (0.0, 25.0), SeededRng(40 + batch_seed))
        offset = system.forward(batch).offset
        _, grads, _ = system.loss_and_grads(batch, 0.5, offset=offset)
        generator = np.random.default_rng(batch_seed)
        for name in COMPONENT_ORDER:
            params = system.components[name].params
            directions = [generator.standard_normal(block.shape) for block in params.blocks()]
            analytic = sum(float(np.sum(g * d)) for g, d in zip(grads[name].blocks(), directions))

            def shifted(step):
                for block, d in zip(params.blocks(), directions):
                    block += step * d
                value = system.losses(batch, system.forward(batch, offset=offset), 0.5)[0].total
                for block, d in zip(params.blocks(), directions):
                    block -= step * d
                return value

            numeric = [(shifted(h) - shifted(-h)) / (2 * h) for h in (1e-5, 3e-6, 1e-6, 3e-7)]
            assert any(n == pytest.approx(analytic, rel=1e-4, abs=1e-9) for n in numeric), name

    def test_zero_sensing_weight_blocks_sensing_heads(self):
        """w_s = 0 sends exactly zero gradient into the detection and angle networks"""
        system = tiny_system()
        batch = system.draw_batch(40, (1, 4), (-5.0, 10.0), (0.0, 20.0), SeededRng(7))
        _, grads, _ = system.loss_and_grads(batch, 0.0)
        for name in ("detection", "angle"):
            assert all(not np.any(block) for block in grads[name].blocks())
        assert any(np.any(block) for block in grads["decoder"].blocks())

    def test_direct_beam_gradient(self):
        """The direct beam vector receives the same chain-rule gradient"""
        system = tiny_system(beam_mode="direct")
        batch = system.draw_batch(40, (1, 4), (-5.0, 10.0), (0.0, 20.0), SeededRng(4))
        _, grads, _ = system.loss_and_grads(batch, 0.6, offset=0.0)
        raw = system.components["beamformer"].params.biases[0]
        d = np.random.default_rng(12).standard_normal(raw.shape)
        h = 1e-5

        def loss():
            return system.losses(batch, system.forward(batch, offset=0.0), 0.6)[0].total

        raw += h * d
        plus = loss()
        raw -= 2 * h * d
        minus = loss()
        raw += h * d
        analytic = float(np.sum(grads["beamformer"].biases[0] * d))
        assert analytic == pytest.approx((plus - minus) / (2 * h), rel=1e-4, abs=1e-9)

    def test_fixed_beam_has_no_beam_gradient(self):
        """A fixed beam is not trained"""
        system = JcasSystem(SystemConfig(antennas=4, order=4), rng=SeededRng(1), fixed_beam=matched_beam(0.0, 4))
        batch = system.draw_batch(20, (1, 2), (0.0, 0.0), (10.0, 10.0), SeededRng(2))
        _, grads, _ = system.loss_and_grads(batch, 0.5)
        assert "beamformer" not in grads
        assert np.allclose(system.beam().weights, matched_beam(0.0, 4).weights)

    def test_batch_offset_from_null_logits(self):
        """Without a fixed offset the batch calibrates on its own target-absent windows"""
        system = tiny_system()
        batch = system.draw_batch(60, (1, 3), (-10.0, 10.0), (0.0, 25.0), SeededRng(6))
        result = system.forward(batch)
        null = result.logits[~batch.scenes.present]
        assert result.offset == pytest.approx(threshold_offset(null, system.config.p_f))


class TestScheduler:
    """Budgets and phase order"""

    def test_steps_and_partial_batch(self):
        """The last batch of a phase may be partial"""
        schedule = TrainSchedule(pretrain_symbols=2500, finetune_symbols=4000, batch=1000)
        assert schedule.steps(Phase.PRETRAIN_ANGLE) == 3
        assert schedule.batch_size(Phase.PRETRAIN_ANGLE, 2) == 500
        assert schedule.steps(Phase.FINETUNE) == 4
        assert schedule.steps(Phase.LIMIT) == 0

    def test_phase_switches(self):
        """Phase 1 drops detection, phase 2 drops the angle term"""
        assert not Phase.PRETRAIN_ANGLE.detect_on and Phase.PRETRAIN_ANGLE.angle_on
        assert Phase.PRETRAIN_DETECT.detect_on and not Phase.PRETRAIN_DETECT.angle_on
        assert Scheduler.phases(Phase.FINETUNE) == [Phase.FINETUNE, Phase.LIMIT]

    def test_profiles(self):
        """desk and paper budgets, overrides and unknown names"""
        assert schedule_for("paper").finetune_symbols == 50_000_000
        assert schedule_for("desk", batch=10).batch == 10
        with pytest.raises(ConfigurationError):
            schedule_for("laptop")

    def test_profiles_share_hyperparameters(self):
        """desk shrinks only the symbol budgets; batch and lr match the paper profile"""
        default = TrainSchedule()
        assert default.batch == 10_000 and default.lr == pytest.approx(1e-4)
        desk, paper = schedule_for("desk"), schedule_for("paper")
        assert (desk.batch, desk.lr) == (paper.batch, paper.lr)
        assert (desk.pretrain_symbols, desk.finetune_symbols) == (1_000_000, 2_000_000)
        assert paper.steps(Phase.PRETRAIN_ANGLE) == 2500

    def test_invalid_schedule(self):
        """Reversed ranges and zero budgets are rejected"""
        with pytest.raises(ConfigurationError):
            TrainSchedule(n_win_range=(4, 2))
        with pytest.raises(ConfigurationError):
            TrainSchedule(batch=0)

    def test_diagnostics(self):
        """Progress counters follow advance()"""
        scheduler = Scheduler(TINY)
        scheduler.advance(Phase.PRETRAIN_ANGLE, 30)
        d = scheduler.get_diagnostics()
        assert d["phase_step"] == 1 and d["symbols_seen"] == 30 and d["progress"] == 0.5


class TestTrainer:
    """Three-phase training and resumption"""

    def test_full_run(self, tmp_path):
        """All phases run, checkpoints and the log are written, thresholds cover N_win"""
        system = tiny_system()
        trainer = Trainer(
            system, TINY, w_s=0.5, seed=SeededRng(21),
            log_path=tmp_path / "train.log", checkpoint_dir=tmp_path / "ckpt",
        )
        history = trainer.run()
        assert [len(history[p.value]) for p in Phase if p is not Phase.LIMIT] == [2, 2, 2]
        assert system.calibration.covers((1, 3))
        assert system.w_s == 0.5
        for phase in Phase:
            assert (tmp_path / "ckpt" / f"{phase.value}.ckpt").is_file()
        records = [json.loads(line) for line in (tmp_path / "train.log").read_text().splitlines()]
        assert len(records) == 6
        assert all(r["total"] == pytest.approx(0.5 * r["comm"] + 0.5 * r["detect"] + 0.5 * r["angle"]) for r in records)
        final = load_checkpoint(tmp_path / "ckpt" / "limit.ckpt")
        assert final.calibration is not None and final.extra["w_s"] == 0.5

    def test_inactive_networks_frozen(self):
        """The detection network is untouched by the angle pre-training phase"""
        system = tiny_system()
        before = system.components["detection"].params.copy()
        angle_before = system.components["angle"].params.copy()
        Trainer(system, TINY, w_s=0.5, seed=SeededRng(21)).train_phase(Phase.PRETRAIN_ANGLE)
        for a, b in zip(before.blocks(), system.components["detection"].params.blocks()):
            assert np.array_equal(a, b)
        assert any(
            not np.array_equal(a, b)
            for a, b in zip(angle_before.blocks(), system.components["angle"].params.blocks())
        )

    def test_finetune_without_sensing_weight(self):
        """Fine-tuning at w_s = 0 leaves the sensing networks bit-identical"""
        system = tiny_system()
        before = {name: system.components[name].params.copy() for name in COMPONENT_ORDER}
        Trainer(system, TINY, w_s=0.0, seed=SeededRng(13)).finetune()
        for name in ("detection", "angle"):
            for a, b in zip(before[name].blocks(), system.components[name].params.blocks()):
                assert np.array_equal(a, b)
        assert any(
            not np.array_equal(a, b)
            for a, b in zip(before["decoder"].blocks(), system.components["decoder"].params.blocks())
        )

    def test_deterministic(self):
        """Same seeds give bit-identical parameters"""
        systems = [tiny_system(), tiny_system()]
        for system in systems:
            Trainer(system, TINY, w_s=0.3, seed=SeededRng(2)).run()
        for name in COMPONENT_ORDER:
            for a, b in zip(systems[0].components[name].params.blocks(), systems[1].components[name].params.blocks()):
                assert np.array_equal(a, b)
        assert systems[0].calibration == systems[1].calibration

    def test_resume_matches_uninterrupted(self, tmp_path):
        """Resuming from a phase checkpoint replays the uninterrupted run"""
        reference = tiny_system()
        Trainer(reference, TINY, w_s=0.5, seed=SeededRng(4)).run()

        partial = tiny_system()
        Trainer(partial, TINY, w_s=0.5, seed=SeededRng(4), checkpoint_dir=tmp_path).train_phase(Phase.PRETRAIN_ANGLE)

        resumed = tiny_system(seed=99)
        trainer, next_phase = Trainer.resume(resumed, tmp_path / "pretrain-angle.ckpt", TINY, 0.5, SeededRng(4))
        assert next_phase is Phase.PRETRAIN_DETECT
        trainer.run(start=next_phase)
        for name in COMPONENT_ORDER:
            for a, b in zip(reference.components[name].params.blocks(), resumed.components[name].params.blocks()):
                assert np.array_equal(a, b)
        assert resumed.calibration == reference.calibration

    def test_resume_after_limit(self, tmp_path):
        """A calibrated checkpoint has nothing left to run"""
        system = tiny_system()
        Trainer(system, TINY, w_s=0.5, seed=SeededRng(4), checkpoint_dir=tmp_path).run()
        restored = tiny_system(seed=1)
        _, next_phase = Trainer.resume(restored, tmp_path / "limit.ckpt", TINY, 0.5, SeededRng(4))
        assert next_phase is None
        assert restored.calibration == system.calibration

    def test_invalid_weight(self):
        """w_s outside [0, 1] is rejected before training"""
        with pytest.raises(ConfigurationError):
            Trainer(tiny_system(), TINY, w_s=-0.1, seed=SeededRng(1))
