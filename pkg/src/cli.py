"""
Command-line front end.

Subcommands:
    train          three-phase training plus calibration, checkpoint per phase
    calibrate      recalibrate detection thresholds of a checkpoint
    eval-comm      BER/BMI of the trained decoder and the exact demapper
    eval-sensing   P_d/P_f, RMSE/bias of the trained receiver and the baselines
    beampattern    beam pattern and region power fractions
    baseline       NP detector, ESPRIT and CRB only
    sweep          train and evaluate over the configured w_s grid

Every run writes ``run.json`` (command, seed, config hash, profile) next to
its outputs. Metrics go to a per-command file (``METRICS_FILES``) so that
subcommands sharing an output directory keep each other's results. Exit codes: 0 success, 1 file error, 2 configuration error,
3 numerical failure.

Usage:
    jcas-lab train --config config/default.yaml --seed 7 --out runs/w05
    jcas-lab eval-sensing --checkpoint runs/w05/checkpoints/limit.ckpt --out runs/w05
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .classic.detection import np_threshold
from .config import ExperimentConfig, load_config
from .core.errors import CheckpointError, ConfigurationError, JcasError
from .core.rng import SeededRng
from .evaluation.metrics import eval_beampattern, eval_comm, eval_sensing
from .evaluation.reporting import write_beampattern_csv, write_manifest, write_metrics_csv
from .evaluation.sweeps import tradeoff_sweep
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .physics.waveform import matched_beam
from .simulation.kernel import JcasSystem
from .simulation.scheduler import PROFILES, Phase
from .training.calibration import CalibrationTable
from .training.trainer import Trainer, calibrate_thresholds

logger = logging.getLogger(__name__)

_TRAIN_STREAM = 0
_CALIBRATE_STREAM = 1
_EVAL_STREAM = 2
_SWEEP_STREAM = 3

METRICS_FILES: Dict[str, str] = {
    "eval-comm": "comm_metrics.csv",
    "eval-sensing": "sensing_metrics.csv",
    "beampattern": "region_metrics.csv",
    "baseline": "baseline_metrics.csv",
    "sweep": "metrics.csv",
}


class _Run:
    """Resolved inputs shared by every subcommand."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: ExperimentConfig = load_config(args.config)
        self.seed = args.seed if args.seed is not None else self.config.seed
        self.profile = args.profile or self.config.training.profile
        self.out = Path(args.out or self.config.output.dir)
        self.config_hash = self.config.config_hash()
        self.root = SeededRng(self.seed)

    def manifest(self) -> None:
        write_manifest(self.out / "run.json", self.args.command, self.seed, self.config_hash, self.profile)

    def metrics_path(self) -> Path:
        return self.out / METRICS_FILES[self.args.command]

    def load_system(self, required: bool = True) -> Optional[JcasSystem]:
        path = self.args.checkpoint
        if path is None:
            if required:
                raise CheckpointError(f"'{self.args.command}' needs --checkpoint")
            return None
        state = load_checkpoint(path)
        if state.config_hash != self.config_hash:
            logger.warning(
                f"Checkpoint {path} was produced with config {state.config_hash[:12]}, "
                f"current config is {self.config_hash[:12]}"
            )
        system = JcasSystem(self.config.system_config(), components=state.components)
        if state.calibration is not None:
            system.calibration = CalibrationTable.from_dict(state.calibration)
        system.w_s = state.extra.get("w_s")
        return system


def _train(run: _Run) -> None:
    config = run.config
    schedule = config.schedule(run.profile)
    w_s = run.args.w_s if run.args.w_s is not None else config.training.w_s
    seed = run.root.child(_TRAIN_STREAM)
    options = dict(
        p_f=config.evaluation.p_f,
        log_path=run.out / "train.log",
        checkpoint_dir=run.out / "checkpoints",
        config_hash=run.config_hash,
    )
    system = JcasSystem(config.system_config(), rng=seed.child(0), lr=schedule.lr)
    if run.args.checkpoint is not None:
        trainer, start = Trainer.resume(system, Path(run.args.checkpoint), schedule, w_s, seed, **options)
        if start is None:
            logger.info("Checkpoint already holds a calibrated system; nothing to train")
            return
        logger.info(f"Resuming at {start.value}")
    else:
        trainer, start = Trainer(system, schedule, w_s, seed, **options), Phase.PRETRAIN_ANGLE
    logger.info(f"Training w_s={w_s} with profile '{run.profile}' ({system.parameter_count()} parameters)")
    trainer.run(start)


def _calibrate(run: _Run) -> None:
    system = run.load_system()
    schedule = run.config.schedule(run.profile)
    table = calibrate_thresholds(
        system,
        run.config.evaluation.p_f,
        schedule.n_win_range,
        schedule.calibration_symbols,
        run.root.child(_CALIBRATE_STREAM),
        schedule.sense_snr_db_range,
    )
    save_checkpoint(
        run.out / "calibrated.ckpt",
        system.components,
        seed=run.seed,
        phase=Phase.LIMIT.value,
        config_hash=run.config_hash,
        calibration=table.to_dict(),
        extra={"w_s": system.w_s},
    )


def _eval_comm(run: _Run) -> None:
    system = run.load_system()
    ev = run.config.evaluation
    rows = eval_comm(
        system, ev.comm_snr_db, ev.comm_symbols, run.root.child(_EVAL_STREAM, 0), w_s=system.w_s
    )
    write_metrics_csv(run.metrics_path(), rows)


def _eval_sensing(run: _Run) -> None:
    system = run.load_system()
    ev = run.config.evaluation
    rows = eval_sensing(
        system, ev.sense_snr_db, ev.n_win, ev.sense_scenes, run.root.child(_EVAL_STREAM, 1),
        p_f=ev.p_f, w_s=system.w_s,
    )
    write_metrics_csv(run.metrics_path(), rows)


def _beampattern(run: _Run) -> None:
    system = run.load_system()
    pattern, rows = eval_beampattern(
        system.beam(),
        system.config.sensing_region,
        system.config.comm_region,
        run.config.evaluation.pattern_grid,
        w_s=system.w_s,
    )
    write_beampattern_csv(run.out / "beampattern.csv", pattern)
    write_metrics_csv(run.metrics_path(), rows)


def _baseline(run: _Run) -> None:
    """NP/ESPRIT/CRB with a checkpoint beam or a matched beam toward the sensing center."""
    config = run.config
    trained = run.load_system(required=False)
    system_config = config.system_config()
    if trained is not None:
        beam, w_s = trained.beam(), trained.w_s
    else:
        beam = matched_beam(system_config.sensing_region.center, config.array.antennas)
        w_s = None
    system = JcasSystem(system_config, rng=run.root.child(_TRAIN_STREAM, 0), fixed_beam=beam)
    ev = config.evaluation
    for n_win in ev.n_win:
        logger.info(
            f"NP threshold K={config.array.antennas}, N_win={n_win}: "
            f"{np_threshold(config.array.antennas, n_win, ev.p_f):.4f}"
        )
    rows = eval_comm(
        system, ev.comm_snr_db, ev.comm_symbols, run.root.child(_EVAL_STREAM, 0),
        methods=("oracle",), w_s=w_s,
    )
    rows += eval_sensing(
        system, ev.sense_snr_db, ev.n_win, ev.sense_scenes, run.root.child(_EVAL_STREAM, 1),
        p_f=ev.p_f, include_nn=False, w_s=w_s,
    )
    write_metrics_csv(run.metrics_path(), rows)


def _sweep(run: _Run) -> None:
    result = tradeoff_sweep(
        run.config,
        run.config.schedule(run.profile),
        run.root.child(_SWEEP_STREAM),
        out_dir=run.out / "systems",
    )
    write_metrics_csv(run.metrics_path(), result.metrics)
    write_beampattern_csv(run.out / "beampattern.csv", result.patterns)


COMMANDS: Dict[str, Callable[[_Run], None]] = {
    "train": _train,
    "calibrate": _calibrate,
    "eval-comm": _eval_comm,
    "eval-sensing": _eval_sensing,
    "beampattern": _beampattern,
    "baseline": _baseline,
    "sweep": _sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="YAML experiment configuration")
    common.add_argument("--seed", type=int, default=None, help="Experiment seed (overrides the config)")
    common.add_argument("--profile", choices=sorted(PROFILES), default=None, help="Training budget profile")
    common.add_argument("--out", type=str, default=None, help="Output directory")
    common.add_argument("--checkpoint", type=str, default=None, help="Checkpoint to load or resume from")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="jcas-lab",
        description="Learned monostatic joint communication and sensing experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        command = sub.add_parser(name, parents=[common])
        if name == "train":
            command.add_argument("--w-s", dest="w_s", type=float, default=None, help="Trade-off weight")
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and run one subcommand; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return ConfigurationError.exit_code
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    try:
        run = _Run(args)
        COMMANDS[args.command](run)
        run.manifest()
    except JcasError as exc:
        logger.error(f"{args.command} failed: {exc}", exc_info=args.verbose)
        return exc.exit_code
    logger.info(f"{args.command} finished; outputs in {run.out}")
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
