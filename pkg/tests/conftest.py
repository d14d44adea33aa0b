"""
Shared fixtures for the jcas-lab test suite.

The package is normally installed (``pip install -e .``); when it is not,
``src/`` is registered as ``jcas_lab`` so the tests run from a checkout.
"""

import importlib.util
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent

try:
    import jcas_lab  # noqa: F401
except ImportError:
    spec = importlib.util.spec_from_file_location(
        "jcas_lab", ROOT / "src" / "__init__.py", submodule_search_locations=[str(ROOT / "src")]
    )
    module = importlib.util.module_from_spec(spec)
    sys.modules["jcas_lab"] = module
    spec.loader.exec_module(module)

from jcas_lab.core.rng import SeededRng  # noqa: E402
from jcas_lab.physics.waveform import build_qam  # noqa: E402
from jcas_lab.simulation.kernel import JcasSystem, SystemConfig  # noqa: E402
from jcas_lab.training.calibration import CalibrationTable  # noqa: E402


@pytest.fixture
def rng():
    return SeededRng(1234)


@pytest.fixture
def qam16():
    return build_qam(16)


@pytest.fixture
def small_config():
    return SystemConfig(antennas=4, order=16)


@pytest.fixture
def small_system(small_config):
    """Untrained K=4, 16QAM system."""
    return JcasSystem(small_config, rng=SeededRng(7))


@pytest.fixture
def calibrated_system(small_system):
    """Untrained system with a zero-offset table covering N_win 1..15."""
    small_system.calibration = CalibrationTable(p_f=1e-2, offsets={n: 0.0 for n in range(1, 16)})
    return small_system


@pytest.fixture
def tiny_config_file(tmp_path):
    """YAML config with budgets small enough for end-to-end CLI runs."""
    path = tmp_path / "tiny.yaml"
    path.write_text(
        "\n".join([
            "array:",
            "  antennas: 4",
            "  order: 4",
            "training:",
            "  w_s: 0.5",
            "  n_win_range: [1, 4]",
            "  pretrain_symbols: 200",
            "  finetune_symbols: 200",
            "  batch: 100",
            "  calibration_symbols: 200",
            "evaluation:",
            "  comm_snr_db: [10.0]",
            "  sense_snr_db: [0.0]",
            "  n_win: [1, 4]",
            "  w_s_grid: [0.5]",
            "  comm_symbols: 200",
            "  sense_scenes: 50",
            "  pattern_grid: 91",
            "output:",
            f"  dir: {tmp_path / 'out'}",
            "seed: 11",
            "",
        ]),
        encoding="utf-8",
    )
    return path
