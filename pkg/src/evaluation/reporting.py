"""
Result serialization: metrics CSV, beam-pattern CSV and the run manifest.

Floats are written with ``repr`` so that reading a file back yields the
exact values that were written. Coordinates that do not apply to a row are
empty cells.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from ..core.errors import ConfigurationError
from .metrics import MetricRow

logger = logging.getLogger(__name__)

METRIC_COLUMNS = (
    "snr_db",
    "snr_corrected_db",
    "n_win",
    "w_s",
    "method",
    "metric",
    "value",
    "n",
    "stderr",
)
PATTERN_COLUMNS = ("w_s", "angle_deg", "gain", "gain_db")

_FLOAT_COLUMNS = {"snr_db", "snr_corrected_db", "w_s", "value", "stderr", "angle_deg", "gain", "gain_db"}
_INT_COLUMNS = {"n_win", "n"}


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(column: str, text: str) -> Any:
    if text == "":
        return None
    if column in _FLOAT_COLUMNS:
        return float(text)
    if column in _INT_COLUMNS:
        return int(text)
    return text


def _write_rows(path: Path, columns: Iterable[str], rows: Iterable[Dict[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row[c]) for c in columns])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def _read_rows(path: Path, columns: Iterable[str]) -> List[Dict[str, Any]]:
    path = Path(path)
    columns = list(columns)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != columns:
            raise ConfigurationError(f"{path}: unexpected columns {header}, expected {columns}")
        return [{c: _parse(c, cell) for c, cell in zip(columns, line)} for line in reader]


def write_metrics_csv(path: Union[str, Path], rows: Iterable[MetricRow]) -> Path:
    return _write_rows(Path(path), METRIC_COLUMNS, (row.to_dict() for row in rows))


def read_metrics_csv(path: Union[str, Path]) -> List[MetricRow]:
    return [MetricRow(**row) for row in _read_rows(Path(path), METRIC_COLUMNS)]


def write_beampattern_csv(path: Union[str, Path], rows: Iterable[Dict[str, Any]]) -> Path:
    return _write_rows(Path(path), PATTERN_COLUMNS, rows)


def read_beampattern_csv(path: Union[str, Path]) -> List[Dict[str, Any]]:
    return _read_rows(Path(path), PATTERN_COLUMNS)


def write_manifest(
    path: Union[str, Path],
    command: str,
    seed: int,
    config_hash: str,
    profile: Optional[str] = None
) -> Path:
    """Run stamp ``{command, seed, config_hash, profile}`` (no timestamps)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "seed": int(seed), "config_hash": config_hash, "profile": profile}
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


__all__ = [
    "METRIC_COLUMNS",
    "PATTERN_COLUMNS",
    "write_metrics_csv",
    "read_metrics_csv",
    "write_beampattern_csv",
    "read_beampattern_csv",
    "write_manifest",
]
