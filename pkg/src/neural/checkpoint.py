"""
Checkpoint container for trained components.

Byte layout:

    JCASCKPT\\n                      magic line (9 bytes)
    {...}\\n                         header, one line of UTF-8 JSON
    payload                          data_size bytes

Header fields: version, seed, phase, config_hash, data_size, sha256
(hex digest of the payload), components, calibration, extra. Each entry in
``components`` is {name, kind, direct, widths, head, blocks, adam} where
``blocks`` lists the parameter block shapes and ``adam`` holds the step count
and hyperparameters.

The payload stores, component after component in header order, the
parameter blocks followed by the Adam first-moment blocks and then the
second-moment blocks. Every block is little-endian float64, row-major.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..core.errors import CheckpointError
from .components import Component, ComponentKind
from .mlp import Head, MlpParams, MlpSpec
from .optim import AdamState

logger = logging.getLogger(__name__)

MAGIC = b"JCASCKPT\n"
VERSION = 1
_DTYPE = np.dtype("<f8")


@dataclass
class Checkpoint:
    """
    Decoded checkpoint.

    Attributes:
        components: trained components keyed by name
        seed: experiment seed
        phase: last completed training phase
        config_hash: hash of the configuration that produced it
        calibration: {"p_f": float, "offsets": {n_win: T_off}} or None
        extra: free-form metadata
    """
    components: Dict[str, Component]
    seed: int
    phase: str
    config_hash: str
    calibration: Optional[Dict[str, Any]] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def _describe(component: Component) -> Dict[str, Any]:
    return {
        "name": component.name,
        "kind": component.kind.value,
        "direct": component.direct,
        "widths": list(component.widths()),
        "head": component.head(),
        "blocks": [list(block.shape) for block in component.params.blocks()],
        "adam": component.adam.hyperparameters(),
    }


def save_checkpoint(
    path: Union[str, Path],
    components: Dict[str, Component],
    seed: int,
    phase: str,
    config_hash: str,
    calibration: Optional[Dict[str, Any]] = None,
    extra: Optional[Dict[str, Any]] = None
) -> Path:
    """Write a checkpoint; returns the path written."""
    path = Path(path)
    chunks: List[bytes] = []
    for component in components.values():
        for group in (component.params.blocks(), component.adam.m, component.adam.v):
            for block in group:
                chunks.append(np.ascontiguousarray(block, dtype=_DTYPE).tobytes())
    payload = b"".join(chunks)

    header = {
        "version": VERSION,
        "seed": int(seed),
        "phase": phase,
        "config_hash": config_hash,
        "data_size": len(payload),
        "sha256": hashlib.sha256(payload).hexdigest(),
        "components": [_describe(c) for c in components.values()],
        "calibration": _encode_calibration(calibration),
        "extra": extra or {},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        handle.write(payload)
    logger.info(f"Saved checkpoint {path} (phase={phase}, {len(payload)} payload bytes)")
    return path


def _encode_calibration(calibration: Optional[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
    if calibration is None:
        return None
    return {
        "p_f": float(calibration["p_f"]),
        "offsets": {str(int(k)): float(v) for k, v in calibration["offsets"].items()},
    }


def _decode_calibration(raw: Optional[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
    if raw is None:
        return None
    return {
        "p_f": float(raw["p_f"]),
        "offsets": {int(k): float(v) for k, v in raw["offsets"].items()},
    }


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read and verify a checkpoint.

    Raises:
        CheckpointError: missing file, bad magic, unsupported version,
            truncated payload or digest mismatch
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}")
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{path} is not a jcas-lab checkpoint (bad magic)")
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise CheckpointError(f"{path}: header line is not terminated")
    try:
        header = json.loads(data[len(MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from exc
    if header.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {header.get('version')}")

    payload = data[end + 1:]
    if len(payload) != header["data_size"]:
        raise CheckpointError(
            f"{path}: payload holds {len(payload)} bytes, header declares {header['data_size']}"
        )
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise CheckpointError(f"{path}: payload digest mismatch")

    offset = 0

    def take(shape: List[int]) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape)) if shape else 1
        block = np.frombuffer(payload, dtype=_DTYPE, count=count, offset=offset).reshape(shape)
        offset += count * _DTYPE.itemsize
        return block.astype(np.float64)

    components: Dict[str, Component] = {}
    for entry in header["components"]:
        shapes = entry["blocks"]
        blocks = [take(s) for s in shapes]
        m = [take(s) for s in shapes]
        v = [take(s) for s in shapes]
        direct = bool(entry["direct"])
        params = MlpParams.from_blocks(blocks, direct=direct)
        spec = None if direct else MlpSpec(tuple(entry["widths"]), Head(entry["head"]))
        if spec is not None:
            params.check(spec)
        adam = AdamState(m=m, v=v, **entry["adam"])
        components[entry["name"]] = Component(
            name=entry["name"],
            kind=ComponentKind(entry["kind"]),
            spec=spec,
            params=params,
            adam=adam,
        )

    logger.info(f"Loaded checkpoint {path} (phase={header['phase']}, {len(components)} components)")
    return Checkpoint(
        components=components,
        seed=int(header["seed"]),
        phase=header["phase"],
        config_hash=header["config_hash"],
        calibration=_decode_calibration(header.get("calibration")),
        extra=header.get("extra", {}),
    )


__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "MAGIC", "VERSION"]
