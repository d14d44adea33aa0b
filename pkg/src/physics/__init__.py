"""
Signal and propagation models.

Submodules:
    - waveform: constellation, array geometry, beam weights, transmit block
    - channel: Rayleigh communication link, Swerling-1 sensing link, ACM
"""

from .channel import (
    CommLinkParams,
    CommRealization,
    SceneBatch,
    SenseLinkParams,
    SensingScene,
    acm,
    acm_batch,
    comm_channel,
    draw_comm,
    sample_scene,
    sample_scene_batch,
    sense_channel,
    sense_channel_batch,
)
from .waveform import (
    AngleRegion,
    BeamWeights,
    Constellation,
    assemble_block,
    beam_gain,
    beam_power_fractions,
    build_qam,
    matched_beam,
    mean_beam_gain,
    modulate,
    region_power,
    steering_vector,
    uniform_beam,
)

__all__ = [
    "CommLinkParams",
    "CommRealization",
    "SceneBatch",
    "SenseLinkParams",
    "SensingScene",
    "acm",
    "acm_batch",
    "comm_channel",
    "draw_comm",
    "sample_scene",
    "sample_scene_batch",
    "sense_channel",
    "sense_channel_batch",
    "AngleRegion",
    "BeamWeights",
    "Constellation",
    "assemble_block",
    "beam_gain",
    "beam_power_fractions",
    "build_qam",
    "matched_beam",
    "mean_beam_gain",
    "modulate",
    "region_power",
    "steering_vector",
    "uniform_beam",
]
