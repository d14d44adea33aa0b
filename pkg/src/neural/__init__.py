"""
From-scratch neural networks for the JCAS transceiver.

Submodules:
    - mlp: dense ELU networks, output heads, forward and reverse passes
    - optim: Adam
    - components: the beamformer, decoder, angle and detection networks
    - checkpoint: self-describing parameter container
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .components import (
    Component,
    ComponentKind,
    FeatureScaling,
    beamformer_inputs,
    build_component,
    decoder_inputs,
    make_component,
    sensing_features,
)
from .mlp import (
    Head,
    MlpParams,
    MlpSpec,
    backward,
    beam_normalize,
    beam_normalize_backward,
    elu,
    forward,
    init_params,
)
from .optim import AdamState, adam_step

__all__ = [
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "Component",
    "ComponentKind",
    "FeatureScaling",
    "beamformer_inputs",
    "build_component",
    "decoder_inputs",
    "make_component",
    "sensing_features",
    "Head",
    "MlpParams",
    "MlpSpec",
    "backward",
    "beam_normalize",
    "beam_normalize_backward",
    "elu",
    "forward",
    "init_params",
    "AdamState",
    "adam_step",
]
