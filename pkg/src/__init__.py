"""
jcas-lab: learned monostatic joint communication and sensing.

A multi-antenna transmitter serves a communication receiver and senses a
target from the same symbol stream. Neural networks learn the beamformer,
the bit decoder and the target detector / angle estimator; classical
baselines (exact demapper, Neyman-Pearson detector, ESPRIT, Cramer-Rao
bound) run on the same channel realizations.

Packages:
    core        errors, seeded streams, numerical kernels
    physics     waveform and channel models
    classic     model-based receivers and bounds
    neural      MLPs, Adam, components, checkpoints
    training    losses, calibration, training loop
    simulation  end-to-end system and schedules
    evaluation  metrics, sweeps, result files
"""

__version__ = "0.1.0"
