"""Noise modeling for a microwave optomechanical cavity driven by squeezed light."""

from .core_model import (
    DriveState,
    QuadCovariance,
    SystemParams,
    cooperativity_from_photons,
    drive_covariance,
    heisenberg_product,
    load_params,
    photons_from_cooperativity,
    scatter_rate,
    weighted_cooperativity,
)
from .noise_budget import CoolingDrive, NoiseBudget, budget, cooled_occupancy

__version__ = "0.1.0"
