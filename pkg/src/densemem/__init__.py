"""Exact-arithmetic simulation of dense associative memories (order-n Hopfield networks)."""

__version__ = "0.1.0"

from .core import ModelParams, NetworkState, PatternSet, PhiValue, phi, potential, energy, overlap, matching_fraction
from .dynamics import SweepConfig, TrialOutcome, UpdateMode, retrieve
from .rng import Xoshiro256, derive_seed

__all__ = [
    "ModelParams",
    "NetworkState",
    "PatternSet",
    "PhiValue",
    "SweepConfig",
    "TrialOutcome",
    "UpdateMode",
    "Xoshiro256",
    "derive_seed",
    "energy",
    "matching_fraction",
    "overlap",
    "phi",
    "potential",
    "retrieve",
]
