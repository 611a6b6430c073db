"""Adaptive Sequencing Rules (ASR) for restless Markov multi-armed bandits."""
from ._backend import DEFAULT as BACKEND
from .markov import (
    ArmSpec,
    ChainStats,
    InstanceStats,
    chain_stats,
    instance_stats,
    mean_hitting_times,
    spectral_gap,
    stationary_distribution,
    two_state_arm,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ArmSpec",
    "ChainStats",
    "InstanceStats",
    "chain_stats",
    "instance_stats",
    "mean_hitting_times",
    "spectral_gap",
    "stationary_distribution",
    "two_state_arm",
]
