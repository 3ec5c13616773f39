"""Adaptive biasing Monte Carlo over stratified state spaces.

SHUS (self-healing umbrella sampling), Wang-Landau with deterministic
stepsizes, SHUS^alpha and partially biased SHUS, on a two-dimensional
double-well benchmark, with exit-time and weight-convergence diagnostics.
"""
from ._backend import DEFAULT_NAME as BACKEND, available_backends
from .adapt import (
    SHUS,
    LogOccupation,
    PartialBias,
    SHUSAlpha,
    WLDeterministic,
    gamma_alpha,
)
from .chain import Chain
from .kernel import ChainState, ProposalConfig
from .model import TargetModel, potential_energy, reference_weights, stratum_index

__all__ = [
    "BACKEND",
    "available_backends",
    "SHUS",
    "SHUSAlpha",
    "WLDeterministic",
    "PartialBias",
    "LogOccupation",
    "gamma_alpha",
    "Chain",
    "ChainState",
    "ProposalConfig",
    "TargetModel",
    "potential_energy",
    "reference_weights",
    "stratum_index",
]

__version__ = "0.1.0"
