"""
CoherenceForge - quantum coherence and entanglement toolkit
"""

__version__ = "1.0.0"

from .states import BipartiteState, DensityMatrix, PureState
from .conversion import convert, generalized_cnot
from .runner import VerificationRunner
from .config import ForgeConfig
from .exceptions import (
    CoherenceForgeError, LinalgError, StateValidationError, ChannelError, ConfigurationError
)

__all__ = [
    "DensityMatrix",
    "PureState",
    "BipartiteState",
    "convert",
    "generalized_cnot",
    "VerificationRunner",
    "ForgeConfig",
    "CoherenceForgeError",
    "LinalgError",
    "StateValidationError",
    "ChannelError",
    "ConfigurationError",
]
