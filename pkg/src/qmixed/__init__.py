"""Mixed-state quantum circuits: states, channels, circuits, metrics and analyses."""

from . import analysis, channels, circuits, linalg, metrics, states
from .channels import SuperOperator
from .errors import DimensionError, ParseError, QMixedError, ResourceError, ValidationError, VerificationError
from .states import DensityMatrix

__version__ = "0.1.0"

__all__ = [
    "analysis",
    "channels",
    "circuits",
    "linalg",
    "metrics",
    "states",
    "DensityMatrix",
    "SuperOperator",
    "QMixedError",
    "ParseError",
    "ValidationError",
    "DimensionError",
    "ResourceError",
    "VerificationError",
]
