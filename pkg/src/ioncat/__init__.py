"""Motional cat states of a trapped ion in an optical cavity.

Closed-form carrier dynamics, evolution conditioned on no photodetection,
quantum-jump trajectories and phonon statistics, each checked against an
RK4 integration of the underlying Schrodinger equation.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DegenerateStateError,
    DimensionMismatchError,
    IntegrationError,
    NoPhotonError,
    ParameterError,
)
from .hilbert import CompositeState, MotionalState, SystemParams  # noqa: E402

__all__ = [
    "CompositeState",
    "DegenerateStateError",
    "DimensionMismatchError",
    "IntegrationError",
    "MotionalState",
    "NoPhotonError",
    "ParameterError",
    "SystemParams",
    "__version__",
]
