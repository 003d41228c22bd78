"""Coin-space interventions for discrete-time quantum walks.

Single interventions that send a walk on the line back to its start,
periodic intervention routines, and the eigenbasis-cycling protocol that
returns n-dimensional walks to their initial state.
"""

__version__ = "0.1.0"

from qwrev.coinspace import (  # noqa: E402
    HADAMARD,
    CoinOperator,
    CoinParams,
    build_coin,
    build_d,
    build_g,
    grover_coin,
    tensor_coin,
)
from qwrev.errors import (  # noqa: E402
    ContractError,
    ConvergenceError,
    DegenerateSpectrum,
    DimensionError,
    QWalkError,
    UnsupportedSizeError,
    VerificationError,
)
from qwrev.walk import InterventionSchedule, LatticeSpec, WalkerState, evolve, position_distribution  # noqa: E402

__all__ = [
    "HADAMARD",
    "CoinOperator",
    "CoinParams",
    "ContractError",
    "ConvergenceError",
    "DegenerateSpectrum",
    "DimensionError",
    "InterventionSchedule",
    "LatticeSpec",
    "QWalkError",
    "UnsupportedSizeError",
    "VerificationError",
    "WalkerState",
    "build_coin",
    "build_d",
    "build_g",
    "evolve",
    "grover_coin",
    "position_distribution",
    "tensor_coin",
]
