"""Exception hierarchy shared by every qwrev module."""

from __future__ import annotations


class QWalkError(Exception):
    """Base class for all errors raised by qwrev."""


class ContractError(QWalkError, ValueError):
    """An input violates an operation's precondition."""


class DimensionError(ContractError):
    """Operand shapes are incompatible."""


class UnsupportedSizeError(ContractError):
    """A lattice or FFT axis is not a power of two."""


class ConvergenceError(QWalkError, ArithmeticError):
    """An iterative solver exhausted its iteration budget."""


class DegenerateSpectrum(QWalkError):
    """A unitary has (numerically) coincident eigenphases.

    ``k`` carries the offending momentum when raised from a per-k
    decomposition, otherwise it is ``None``.
    """

    def __init__(self, message: str, k: tuple[float, ...] | None = None, gap: float | None = None):
        super().__init__(message)
        self.k = k
        self.gap = gap


class VerificationError(QWalkError):
    """A numerical identity failed to hold within tolerance."""
