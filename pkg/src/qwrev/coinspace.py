"""Coin-space operators: the general two-state coin, the intervention coin
``G``, the composite ``D = C^dagger G`` and Kronecker products of coins."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from qwrev.errors import ContractError, DimensionError
from qwrev.numerics import TWO_PI, UNITARY_TOL, as_matrix, is_power_of_two, unitarity_defect


@dataclass(frozen=True)
class CoinParams:
    """Angles of the two-state coin family.

    ``theta`` lies in ``[0, 2*pi)``; ``phi1`` and ``phi2`` in ``[0, pi)``.
    """

    theta: float
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta < TWO_PI:
            raise ContractError(f"theta={self.theta} outside [0, 2pi)")
        for name in ("phi1", "phi2"):
            v = getattr(self, name)
            if not 0.0 <= v < math.pi:
                raise ContractError(f"{name}={v} outside [0, pi)")

    @property
    def phase_sum(self) -> float:
        return self.phi1 + self.phi2

    @property
    def reversal_phase(self) -> complex:
        """``-exp(i(phi1 + phi2))``, the scalar picked up by ``G @ G``."""
        return -np.exp(1j * self.phase_sum)


HADAMARD = CoinParams(math.pi / 4)


@dataclass(frozen=True, eq=False)
class CoinOperator:
    """A unitary on a ``2**n``-dimensional coin space.

    ``params`` records the angles when the coin came from :func:`build_coin`
    or :func:`build_g`; it is ``None`` for explicit matrices.
    """

    matrix: np.ndarray
    params: CoinParams | None = None
    label: str = field(default="explicit")

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"coin must be square, got {m.shape}")
        if not is_power_of_two(m.shape[0]) or m.shape[0] < 2:
            raise ContractError(f"coin dimension {m.shape[0]} is not 2**n with n >= 1")
        defect = unitarity_defect(m)
        if defect > UNITARY_TOL:
            raise ContractError(f"coin is not unitary (defect {defect:.2e})")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def walk_dim(self) -> int:
        """Number of lattice axes ``n`` for a ``2**n``-dimensional coin."""
        return self.dim.bit_length() - 1

    @property
    def H(self) -> "CoinOperator":
        return CoinOperator(self.matrix.conj().T, None, f"{self.label}^dagger")

    def __matmul__(self, other: "CoinOperator") -> "CoinOperator":
        if self.dim != other.dim:
            raise DimensionError(f"coin dims differ: {self.dim} vs {other.dim}")
        return CoinOperator(self.matrix @ other.matrix, None, f"{self.label}*{other.label}")

    def __repr__(self) -> str:
        return f"CoinOperator(label={self.label!r}, dim={self.dim})"


def build_coin(p: CoinParams) -> CoinOperator:
    """``[[cos t, e^{i a} sin t], [e^{i b} sin t, -e^{i(a+b)} cos t]]``."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    e1, e2 = np.exp(1j * p.phi1), np.exp(1j * p.phi2)
    m = np.array([[c, e1 * s], [e2 * s, -e1 * e2 * c]], dtype=complex)
    return CoinOperator(m, p, "C")


def build_g(phi1: float, phi2: float) -> CoinOperator:
    """Antidiagonal intervention coin ``[[0, e^{i phi1}], [-e^{i phi2}, 0]]``."""
    p = CoinParams(0.0, phi1, phi2)
    m = np.array([[0.0, np.exp(1j * phi1)], [-np.exp(1j * phi2), 0.0]], dtype=complex)
    return CoinOperator(m, p, "G")


def build_d(coin: CoinOperator, g: CoinOperator) -> CoinOperator:
    """``D = C^dagger G``.

    For ``C`` and ``G`` sharing ``(phi1, phi2)`` this is the Hermitian
    involution ``[[-sin t, e^{i phi1} cos t], [e^{-i phi1} cos t, sin t]]``,
    so ``D @ D = I`` on the whole parameter range. With mismatched phases
    the product is still unitary but need not square to the identity.
    """
    if coin.dim != g.dim:
        raise DimensionError(f"coin dims differ: {coin.dim} vs {g.dim}")
    return CoinOperator(coin.matrix.conj().T @ g.matrix, None, "D")


def tensor_coin(parts: Sequence[CoinOperator]) -> CoinOperator:
    """Kronecker product in list order.

    The first factor acts on the most significant bit of the coin index,
    so with the lattice convention (bit ``i`` drives axis ``i``) the last
    factor drives axis 0.
    """
    if not parts:
        raise ContractError("tensor_coin needs at least one factor")
    if len(parts) == 1:
        return parts[0]
    m = reduce(np.kron, (p.matrix for p in parts))
    return CoinOperator(m, None, "(x)".join(p.label for p in parts))


def params_match(coin: CoinOperator, g: CoinOperator) -> bool:
    """True when both operators carry the same ``(phi1, phi2)``."""
    if coin.params is None or g.params is None:
        return False
    return math.isclose(coin.params.phi1, g.params.phi1, abs_tol=1e-15) and math.isclose(
        coin.params.phi2, g.params.phi2, abs_tol=1e-15
    )


def grover_coin(dim: int) -> CoinOperator:
    """``2|s><s| - I`` with ``|s>`` the uniform superposition."""
    s = np.full(dim, 1.0 / math.sqrt(dim))
    return CoinOperator(2.0 * np.outer(s, s) - np.eye(dim), None, "Grover")


def explicit_coin(matrix, label: str = "explicit") -> CoinOperator:
    return CoinOperator(np.asarray(matrix, dtype=complex), None, label)
