"""Position-space evolution of coined walks on cyclic power-of-two lattices.

Amplitudes are stored as an array of shape ``(coin_dim, *lattice.dims)``;
flattening it row-major gives the ``coin (x) position`` ordering used by
the explicit operator matrices in this module. Lattice site ``i`` on an
axis of length ``N`` has coordinate ``i`` for ``i < N/2`` and ``i - N``
otherwise, so the origin is index 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from qwrev.coinspace import CoinOperator
from qwrev.errors import ContractError, DimensionError, UnsupportedSizeError
from qwrev.numerics import STATE_TOL, is_power_of_two

OP_V = "V"
OP_GK = "Gk"
_OPS = (OP_V, OP_GK)


@dataclass(frozen=True)
class LatticeSpec:
    """Cyclic lattice with one power-of-two site count per axis."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ContractError("lattice needs at least one axis")
        bad = [d for d in dims if not is_power_of_two(d) or d < 2]
        if bad:
            raise UnsupportedSizeError(f"lattice axes must be powers of two >= 2, got {bad}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def ring(cls, n_sites: int) -> "LatticeSpec":
        return cls((n_sites,))

    @classmethod
    def for_steps(cls, steps: int, ndim: int = 1) -> "LatticeSpec":
        """Smallest cube lattice on which ``steps`` steps never wrap."""
        n = 1 << max(1, math.ceil(math.log2(2 * steps + 2)))
        return cls((n,) * ndim)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    @property
    def coin_dim(self) -> int:
        return 2**self.ndim

    def coordinates(self, axis: int = 0) -> np.ndarray:
        n = self.dims[axis]
        return np.fft.fftfreq(n, 1.0 / n).astype(int)

    def index_of(self, site: Sequence[int] | int) -> tuple[int, ...]:
        if isinstance(site, (int, np.integer)):
            site = (int(site),)
        if len(site) != self.ndim:
            raise DimensionError(f"site {tuple(site)} does not match a {self.ndim}-D lattice")
        return tuple(int(x) % n for x, n in zip(site, self.dims))

    def light_cone_ok(self, steps: int) -> bool:
        return all(d >= 2 * steps + 2 for d in self.dims)

    def require_light_cone(self, steps: int) -> None:
        if not self.light_cone_ok(steps):
            raise ContractError(
                f"lattice {self.dims} too small for {steps} steps (need >= {2 * steps + 2} sites per axis)"
            )


@dataclass(frozen=True, eq=False)
class WalkerState:
    """Walker amplitudes over (coin index, lattice site) plus elapsed steps."""

    lattice: LatticeSpec
    amps: np.ndarray
    step_count: int = 0

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        expected = (self.lattice.coin_dim, *self.lattice.dims)
        if a.shape != expected:
            raise DimensionError(f"amplitude shape {a.shape} != {expected}")
        object.__setattr__(self, "amps", a)

    @classmethod
    def from_amplitudes(cls, lattice: LatticeSpec, amps, *, tol: float = STATE_TOL) -> "WalkerState":
        state = cls(lattice, np.array(amps, dtype=complex))
        err = abs(state.norm_sq - 1.0)
        if err > tol:
            raise ContractError(f"state not normalized (|norm^2 - 1| = {err:.2e})")
        return state

    @classmethod
    def localized(cls, lattice: LatticeSpec, coin, site: Sequence[int] | int = 0) -> "WalkerState":
        """``|coin> (x) |site>``; ``coin`` is a basis index or a coin vector."""
        d = lattice.coin_dim
        if isinstance(coin, (int, np.integer)):
            if not 0 <= coin < d:
                raise ContractError(f"coin index {coin} outside 0..{d - 1}")
            chi = np.zeros(d, dtype=complex)
            chi[int(coin)] = 1.0
        else:
            chi = np.asarray(coin, dtype=complex)
            if chi.shape != (d,):
                raise DimensionError(f"coin vector must have length {d}")
        amps = np.zeros((d, *lattice.dims), dtype=complex)
        amps[(slice(None), *lattice.index_of(site))] = chi
        return cls.from_amplitudes(lattice, amps)

    @classmethod
    def product(cls, lattice: LatticeSpec, coin, position) -> "WalkerState":
        """``|coin> (x) |position>`` for an arbitrary position wavefunction."""
        chi = np.asarray(coin, dtype=complex)
        pos = np.asarray(position, dtype=complex).reshape(lattice.dims)
        return cls.from_amplitudes(lattice, np.multiply.outer(chi, pos))

    @property
    def coin_dim(self) -> int:
        return self.amps.shape[0]

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    @property
    def vector(self) -> np.ndarray:
        return self.amps.reshape(-1)

    def with_amps(self, amps: np.ndarray, advance: int = 0) -> "WalkerState":
        return WalkerState(self.lattice, amps, self.step_count + advance)


@dataclass(frozen=True)
class InterventionSchedule:
    """Steps (1-based) at which the standard step is replaced.

    ``"V"`` swaps the coin for the intervention coin and still shifts;
    ``"Gk"`` applies the per-momentum eigenbasis cycle and is only
    understood by the momentum backend.
    """

    total_steps: int
    entries: tuple[tuple[int, str], ...] = field(default=())

    def __post_init__(self):
        entries = tuple((int(j), str(op)) for j, op in self.entries)
        if self.total_steps < 0:
            raise ContractError("total_steps must be non-negative")
        prev = 0
        for j, op in entries:
            if op not in _OPS:
                raise ContractError(f"unknown intervention tag {op!r}")
            if j <= prev or j > self.total_steps:
                raise ContractError(
                    f"schedule steps must be strictly increasing within [1, {self.total_steps}], got {j}"
                )
            prev = j
        object.__setattr__(self, "entries", entries)

    @classmethod
    def none(cls, total_steps: int) -> "InterventionSchedule":
        return cls(total_steps)

    @classmethod
    def single(cls, step: int, total_steps: int, op: str = OP_V) -> "InterventionSchedule":
        return cls(total_steps, ((step, op),))

    @classmethod
    def at(cls, steps: Sequence[int], total_steps: int, op: str = OP_V) -> "InterventionSchedule":
        return cls(total_steps, tuple((j, op) for j in steps))

    def lookup(self) -> dict[int, str]:
        return dict(self.entries)


class Evolution(NamedTuple):
    state: WalkerState
    trace: np.ndarray | None


def displacement_map(ndim: int) -> np.ndarray:
    """Integer array ``(2**ndim, ndim)``: bit ``i`` of ``c`` set means +1 on axis ``i``, else -1."""
    c = np.arange(2**ndim)[:, None]
    bits = (c >> np.arange(ndim)[None, :]) & 1
    return 2 * bits - 1


def _check_coin(state: WalkerState, coin: CoinOperator) -> None:
    if coin.dim != state.coin_dim:
        raise ContractError(f"coin dim {coin.dim} != walker coin dim {state.coin_dim}")


def _shift_amps(amps: np.ndarray, ndim: int, sign: int) -> np.ndarray:
    disp = displacement_map(ndim) * sign
    axes = tuple(range(ndim))
    out = np.empty_like(amps)
    for c, v in enumerate(disp):
        out[c] = np.roll(amps[c], tuple(int(x) for x in v), axis=axes)
    return out


def apply_shift(s: WalkerState) -> WalkerState:
    """Conditional translation: coin index ``c`` moves by ``displacement_map[c]``."""
    if s.coin_dim != 2**s.lattice.ndim:
        raise ContractError("coin dimension does not match lattice dimensionality")
    return s.with_amps(_shift_amps(s.amps, s.lattice.ndim, +1))


def apply_shift_inverse(s: WalkerState) -> WalkerState:
    return s.with_amps(_shift_amps(s.amps, s.lattice.ndim, -1))


def apply_coin(s: WalkerState, coin: CoinOperator | np.ndarray) -> WalkerState:
    m = coin.matrix if isinstance(coin, CoinOperator) else np.asarray(coin)
    if m.shape != (s.coin_dim, s.coin_dim):
        raise ContractError(f"coin shape {m.shape} does not act on coin dim {s.coin_dim}")
    return s.with_amps(np.tensordot(m, s.amps, axes=(1, 0)))


def step(s: WalkerState, coin: CoinOperator) -> WalkerState:
    """One step ``S (I (x) C)``: toss the coin, then shift."""
    _check_coin(s, coin)
    amps = np.tensordot(coin.matrix, s.amps, axes=(1, 0))
    return s.with_amps(_shift_amps(amps, s.lattice.ndim, +1), advance=1)


def step_adjoint(s: WalkerState, coin: CoinOperator) -> WalkerState:
    """One step of ``(I (x) C^dagger) S^dagger``: unshift, then undo the coin."""
    _check_coin(s, coin)
    amps = _shift_amps(s.amps, s.lattice.ndim, -1)
    return s.with_amps(np.tensordot(coin.matrix.conj().T, amps, axes=(1, 0)), advance=1)


def evolve(
    s: WalkerState,
    coin: CoinOperator,
    steps: int,
    schedule: InterventionSchedule | None = None,
    intervention: CoinOperator | None = None,
    *,
    record: bool = False,
) -> Evolution:
    """Run ``steps`` steps, substituting ``intervention`` at scheduled steps.

    With ``record`` the returned trace stacks the position distribution
    before the first step and after every step (shape ``(steps + 1, *dims)``).
    """
    if steps < 0:
        raise ContractError("steps must be non-negative")
    _check_coin(s, coin)
    schedule = schedule if schedule is not None else InterventionSchedule.none(steps)
    if schedule.total_steps != steps:
        raise ContractError(f"schedule covers {schedule.total_steps} steps, asked for {steps}")
    ops = schedule.lookup()
    if any(op == OP_GK for op in ops.values()):
        raise ContractError("'Gk' interventions need the momentum backend (spectral.momentum_evolve)")
    if ops and intervention is None:
        raise ContractError("schedule has interventions but no intervention coin was given")
    if intervention is not None:
        _check_coin(s, intervention)

    trace = [position_distribution(s)] if record else None
    for j in range(1, steps + 1):
        s = step(s, intervention if j in ops else coin)
        if record:
            trace.append(position_distribution(s))
    return Evolution(s, np.stack(trace) if record else None)


def position_distribution(s: WalkerState) -> np.ndarray:
    """``P(x) = sum_c |amp(c, x)|**2`` with the lattice's shape."""
    return np.sum(np.abs(s.amps) ** 2, axis=0)


def coin_reduced_state(s: WalkerState) -> np.ndarray:
    """Coin density matrix after tracing out position."""
    a = s.amps.reshape(s.coin_dim, -1)
    return a @ a.conj().T


def shift_matrix(lattice: LatticeSpec) -> np.ndarray:
    """Explicit permutation matrix of the shift, built site by site."""
    d, dims = lattice.coin_dim, lattice.dims
    size = lattice.size
    disp = displacement_map(lattice.ndim)
    m = np.zeros((d * size, d * size), dtype=complex)
    for c in range(d):
        for flat in range(size):
            site = np.unravel_index(flat, dims)
            dest = tuple((x + v) % n for x, v, n in zip(site, disp[c], dims))
            m[c * size + np.ravel_multi_index(dest, dims), c * size + flat] = 1.0
    return m


def coin_matrix(coin: CoinOperator | np.ndarray, lattice: LatticeSpec) -> np.ndarray:
    """``C (x) I_position`` as an explicit matrix in the package's flattening."""
    m = coin.matrix if isinstance(coin, CoinOperator) else np.asarray(coin)
    return np.kron(m, np.eye(lattice.size))


def step_matrix(coin: CoinOperator, lattice: LatticeSpec) -> np.ndarray:
    return shift_matrix(lattice) @ coin_matrix(coin, lattice)
