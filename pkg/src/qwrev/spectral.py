"""Momentum-space machinery for n-dimensional walks.

On a cyclic lattice the step ``S (I (x) C)`` is block diagonal in the
Fourier basis: at momentum ``k`` it acts on the coin as
``C_k = diag(exp(-i k . v_c)) C`` where ``v_c`` is the displacement of coin
index ``c``. The intervention for ``2**n``-state coins is the cyclic shift
``G_k`` on the eigenbasis of ``C_k``; alternating ``G_k`` with ``l`` steps
``2**n`` times returns every momentum component to itself up to the phase
``det(C_k)**l``, which does not depend on ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qwrev.coinspace import CoinOperator
from qwrev.errors import ContractError, DegenerateSpectrum, DimensionError, VerificationError
from qwrev.numerics import (
    DEGENERACY_TOL,
    TWO_PI,
    EigenSystem,
    fft_nd,
    min_circular_gap,
    phase_fidelity,
    unitary_eigendecompose,
)
from qwrev.walk import (
    OP_GK,
    OP_V,
    InterventionSchedule,
    LatticeSpec,
    WalkerState,
    displacement_map,
)

PROTOCOL_TOL = 1e-9


@dataclass(frozen=True)
class MomentumGrid:
    """Momenta ``k_i = 2 pi j_i / N_i`` in the same order as ``numpy.fft``."""

    dims: tuple[int, ...]

    @classmethod
    def for_lattice(cls, lattice: LatticeSpec) -> "MomentumGrid":
        return cls(lattice.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def kvectors(self) -> np.ndarray:
        """Array of shape ``(size, ndim)``, row-major over the axes."""
        axes = [TWO_PI * np.arange(n) / n for n in self.dims]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True, eq=False)
class SpectralCoin:
    """Eigen-decomposition of one coin block, ``matrix = sum_j e^{i w_j} |f_j><f_j|``.

    ``phases`` ascend in ``[0, 2 pi)`` and ``vectors[:, j]`` is ``|f_{j+1}>``
    in one-based notation.
    """

    matrix: np.ndarray
    phases: np.ndarray
    vectors: np.ndarray

    @classmethod
    def from_eigensystem(cls, matrix: np.ndarray, es: EigenSystem) -> "SpectralCoin":
        return cls(np.asarray(matrix, dtype=complex), es.phases, es.vectors)

    @property
    def dim(self) -> int:
        return self.phases.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.conj().T

    def rephased(self, angles: Sequence[float]) -> "SpectralCoin":
        """Same spectrum with ``|f_j> -> e^{i angles_j} |f_j>``."""
        return SpectralCoin(self.matrix, self.phases, self.vectors * np.exp(1j * np.asarray(angles)))


def _coin_array(coin: CoinOperator | np.ndarray) -> np.ndarray:
    return coin.matrix if isinstance(coin, CoinOperator) else np.asarray(coin, dtype=complex)


def build_ck(coin: CoinOperator | np.ndarray, k: Sequence[float] | float, dmap: np.ndarray | None = None) -> np.ndarray:
    """Coin block at momentum ``k``: ``diag(exp(-i k . v_c)) C``."""
    c = _coin_array(coin)
    kv = np.atleast_1d(np.asarray(k, dtype=float))
    if dmap is None:
        dmap = displacement_map(kv.size)
    if c.shape[0] != dmap.shape[0] or dmap.shape[1] != kv.size:
        raise ContractError(
            f"coin dim {c.shape[0]}, displacement map {dmap.shape} and momentum of length {kv.size} disagree"
        )
    return np.exp(-1j * (dmap @ kv))[:, None] * c


def spectral_decompose(ck: np.ndarray, *, seed=0, k: Sequence[float] | None = None) -> SpectralCoin:
    """Strict (non-degenerate) spectral decomposition of a coin block."""
    try:
        es = unitary_eigendecompose(ck, strict=True, seed=seed)
    except DegenerateSpectrum as exc:
        if k is None:
            raise
        kt = tuple(float(x) for x in k)
        raise DegenerateSpectrum(f"degenerate coin spectrum at k={kt}: {exc}", k=kt, gap=exc.gap) from exc
    return SpectralCoin.from_eigensystem(ck, es)


def build_gk(sc: SpectralCoin) -> np.ndarray:
    """``sum_j |f_{j+1}><f_j|`` with indices taken cyclically."""
    if min_circular_gap(sc.phases) <= DEGENERACY_TOL:
        raise DegenerateSpectrum("G_k needs a non-degenerate spectrum")
    v = sc.vectors
    return np.roll(v, -1, axis=1) @ v.conj().T


def power_via_spectrum(sc: SpectralCoin, t: int) -> np.ndarray:
    """``sum_j e^{i w_j t} |f_j><f_j|``."""
    if t < 0:
        raise ContractError("t must be non-negative")
    return (sc.vectors * np.exp(1j * sc.phases * t)) @ sc.vectors.conj().T


def _ket_bra(v: np.ndarray, a: int, b: int) -> np.ndarray:
    # one-based indices, as in |f_a><f_b|
    return np.outer(v[:, a - 1], v[:, b - 1].conj())


def closed_form_m_power(sc: SpectralCoin, t: int, m: int) -> np.ndarray:
    """``((C_k)^t G_k)^m`` assembled term by term from the eigen-data.

    Three groups of rank-one terms (one-based indices, ``d = dim``):

    * ``k = m+1..d``: ``prod_{l=k-m+1}^{k} e^{i w_l t}  |f_k><f_{k-m}|``
    * ``j = 1..m-1``: ``prod_{u=1}^{j} e^{i w_u t} prod_{v=0}^{m-j-1} e^{i w_{d-v} t}  |f_j><f_{d-(m-j)}|``
    * ``prod_{u=1}^{m} e^{i w_u t}  |f_m><f_d|``

    With ``m = 1`` only the first and last groups survive.
    """
    d = sc.dim
    if not 1 <= m <= d - 1:
        raise ContractError(f"m={m} outside 1..{d - 1}")
    e = np.exp(1j * sc.phases * t)
    w = lambda i: e[i - 1]  # noqa: E731
    v = sc.vectors
    out = np.zeros((d, d), dtype=complex)
    for k in range(m + 1, d + 1):
        coef = np.prod([w(l) for l in range(k - (m - 1), k + 1)])
        out += coef * _ket_bra(v, k, k - m)
    for j in range(1, m):
        coef = np.prod([w(u) for u in range(1, j + 1)]) * np.prod([w(d - q) for q in range(0, m - j)])
        out += coef * _ket_bra(v, j, d - (m - j))
    out += np.prod([w(u) for u in range(1, m + 1)]) * _ket_bra(v, m, d)
    return out


def closed_form_full_cycle(sc: SpectralCoin, t: int) -> np.ndarray:
    """``((C_k)^t G_k)^(d-1) (C_k)^t`` written out as ``d`` rank-one terms.

    Each coefficient uses the regrouped product
    ``prod_{u<j} e^{i w_u t} * prod_{v=0}^{d-j-1} e^{i w_{d-v} t} * e^{i w_j t}``
    for the ``|f_j><f_{j+1}|`` terms with ``j = 1..d-2``, next to the two
    boundary terms ``|f_d><f_1|`` and ``|f_{d-1}><f_d|``.
    """
    d = sc.dim
    e = np.exp(1j * sc.phases * t)
    v = sc.vectors
    full = np.prod(e)
    out = full * _ket_bra(v, d, 1) + full * _ket_bra(v, d - 1, d)
    for j in range(1, d - 1):
        out += regrouped_phase(e, j) * _ket_bra(v, j, j + 1)
    return out


def regrouped_phase(e: np.ndarray, j: int) -> complex:
    """``prod_{u=1}^{j-1} e_u * prod_{v=0}^{d-j-1} e_{d-v} * e_j`` for one-based ``j``."""
    d = e.shape[0]
    left = np.prod(e[: j - 1])
    right = np.prod([e[d - q - 1] for q in range(0, d - j)])
    return complex(left * right * e[j - 1])


@dataclass(frozen=True)
class FullCycleReport:
    """Outcome of the full-cycle identity check at one momentum."""

    phase: complex
    defect: float
    expanded_defect: float
    phase_identity_defect: float


def verify_full_cycle(sc: SpectralCoin, t: int) -> FullCycleReport:
    """Check ``((C_k)^t G_k)^(d-1) (C_k)^t = (prod_l e^{i w_l t}) G_k^dagger``.

    The left side is multiplied out from the source matrix; the right side
    uses only the spectrum. ``expanded_defect`` compares the left side with
    :func:`closed_form_full_cycle`, and ``phase_identity_defect`` is the
    largest deviation of any regrouped per-``j`` phase from the full
    product.
    """
    if t < 0:
        raise ContractError("t must be non-negative")
    d = sc.dim
    gk = build_gk(sc)
    ct = np.linalg.matrix_power(sc.matrix, t)
    lhs = np.linalg.matrix_power(ct @ gk, d - 1) @ ct
    e = np.exp(1j * sc.phases * t)
    phase = complex(np.prod(e))
    rhs = phase * gk.conj().T
    per_j = [regrouped_phase(e, j) for j in range(1, d)]
    return FullCycleReport(
        phase=phase,
        defect=float(np.max(np.abs(lhs - rhs))),
        expanded_defect=float(np.max(np.abs(lhs - closed_form_full_cycle(sc, t)))),
        phase_identity_defect=float(max(abs(p - phase) for p in per_j)) if per_j else 0.0,
    )


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Per-momentum spectral data for one coin on one lattice."""

    grid: MomentumGrid
    kvectors: np.ndarray
    coins: tuple[SpectralCoin, ...] = field(repr=False)

    @property
    def gk_stack(self) -> np.ndarray:
        return np.stack([build_gk(sc) for sc in self.coins])

    @property
    def phase_stack(self) -> np.ndarray:
        return np.stack([sc.phases for sc in self.coins])

    def rephased(self, rng: np.random.Generator) -> "SpectralGrid":
        """Random eigenvector phases at every momentum (spectra unchanged)."""
        coins = tuple(sc.rephased(rng.uniform(0, TWO_PI, sc.dim)) for sc in self.coins)
        return SpectralGrid(self.grid, self.kvectors, coins)


def spectral_grid(coin: CoinOperator | np.ndarray, lattice: LatticeSpec, *, seed: int = 0) -> SpectralGrid:
    """Decompose ``C_k`` at every lattice momentum.

    Raises :class:`DegenerateSpectrum` naming the first momentum at which
    the spectrum is degenerate.
    """
    c = _coin_array(coin)
    if c.shape[0] != lattice.coin_dim:
        raise ContractError(f"coin dim {c.shape[0]} does not fit a {lattice.ndim}-D lattice")
    grid = MomentumGrid.for_lattice(lattice)
    ks = grid.kvectors()
    dmap = displacement_map(lattice.ndim)
    coins = tuple(
        spectral_decompose(build_ck(c, k, dmap), seed=np.random.default_rng((seed, i)), k=k)
        for i, k in enumerate(ks)
    )
    return SpectralGrid(grid, ks, coins)


def _to_momentum(state: WalkerState) -> np.ndarray:
    a = fft_nd(state.amps, state.lattice.dims)
    return a.reshape(state.coin_dim, -1)


def _from_momentum(ak: np.ndarray, like: WalkerState, advance: int) -> WalkerState:
    a = fft_nd(ak.reshape(like.amps.shape), like.lattice.dims, inverse=True)
    return like.with_amps(a, advance=advance)


def momentum_evolve(
    psi0: WalkerState,
    coin: CoinOperator | np.ndarray,
    steps: int,
    schedule: InterventionSchedule | None = None,
    intervention: CoinOperator | np.ndarray | None = None,
    *,
    grid: SpectralGrid | None = None,
    seed: int = 0,
) -> WalkerState:
    """Evolve through the Fourier basis, one coin block per momentum.

    Scheduled ``"V"`` steps use ``intervention`` in place of the coin (and
    still shift); ``"Gk"`` steps apply the eigenbasis cycle ``G_k`` alone.
    """
    c = _coin_array(coin)
    if c.shape[0] != psi0.coin_dim:
        raise ContractError(f"coin dim {c.shape[0]} != walker coin dim {psi0.coin_dim}")
    if steps < 0:
        raise ContractError("steps must be non-negative")
    schedule = schedule if schedule is not None else InterventionSchedule.none(steps)
    if schedule.total_steps != steps:
        raise ContractError(f"schedule covers {schedule.total_steps} steps, asked for {steps}")
    ops = schedule.lookup()
    if OP_V in ops.values():
        if intervention is None:
            raise ContractError("schedule has 'V' steps but no intervention coin was given")
        gv = _coin_array(intervention)
        if gv.shape != c.shape:
            raise DimensionError("intervention coin shape differs from coin shape")
    gks = None
    if OP_GK in ops.values():
        if grid is None:
            grid = spectral_grid(c, psi0.lattice, seed=seed)
        if grid.grid.dims != psi0.lattice.dims:
            raise ContractError("spectral grid was built for a different lattice")
        gks = grid.gk_stack

    ks = MomentumGrid.for_lattice(psi0.lattice).kvectors()
    shift_phase = np.exp(-1j * (displacement_map(psi0.lattice.ndim) @ ks.T))
    a = _to_momentum(psi0)
    for j in range(1, steps + 1):
        op = ops.get(j)
        if op is None:
            a = shift_phase * (c @ a)
        elif op == OP_V:
            a = shift_phase * (gv @ a)
        else:
            a = np.einsum("kij,jk->ik", gks, a)
    return _from_momentum(a, psi0, steps)


@dataclass(frozen=True)
class ProtocolResult:
    state: WalkerState = field(repr=False)
    fidelity: float
    total_steps: int
    phase: complex
    phase_spread: float
    per_k_defect: float
    schedule: InterventionSchedule = field(repr=False)


def protocol_schedule(coin_dim: int, l: int) -> InterventionSchedule:
    """``G_k`` then ``l`` steps, repeated ``coin_dim`` times; ``G_k`` counts as a step."""
    seg = l + 1
    return InterventionSchedule.at([1 + i * seg for i in range(coin_dim)], coin_dim * seg, OP_GK)


def run_protocol(
    psi0: WalkerState,
    coin: CoinOperator | np.ndarray,
    l: int,
    *,
    grid: SpectralGrid | None = None,
    seed: int = 0,
    check: bool = True,
    tol: float = PROTOCOL_TOL,
) -> ProtocolResult:
    """Apply ``G_k, C_k^l`` alternately ``2**n`` times and compare with ``psi0``.

    Each momentum component should come back multiplied by
    ``prod_j e^{i w_j(k) l}``; ``per_k_defect`` measures exactly that and
    ``fidelity`` is the position-space overlap ``|<psi0|final>|``.
    """
    if l < 1:
        raise ContractError("l must be >= 1")
    c = _coin_array(coin)
    if grid is None:
        grid = spectral_grid(c, psi0.lattice, seed=seed)
    d = psi0.coin_dim
    sched = protocol_schedule(d, l)
    final = momentum_evolve(psi0, c, sched.total_steps, sched, grid=grid)

    phases_k = np.exp(1j * l * grid.phase_stack.sum(axis=1))
    a0 = _to_momentum(psi0)
    af = _to_momentum(final)
    per_k_defect = float(np.max(np.abs(af - phases_k[None, :] * a0)))
    fid = phase_fidelity(final.vector, psi0.vector)
    result = ProtocolResult(
        state=final,
        fidelity=fid,
        total_steps=sched.total_steps,
        phase=complex(phases_k[0]),
        phase_spread=float(np.max(np.abs(phases_k - phases_k[0]))),
        per_k_defect=per_k_defect,
        schedule=sched,
    )
    if check and fid < 1.0 - tol:
        raise VerificationError(f"protocol fidelity {fid:.12f} below 1 - {tol:g}")
    return result
