"""Reversal of one-dimensional coined walks by a single coin intervention.

Replacing one coin toss by ``G`` makes the remaining forward evolution
retrace the walk: ``U^t2 V U^t1 = (-e^{i(phi1+phi2)})^(t2+1) (I (x) D)
(U^dagger)^(t2+1) U^t1`` with ``D = C^dagger G``. The functions here
compute both sides independently and report how well they agree, and
build the periodic and peak-steering experiments on top of that.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from qwrev.coinspace import CoinOperator, CoinParams, build_coin, build_d, build_g, params_match
from qwrev.errors import ContractError, VerificationError
from qwrev.numerics import phase_fidelity
from qwrev.walk import (
    InterventionSchedule,
    WalkerState,
    apply_coin,
    coin_reduced_state,
    evolve,
    position_distribution,
    step,
    step_adjoint,
)

log = logging.getLogger(__name__)

RETURN_TOL = 1e-10
IDENTITY_TOL = 1e-9
PERIOD_TOL = 1e-9


@dataclass(frozen=True)
class ReversionReport:
    t1: int
    t2: int
    params: CoinParams
    phase_factor: complex
    lhs_rhs_fidelity: float
    max_amplitude_diff: float
    position_return_probability: float
    marginal_defect: float
    d_squared_defect: float
    final_state: WalkerState = field(repr=False, compare=False)

    @property
    def total_steps(self) -> int:
        return self.t1 + self.t2 + 1


def _coins(p: CoinParams, g: CoinOperator | None, require_match: bool):
    coin = build_coin(p)
    g = g if g is not None else build_g(p.phi1, p.phi2)
    if require_match and not params_match(coin, g):
        raise ContractError("C and G must share (phi1, phi2) for the reversal identity")
    d = build_d(coin, g)
    dd = float(np.max(np.abs(d.matrix @ d.matrix - np.eye(d.dim))))
    return coin, g, d, dd


def _return_probability(initial: np.ndarray, final: np.ndarray) -> float:
    """Final probability mass on the sites the initial state occupied."""
    support = initial > 1e-15
    return float(final[support].sum())


def _check_1d(psi0: WalkerState) -> None:
    if psi0.lattice.ndim != 1:
        raise ContractError("the closed-form reversal applies to walks on a line")


def _report(psi0, p, t1, t2, phase, lhs, rhs, dd) -> ReversionReport:
    p0 = position_distribution(psi0)
    pf = position_distribution(lhs)
    return ReversionReport(
        t1=t1,
        t2=t2,
        params=p,
        phase_factor=complex(phase),
        lhs_rhs_fidelity=phase_fidelity(lhs.vector, rhs),
        max_amplitude_diff=float(np.max(np.abs(lhs.vector - rhs))),
        position_return_probability=_return_probability(p0, pf),
        marginal_defect=float(np.max(np.abs(pf - p0))),
        d_squared_defect=dd,
        final_state=lhs,
    )


def intervened_walk(psi0: WalkerState, coin: CoinOperator, g: CoinOperator, t1: int, t2: int) -> WalkerState:
    """``U^t2 V U^t1 |psi0>`` by direct stepping."""
    total = t1 + t2 + 1
    sched = InterventionSchedule.single(t1 + 1, total)
    return evolve(psi0, coin, total, sched, g).state


def verify_reversal_identity(
    psi0: WalkerState,
    p: CoinParams,
    t1: int,
    t2: int,
    *,
    g: CoinOperator | None = None,
    require_match: bool = True,
    check: bool = False,
    tol: float = IDENTITY_TOL,
) -> ReversionReport:
    """Compare the intervened walk with its reversed-evolution closed form.

    The left side steps forward ``t1`` times, applies ``V`` once and steps
    forward ``t2`` more times. The right side steps forward ``t1`` times,
    then applies ``t2 + 1`` adjoint steps, the coin rotation ``D`` and the
    scalar ``(-e^{i(phi1+phi2)})**(t2+1)``. The phase is kept, so
    ``max_amplitude_diff`` tests strict equality.
    """
    _check_1d(psi0)
    if t1 < 0 or t2 < 0:
        raise ContractError("t1 and t2 must be non-negative")
    psi0.lattice.require_light_cone(t1 + t2 + 1)
    coin, g, d, dd = _coins(p, g, require_match)

    lhs = intervened_walk(psi0, coin, g, t1, t2)

    s = psi0
    for _ in range(t1):
        s = step(s, coin)
    for _ in range(t2 + 1):
        s = step_adjoint(s, coin)
    phase = p.reversal_phase ** (t2 + 1)
    rhs = phase * apply_coin(s, d).vector

    report = _report(psi0, p, t1, t2, phase, lhs, rhs, dd)
    if check and report.max_amplitude_diff > tol:
        raise VerificationError(f"reversal identity off by {report.max_amplitude_diff:.3e} (tol {tol:g})")
    return report


def verify_return(
    psi0: WalkerState,
    p: CoinParams,
    l: int,
    *,
    g: CoinOperator | None = None,
    require_match: bool = True,
    check: bool = True,
    tol: float = RETURN_TOL,
) -> ReversionReport:
    """Run ``U^(l-1) V U^l`` and check the walker is back where it started.

    The expected final state is ``(-e^{i(phi1+phi2)})**l (I (x) D) |psi0>``,
    evaluated directly from ``psi0`` without any stepping. With ``check``
    a :class:`VerificationError` is raised when either the position
    marginal or the amplitudes deviate by more than ``tol``.
    """
    _check_1d(psi0)
    if l < 1:
        raise ContractError("l must be >= 1")
    psi0.lattice.require_light_cone(2 * l)
    coin, g, d, dd = _coins(p, g, require_match)

    lhs = intervened_walk(psi0, coin, g, l, l - 1)
    phase = p.reversal_phase**l
    rhs = phase * apply_coin(psi0, d).vector

    report = _report(psi0, p, l, l - 1, phase, lhs, rhs, dd)
    if check and (report.marginal_defect > tol or report.max_amplitude_diff > tol):
        raise VerificationError(
            f"walker did not return: marginal defect {report.marginal_defect:.3e}, "
            f"amplitude defect {report.max_amplitude_diff:.3e} (tol {tol:g})"
        )
    return report


@dataclass(frozen=True)
class PeriodReport:
    position_period: int | None
    full_state_period: int | None
    coin_period: int | None
    scan_horizon: int
    position_recurrences: tuple[int, ...]
    full_state_recurrences: tuple[int, ...]
    recurrence_fidelity: float | None

    @property
    def ratio_holds(self) -> bool | None:
        """Whether the full state takes exactly twice as long to recur as the position."""
        if self.position_period is None or self.full_state_period is None:
            return None
        return self.full_state_period == 2 * self.position_period


@dataclass(frozen=True)
class PeriodicRun:
    report: PeriodReport
    position_trace: np.ndarray = field(repr=False)
    coin_trace: np.ndarray = field(repr=False)
    final_state: WalkerState = field(repr=False)


def periodic_schedule(l: int, cycles: int) -> InterventionSchedule:
    """``(U^(2l-1) V)^cycles U^l``: ``V`` at steps ``l+1, 3l+1, 5l+1, ...``."""
    total = (2 * cycles + 1) * l
    return InterventionSchedule.at([l + 1 + 2 * l * i for i in range(cycles)], total)


def _period(recurrences: list[int], horizon: int) -> int | None:
    # a period is only claimed once it has been seen to repeat
    if not recurrences:
        return None
    first = recurrences[0]
    if 2 * first > horizon or 2 * first not in recurrences:
        return None
    return first


def run_periodic(
    psi0: WalkerState,
    p: CoinParams,
    l: int,
    cycles: int,
    *,
    tol: float = PERIOD_TOL,
) -> PeriodicRun:
    """Drive the walk with ``V`` every ``2l`` steps and measure recurrences.

    Every step is compared against the initial state: the position marginal
    entry by entry, the coin reduced density matrix entry by entry, and the
    full state up to a global phase. The period of each is its first
    recurrence, provided that recurrence repeats at twice the step within
    the horizon ``(2 * cycles + 1) * l``.
    """
    _check_1d(psi0)
    if l < 1 or cycles < 1:
        raise ContractError("need l >= 1 and cycles >= 1")
    psi0.lattice.require_light_cone(2 * l)
    coin = build_coin(p)
    g = build_g(p.phi1, p.phi2)
    sched = periodic_schedule(l, cycles)
    ops = sched.lookup()

    p0 = position_distribution(psi0)
    rho0 = coin_reduced_state(psi0)
    pos_trace = [p0]
    coin_trace = [rho0]
    pos_hits: list[int] = []
    full_hits: list[int] = []
    coin_hits: list[int] = []
    fidelities: dict[int, float] = {}

    s = psi0
    for j in range(1, sched.total_steps + 1):
        s = step(s, g if j in ops else coin)
        pj = position_distribution(s)
        rho = coin_reduced_state(s)
        pos_trace.append(pj)
        coin_trace.append(rho)
        if np.max(np.abs(pj - p0)) <= tol:
            pos_hits.append(j)
        if np.max(np.abs(rho - rho0)) <= tol:
            coin_hits.append(j)
        f = phase_fidelity(s.vector, psi0.vector)
        fidelities[j] = f
        if f >= 1.0 - tol:
            full_hits.append(j)

    horizon = sched.total_steps
    full_period = _period(full_hits, horizon)
    rec_fid = None
    if full_period is not None:
        rec_fid = min(fidelities[j] for j in range(full_period, horizon + 1, full_period))
    report = PeriodReport(
        position_period=_period(pos_hits, horizon),
        full_state_period=full_period,
        coin_period=_period(coin_hits, horizon),
        scan_horizon=horizon,
        position_recurrences=tuple(pos_hits),
        full_state_recurrences=tuple(full_hits),
        recurrence_fidelity=rec_fid,
    )
    log.debug("periodic run l=%d cycles=%d -> %s", l, cycles, report)
    return PeriodicRun(report, np.stack(pos_trace), np.stack(coin_trace), s)


@dataclass(frozen=True)
class ScanRow:
    """Peak of the final distribution for one intervention step (``None`` = no intervention)."""

    step: int | None
    argmax_site: int
    p_max: float
    p_negative: float


def peak_summary(state: WalkerState, step_index: int | None = None) -> ScanRow:
    dist = position_distribution(state)
    coords = state.lattice.coordinates(0)
    idx = np.unravel_index(int(np.argmax(dist)), dist.shape)
    neg = coords < 0
    p_neg = float(dist[neg].sum())
    return ScanRow(step_index, int(coords[idx[0]]), float(dist[idx]), p_neg)


def scan_intervention_times(
    psi0: WalkerState,
    p: CoinParams,
    total_steps: int,
    *,
    include_baseline: bool = False,
) -> list[ScanRow]:
    """Peak location, peak probability and negative-side mass for every
    placement ``j = 1..total_steps`` of a single ``V``.

    With ``include_baseline`` the uninterrupted walk is prepended as a row
    whose ``step`` is ``None``.
    """
    _check_1d(psi0)
    if total_steps < 2:
        raise ContractError("total_steps must be >= 2")
    psi0.lattice.require_light_cone(total_steps)
    coin = build_coin(p)
    g = build_g(p.phi1, p.phi2)

    rows = []
    if include_baseline:
        rows.append(peak_summary(evolve(psi0, coin, total_steps).state, None))
    prefix = psi0
    for j in range(1, total_steps + 1):
        s = step(prefix, g)
        for _ in range(total_steps - j):
            s = step(s, coin)
        rows.append(peak_summary(s, j))
        prefix = step(prefix, coin)
    return rows
