"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed together in
the "acceptance criteria" section at the end of the pytest run.
"""

import itertools
import math
import time

import numpy as np
import pytest

from conftest import random_params, random_product_coin, random_state_array, random_unitary
from qwrev.cli import EXIT_DEGENERATE, main
from qwrev.coinspace import HADAMARD, CoinParams, build_coin, build_d, build_g, grover_coin
from qwrev.errors import DegenerateSpectrum
from qwrev.numerics import unitary_eigendecompose
from qwrev.reversion import run_periodic, verify_return, verify_reversal_identity
from qwrev.spectral import (
    build_gk,
    closed_form_m_power,
    momentum_evolve,
    regrouped_phase,
    run_protocol,
    spectral_decompose,
    spectral_grid,
    verify_full_cycle,
)
from qwrev.walk import (
    InterventionSchedule,
    LatticeSpec,
    WalkerState,
    coin_matrix,
    evolve,
    position_distribution,
    shift_matrix,
)

PRODUCT2 = "pi/3:pi/5:0;pi/5:0:pi/7"
HADAMARD_COIN = build_coin(HADAMARD)


def test_criterion_1_reversal_identity(acceptance):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(100):
        p = random_params(rng)
        t1, t2 = (int(x) for x in rng.integers(0, 21, size=2))
        psi = WalkerState(LatticeSpec.ring(128), random_state_array(rng, (2, 128)))
        worst = max(worst, verify_reversal_identity(psi, p, t1, t2).max_amplitude_diff)
    ok = acceptance("1 reversal identity, 100 random tuples", worst <= 1e-9, f"max diff {worst:.2e} (tol 1e-9)")
    assert ok


def test_criterion_2_return_to_origin(acceptance):
    lat = LatticeSpec.ring(256)
    main_run = verify_return(WalkerState.localized(lat, 1, 0), HADAMARD, 50)
    p0 = position_distribution(main_run.final_state)[0]
    rng = np.random.default_rng(2)
    worst_coin = 0.0
    for _ in range(20):
        r = verify_return(WalkerState.localized(lat, random_state_array(rng, 2), 0), HADAMARD, 50, tol=1e-9)
        worst_coin = max(worst_coin, abs(r.position_return_probability - 1))
    pos = np.zeros(256, dtype=complex)
    pos[np.r_[0:4, 250:256]] = random_state_array(rng, 10)
    spread = verify_return(WalkerState.product(lat, random_state_array(rng, 2), pos), HADAMARD, 50, tol=1e-9)
    ok = abs(p0 - 1) <= 1e-10 and worst_coin <= 1e-9 and spread.marginal_defect <= 1e-9
    detail = f"|P(0)-1| {abs(p0 - 1):.1e}; random coins {worst_coin:.1e}; spread marginal {spread.marginal_defect:.1e}"
    assert acceptance("2 return to origin, l=50", ok, detail)


def test_criterion_3_four_hadamard_runs(acceptance):
    lat = LatticeSpec.ring(256)
    psi = WalkerState.localized(lat, 1, 0)
    g = build_g(0, 0)
    coords = lat.coordinates()
    dists, backend_diff = {}, 0.0
    for j in (None, 26, 51, 76):
        sched = InterventionSchedule.none(100) if j is None else InterventionSchedule.single(j, 100)
        a = evolve(psi, HADAMARD_COIN, 100, sched, g).state
        b = momentum_evolve(psi, HADAMARD_COIN, 100, sched, g)
        backend_diff = max(backend_diff, float(np.max(np.abs(a.amps - b.amps))))
        dists[j] = position_distribution(a)
    neg = lambda p: p[coords < 0].sum()  # noqa: E731
    base = dists[None]
    a_ok = neg(dists[26]) > neg(base)
    b_ok = dists[51][0] >= 1 - 1e-10
    d_ok = base[np.abs(coords) >= 75].sum() < 1e-3 and abs(base.sum() - 1) <= 1e-10
    ok = a_ok and b_ok and d_ok and backend_diff <= 1e-8
    detail = (
        f"P(x<0) j=26 {neg(dists[26]):.4f} vs baseline {neg(base):.4f}; P(0) j=51 {dists[51][0]:.12f}; "
        f"P(|x|>=75) {base[np.abs(coords) >= 75].sum():.2e}; backend diff {backend_diff:.1e}"
    )
    assert acceptance("3 four Hadamard runs (baseline, j=26, 51, 76)", ok, detail)


def test_criterion_4_periodicity(acceptance):
    found, ok = [], True
    for l in (1, 2, 4, 8):
        rep = run_periodic(WalkerState.localized(LatticeSpec.ring(64), 1, 0), HADAMARD, l, 4).report
        found.append(f"l={l}:{rep.position_period}/{rep.full_state_period}")
        two_cycles = all(j in rep.full_state_recurrences for j in (4 * l, 8 * l))
        ok &= (
            rep.position_period == 2 * l
            and rep.full_state_period == 4 * l
            and two_cycles
            and rep.recurrence_fidelity >= 1 - 1e-9
        )
    assert acceptance("4 periodicity 2l / 4l", ok, " ".join(found))


def _operator_grid():
    thetas = np.linspace(0, 2 * math.pi, 5, endpoint=False)
    phis = np.linspace(0, math.pi, 5, endpoint=False)
    return itertools.product(thetas, phis, phis)


def test_criterion_5_operator_identities(acceptance):
    """Shift inversion, G squared, DD = I and coin conjugation up to its phase."""
    lat = LatticeSpec.ring(8)
    sm = shift_matrix(lat)
    eye = np.eye(2 * lat.size)
    worst = {"conj_phase": 0.0, "shift": 0.0, "gg": 0.0, "dd": 0.0}
    for t, a, b in _operator_grid():
        c = coin_matrix(build_coin(CoinParams(t, a, b)), lat)
        g = coin_matrix(build_g(a, b), lat)
        gd = g.conj().T
        ph = -np.exp(1j * (a + b))
        d = build_d(build_coin(CoinParams(t, a, b)), build_g(a, b)).matrix
        worst["conj_phase"] = max(worst["conj_phase"], np.max(np.abs(gd @ c @ g - ph * c.conj().T)))
        worst["shift"] = max(
            worst["shift"], np.max(np.abs(gd @ sm @ g - sm.T)), np.max(np.abs(g @ sm @ gd - sm.T))
        )
        worst["gg"] = max(worst["gg"], np.max(np.abs(g @ g - ph * eye)), np.max(np.abs(gd @ gd - np.conj(ph) * eye)))
        worst["dd"] = max(worst["dd"], np.max(np.abs(d @ d - np.eye(2))))
    ok = all(v <= 1e-12 for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert acceptance("5b operator identities (shift, GG, DD, conjugation with phase)", ok, detail)


@pytest.mark.xfail(strict=True, reason="G^dagger C G equals -exp(i(phi1+phi2)) C^dagger, not C^dagger")
def test_criterion_5_coin_conjugation_literal(acceptance):
    lat = LatticeSpec.ring(8)
    worst = 0.0
    for t, a, b in _operator_grid():
        c = coin_matrix(build_coin(CoinParams(t, a, b)), lat)
        g = coin_matrix(build_g(a, b), lat)
        worst = max(worst, np.max(np.abs(g.conj().T @ c @ g - c.conj().T)))
    ok = acceptance(
        "5a coin conjugation without phase factor",
        worst <= 1e-12,
        f"max diff {worst:.2e}; identity holds only with the factor -exp(i(phi1+phi2))",
    )
    assert ok


def test_criterion_6_induction(acceptance):
    rng = np.random.default_rng(6)
    worst, worst_phase = 0.0, 0.0
    for d in (4, 8):
        for _ in range(5):
            sc = spectral_decompose(random_unitary(rng, d))
            g = build_gk(sc)
            for t in range(1, 11):
                step = np.linalg.matrix_power(sc.matrix, t) @ g
                acc = np.eye(d, dtype=complex)
                e = np.exp(1j * sc.phases * t)
                full = np.prod(e)
                for m in range(1, d):
                    acc = acc @ step
                    worst = max(worst, float(np.max(np.abs(closed_form_m_power(sc, t, m) - acc))))
                    worst_phase = max(worst_phase, abs(regrouped_phase(e, m) - full))
    ok = worst <= 1e-9 and worst_phase <= 1e-12
    assert acceptance("6 m-th power closed form", ok, f"max diff {worst:.1e} (1e-9); phase identity {worst_phase:.1e} (1e-12)")


def test_criterion_7_protocol(acceptance):
    rng = np.random.default_rng(7)
    cycle_defect = 0.0
    for d in (2, 4, 8):
        for t in (0, 1, 5, 10):
            cycle_defect = max(cycle_defect, verify_full_cycle(spectral_decompose(random_unitary(rng, d)), t).defect)
    lattices = {1: LatticeSpec.ring(64), 2: LatticeSpec((16, 16)), 3: LatticeSpec((8, 8, 8))}
    worst_fid, steps_ok, elapsed = 1.0, True, None
    for n, lat in lattices.items():
        coin = random_product_coin(rng, n)
        psi = WalkerState(lat, random_state_array(rng, (lat.coin_dim, *lat.dims)))
        start = time.perf_counter()
        grid = spectral_grid(coin, lat)
        for l in range(1, 9):
            res = run_protocol(psi, coin, l, grid=grid, check=False)
            worst_fid = min(worst_fid, res.fidelity)
            steps_ok &= res.total_steps == 2**n * (l + 1)
            if n == 3 and l == 8:
                elapsed = time.perf_counter() - start
    ok = cycle_defect <= 1e-9 and worst_fid >= 1 - 1e-9 and steps_ok and elapsed < 60
    detail = (
        f"full-cycle defect {cycle_defect:.1e}; min fidelity 1-{1 - worst_fid:.1e}; "
        f"step counts {'ok' if steps_ok else 'WRONG'}; n=3 l<=8 on 8^3 in {elapsed:.1f}s"
    )
    assert acceptance("7 n-D protocol", ok, detail)


def test_criterion_8_degeneracy_guard(acceptance, tmp_path, capsys):
    caught = []
    try:
        unitary_eigendecompose(grover_coin(4).matrix, strict=True)
    except DegenerateSpectrum:
        caught.append("eigensolver")
    try:
        run_protocol(WalkerState.localized(LatticeSpec((8, 8)), 0, (0, 0)), grover_coin(4), 2)
    except DegenerateSpectrum:
        caught.append("protocol")
    out = tmp_path / "g.json"
    code = main(["spectral", "--dim", "2", "--coin", "grover", "--l", "2", "--out", str(out)])
    capsys.readouterr()
    ok = caught == ["eigensolver", "protocol"] and code == EXIT_DEGENERATE and not out.exists()
    assert acceptance("8 Grover degeneracy guard", ok, f"raised in {caught}; CLI exit {code}")


DETERMINISM_RUNS = [
    ["walk", "--coin", "hadamard", "--coin-state", "1", "--steps", "100", "--schedule", "26", "--trace"],
    ["revert", "--l", "20", "--theta", "pi/3", "--phi1", "pi/5", "--phi2", "pi/7"],
    ["periodic", "--l", "3", "--cycles", "4"],
    ["spectral", "--dim", "2", "--coin", "product", "--factors", PRODUCT2, "--l", "3", "--lattice", "16x16"],
    ["scan", "--coin-state", "1", "--steps", "40"],
    ["crosscheck", "--dim", "2", "--coin", "product", "--factors", PRODUCT2, "--steps", "12", "--schedule", "4"],
]


def test_criterion_9_determinism(acceptance, tmp_path):
    same = []
    for i, args in enumerate(DETERMINISM_RUNS):
        for fmt in ("json", "csv"):
            blobs = []
            for rep in range(2):
                d = tmp_path / f"{i}-{fmt}-{rep}"
                d.mkdir()
                assert main([*args, "--format", fmt, "--out", str(d / f"out.{fmt}")]) == 0
                blobs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
            same.append(blobs[0] == blobs[1])
    ok = all(same)
    assert acceptance("9 byte-identical reruns", ok, f"{sum(same)}/{len(same)} mode/format pairs identical")
