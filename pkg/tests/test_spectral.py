import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_product_coin, random_state_array, random_unitary
from qwrev.coinspace import CoinParams, build_coin, build_g, grover_coin, tensor_coin
from qwrev.errors import ContractError, DegenerateSpectrum
from qwrev.numerics import unitarity_defect
from qwrev.spectral import (
    MomentumGrid,
    SpectralCoin,
    build_ck,
    build_gk,
    closed_form_full_cycle,
    closed_form_m_power,
    momentum_evolve,
    power_via_spectrum,
    protocol_schedule,
    regrouped_phase,
    run_protocol,
    spectral_decompose,
    spectral_grid,
    verify_full_cycle,
)
from qwrev.walk import InterventionSchedule, LatticeSpec, WalkerState, evolve, position_distribution

# non-degenerate at every momentum of the tori used below
PRODUCT2 = tensor_coin([build_coin(CoinParams(math.pi / 3, math.pi / 5, 0)), build_coin(CoinParams(math.pi / 5, 0, math.pi / 7))])


def mpow(m, t):
    return np.linalg.matrix_power(m, t)


class TestMomentumGrid:
    def test_kvectors(self):
        ks = MomentumGrid((2, 4)).kvectors()
        assert ks.shape == (8, 2)
        np.testing.assert_allclose(ks[1], [0, math.pi / 2])
        np.testing.assert_allclose(ks[4], [math.pi, 0])


class TestBuildCk:
    def test_k_zero(self, hadamard):
        np.testing.assert_allclose(build_ck(hadamard, 0.0), hadamard.matrix, atol=0)

    def test_k_pi(self, hadamard):
        np.testing.assert_allclose(build_ck(hadamard, math.pi), -hadamard.matrix, atol=1e-15)

    def test_tensor_unitary(self, rng):
        ck = build_ck(PRODUCT2, rng.uniform(0, 2 * math.pi, 2))
        assert unitarity_defect(ck) <= 1e-14

    def test_dim_mismatch(self, hadamard):
        with pytest.raises(ContractError):
            build_ck(hadamard, [0.1, 0.2])

    def test_matches_plane_wave_step(self, hadamard):
        # one position-space step acting on a plane wave multiplies it by C_k
        n, j = 16, 3
        lat = LatticeSpec.ring(n)
        k = 2 * math.pi * j / n
        chi = np.array([0.6, 0.8j])
        wave = np.exp(1j * k * np.arange(n)) / math.sqrt(n)
        out = evolve(WalkerState.product(lat, chi, wave), hadamard, 1).state
        expected = np.multiply.outer(build_ck(hadamard, k) @ chi, wave)
        np.testing.assert_allclose(out.amps, expected, atol=1e-14)


class TestDecompose:
    def test_hadamard(self, hadamard):
        sc = spectral_decompose(build_ck(hadamard, 0.0))
        np.testing.assert_allclose(sc.phases, [0, math.pi], atol=1e-14)

    def test_grover_degenerate(self):
        with pytest.raises(DegenerateSpectrum):
            spectral_decompose(grover_coin(4).matrix, k=(0.0, 0.0))

    def test_random_8(self, rng):
        u = random_unitary(rng, 8)
        sc = spectral_decompose(u)
        assert np.max(np.abs(sc.reconstruct() - u)) <= 1e-10


class TestGk:
    def test_dim2(self, rng):
        sc = spectral_decompose(random_unitary(rng, 2))
        g = build_gk(sc)
        v = sc.vectors
        np.testing.assert_allclose(g, np.outer(v[:, 1], v[:, 0].conj()) + np.outer(v[:, 0], v[:, 1].conj()), atol=1e-15)
        assert np.max(np.abs(g @ g - np.eye(2))) <= 1e-12

    def test_dim4_order(self, rng):
        g = build_gk(spectral_decompose(random_unitary(rng, 4)))
        assert np.max(np.abs(mpow(g, 4) - np.eye(4))) <= 1e-12
        assert np.max(np.abs(mpow(g, 2) - np.eye(4))) > 0.1

    @pytest.mark.parametrize("d", [2, 4, 8])
    def test_cycles_basis(self, rng, d):
        sc = spectral_decompose(random_unitary(rng, d))
        g = build_gk(sc)
        for j in range(d):
            np.testing.assert_allclose(g @ sc.vectors[:, j], sc.vectors[:, (j + 1) % d], atol=1e-12)
        assert unitarity_defect(g) <= 1e-12
        assert np.max(np.abs(mpow(g, d) - np.eye(d))) <= 1e-11

    def test_degenerate_rejected(self):
        sc = SpectralCoin(np.eye(2), np.array([0.0, 0.0]), np.eye(2))
        with pytest.raises(DegenerateSpectrum):
            build_gk(sc)


class TestPowers:
    def test_zero_and_one(self, rng):
        u = random_unitary(rng, 4)
        sc = spectral_decompose(u)
        np.testing.assert_allclose(power_via_spectrum(sc, 0), np.eye(4), atol=1e-12)
        np.testing.assert_allclose(power_via_spectrum(sc, 1), u, atol=1e-10)

    def test_seven(self, rng):
        u = random_unitary(rng, 4)
        assert np.max(np.abs(power_via_spectrum(spectral_decompose(u), 7) - mpow(u, 7))) <= 1e-10

    @pytest.mark.parametrize("d", [2, 4, 8])
    def test_m_power_all(self, rng, d):
        sc = spectral_decompose(random_unitary(rng, d))
        g = build_gk(sc)
        for t in (1, 3, 10):
            ct = mpow(sc.matrix, t)
            for m in range(1, d):
                direct = mpow(ct @ g, m)
                assert np.max(np.abs(closed_form_m_power(sc, t, m) - direct)) <= 1e-9

    def test_m_out_of_range(self, rng):
        sc = spectral_decompose(random_unitary(rng, 4))
        with pytest.raises(ContractError):
            closed_form_m_power(sc, 1, 4)
        with pytest.raises(ContractError):
            closed_form_m_power(sc, 1, 0)

    def test_last_power_then_step_equals_expanded(self, rng):
        sc = spectral_decompose(random_unitary(rng, 4))
        t = 3
        lhs = closed_form_m_power(sc, t, 3) @ power_via_spectrum(sc, t)
        assert np.max(np.abs(lhs - closed_form_full_cycle(sc, t))) <= 1e-9


class TestFullCycle:
    def test_t_zero(self, rng):
        sc = spectral_decompose(random_unitary(rng, 4))
        rep = verify_full_cycle(sc, 0)
        assert rep.phase == pytest.approx(1)
        assert rep.defect <= 1e-12

    @pytest.mark.parametrize("d,t", [(2, 7), (4, 5), (8, 9)])
    def test_defect(self, rng, d, t):
        rep = verify_full_cycle(spectral_decompose(random_unitary(rng, d)), t)
        assert rep.defect <= 1e-9
        assert rep.expanded_defect <= 1e-9
        assert rep.phase_identity_defect <= 1e-12

    def test_rhs_uses_dagger(self, rng):
        sc = spectral_decompose(random_unitary(rng, 4))
        g = build_gk(sc)
        lhs = mpow(sc.matrix @ g, 3) @ sc.matrix
        np.testing.assert_allclose(lhs, np.prod(sc.eigenvalues) * g.conj().T, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from([2, 4, 8]), st.integers(0, 50), st.integers(0, 2**31))
    def test_regrouped_phase_identity(self, d, t, seed):
        w = np.sort(np.random.default_rng(seed).uniform(0, 2 * math.pi, d))
        e = np.exp(1j * w * t)
        full = np.prod(e)
        for j in range(1, d):
            assert abs(regrouped_phase(e, j) - full) <= 1e-12


class TestMomentumEvolve:
    def test_zero_steps(self, rng, hadamard):
        s = WalkerState(LatticeSpec.ring(16), random_state_array(rng, (2, 16)))
        out = momentum_evolve(s, hadamard, 0)
        assert np.max(np.abs(out.amps - s.amps)) <= 1e-14

    def test_hadamard_100(self, hadamard):
        s = WalkerState.localized(LatticeSpec.ring(256), 1, 0)
        a = momentum_evolve(s, hadamard, 100)
        b = evolve(s, hadamard, 100).state
        assert np.max(np.abs(a.amps - b.amps)) <= 1e-8

    def test_midpoint_intervention_second_backend(self, hadamard):
        s = WalkerState.localized(LatticeSpec.ring(256), 1, 0)
        out = momentum_evolve(s, hadamard, 100, InterventionSchedule.single(51, 100), build_g(0, 0))
        assert position_distribution(out)[0] == pytest.approx(1, abs=1e-10)

    @pytest.mark.parametrize("case", range(20))
    def test_backend_equivalence(self, case):
        r = np.random.default_rng(1000 + case)
        n = 1 + case % 2
        lat = LatticeSpec((64,) if n == 1 else (16, 16))
        coin = random_product_coin(r, n)
        inter = random_product_coin(r, n)
        steps = int(r.integers(0, 65 if n == 1 else 33))
        js = sorted(set(int(j) for j in r.integers(1, steps + 1, size=3))) if steps else []
        sched = InterventionSchedule.at(js, steps)
        s = WalkerState(lat, random_state_array(r, (lat.coin_dim, *lat.dims)))
        a = momentum_evolve(s, coin, steps, sched, inter)
        b = evolve(s, coin, steps, sched, inter).state
        assert np.max(np.abs(a.amps - b.amps)) <= 1e-8


class TestProtocol:
    def test_schedule(self):
        s = protocol_schedule(4, 3)
        assert s.total_steps == 16
        assert [j for j, _ in s.entries] == [1, 5, 9, 13]

    def test_n1_hadamard(self, hadamard):
        s = WalkerState.localized(LatticeSpec.ring(64), 1, 0)
        res = run_protocol(s, hadamard, 5)
        assert res.fidelity >= 1 - 1e-9
        assert res.total_steps == 12

    def test_n2_product(self):
        s = WalkerState.localized(LatticeSpec((32, 32)), 0, (0, 0))
        res = run_protocol(s, PRODUCT2, 3)
        assert res.fidelity >= 1 - 1e-9
        assert res.total_steps == 16
        assert res.per_k_defect <= 1e-9
        assert res.phase_spread <= 1e-9

    def test_phase_is_determinant_power(self, rng):
        coin = random_product_coin(rng, 2)
        s = WalkerState(LatticeSpec((8, 8)), random_state_array(rng, (4, 8, 8)))
        res = run_protocol(s, coin, 4)
        assert res.phase == pytest.approx(np.linalg.det(coin.matrix) ** 4, abs=1e-9)
        np.testing.assert_allclose(res.state.amps, res.phase * s.amps, atol=1e-9)

    def test_gauge_independent(self, rng):
        lat = LatticeSpec((8, 8))
        grid = spectral_grid(PRODUCT2, lat)
        s = WalkerState(lat, random_state_array(rng, (4, 8, 8)))
        a = run_protocol(s, PRODUCT2, 2, grid=grid)
        b = run_protocol(s, PRODUCT2, 2, grid=grid.rephased(rng))
        assert np.max(np.abs(a.state.amps - b.state.amps)) <= 1e-9

    def test_grover_rejected(self):
        s = WalkerState.localized(LatticeSpec((8, 8)), 0, (0, 0))
        with pytest.raises(DegenerateSpectrum) as info:
            run_protocol(s, grover_coin(4), 2)
        assert info.value.k is not None

    def test_real_reflection_product_degenerate_at_origin(self):
        coin = tensor_coin([build_coin(CoinParams(math.pi / 3)), build_coin(CoinParams(math.pi / 5))])
        with pytest.raises(DegenerateSpectrum) as info:
            spectral_grid(coin, LatticeSpec((8, 8)))
        assert info.value.k == (0.0, 0.0)

    def test_bad_l(self, hadamard):
        with pytest.raises(ContractError):
            run_protocol(WalkerState.localized(LatticeSpec.ring(8), 0), hadamard, 0)
