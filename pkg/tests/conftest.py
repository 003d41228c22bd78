import math

import numpy as np
import pytest
import scipy.linalg

from qwrev.coinspace import CoinParams, build_coin, explicit_coin, tensor_coin

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def random_state_array(rng, shape):
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return v / np.linalg.norm(v)


def random_unitary(rng, n):
    """exp(iH) for a random Hermitian H; independent of the package's solvers."""
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = 0.5 * (x + x.conj().T)
    return scipy.linalg.expm(1j * h)


def random_params(rng):
    return CoinParams(rng.uniform(0, 2 * math.pi), rng.uniform(0, math.pi), rng.uniform(0, math.pi))


def random_product_coin(rng, n):
    return tensor_coin([explicit_coin(random_unitary(rng, 2), "U2") for _ in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def hadamard():
    return build_coin(CoinParams(math.pi / 4))


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((label, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
