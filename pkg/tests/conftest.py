import numpy as np
import pytest

from hybridscm.array_model import ArrayConfig

_ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_report():
    return _ACCEPTANCE_LINES


def random_hermitian_toeplitz(rng, P):
    """Hermitian Toeplitz ``P x P`` matrix from random lags (lag 0 real)."""
    pos = rng.standard_normal(P) + 1j * rng.standard_normal(P)
    pos[0] = pos[0].real
    idx = np.arange(P)[:, None] - np.arange(P)[None, :]
    return np.where(idx >= 0, pos[np.abs(idx)], pos[np.abs(idx)].conj())


def brute_steering(M, N, n, theta_deg, d=0.5):
    """Steering entries evaluated one at a time from the defining formula."""
    P = M // N
    s = np.sin(theta_deg * np.pi / 180.0)
    return np.array([complex(np.cos(2 * np.pi * d * s * (n * P + m)), np.sin(2 * np.pi * d * s * (n * P + m)))
                     for m in range(P)])


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def small_cfg():
    return ArrayConfig(4, 2)
