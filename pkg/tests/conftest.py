import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def record(name: str, passed: bool, detail: str = "") -> bool:
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_basis(rng, n, l):
    z = rng.standard_normal((n, l)) + 1j * rng.standard_normal((n, l))
    return np.linalg.qr(z)[0]


def explicit_projection_error(ref, w):
    """Oracle: form both N x N projectors and take the squared Frobenius norm."""
    d = ref @ ref.conj().T - w @ w.conj().T
    return float(np.linalg.norm(d, "fro") ** 2)
