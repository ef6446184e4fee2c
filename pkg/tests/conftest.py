import numpy as np
import pytest

from ergonode import Graph


def single_edge() -> Graph:
    return Graph(np.array([[0.0, 1.0], [1.0, 0.0]]))


def triangle() -> Graph:
    return Graph(np.ones((3, 3)) - np.eye(3))


def random_connected(n: int, rng: np.random.Generator, density: float = 0.4) -> Graph:
    """Random weighted graph made connected by a spanning path."""
    A = rng.uniform(0.1, 1.0, (n, n)) * (rng.random((n, n)) < density)
    A = np.triu(A, 1)
    for i in range(n - 1):
        if A[i, i + 1] == 0:
            A[i, i + 1] = rng.uniform(0.1, 1.0)
    return Graph(A + A.T)


def random_coefficients(n: int, rng: np.random.Generator, low=0.1, high=1.0):
    P = rng.uniform(low, high, (n, n))
    N = rng.uniform(low, high, (n, n))
    return (P + P.T) / 2, (N + N.T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _project_spectrum(lam: np.ndarray, nu: float) -> np.ndarray:
    """Euclidean projection of a spectrum onto {x >= 0, sum x <= nu} by sorting."""
    x = np.clip(lam, 0.0, None)
    if x.sum() <= nu:
        return x
    u = np.sort(lam)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, u.size + 1)
    rho = np.nonzero(u - (css - nu) / idx > 0)[0][-1]
    theta = (css[rho] - nu) / (rho + 1)
    return np.clip(lam - theta, 0.0, None)


def projected_gradient_oracle(pos, neg, nu, iters=20000):
    """Accelerated projected gradient on {X PSD, tr X <= nu}, independent of the package."""
    from scipy.special import expit

    def grad(X):
        return (pos + neg) * expit(X) - pos

    def proj(X):
        lam, V = np.linalg.eigh((X + X.T) / 2)
        return (V * _project_spectrum(lam, nu)) @ V.T

    step = 4.0 / np.max(pos + neg)
    X = Y = np.zeros_like(pos)
    t = 1.0
    for _ in range(iters):
        X_new = proj(Y - step * grad(Y))
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        Y = X_new + (t - 1) / t_new * (X_new - X)
        X, t = X_new, t_new
    f = float(np.sum(pos * np.logaddexp(0, -X) + neg * np.logaddexp(0, X)))
    return X, f


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(name: str, ok: bool, detail: str) -> None:
        line = f"{name}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
