"""Diagonal-blockwise-constant matrices and expected two-block SBM solutions.

A DBC matrix ``Z(c1, c2, c3)`` of size ``2m`` has ``c1`` off the diagonal
inside each block, ``c2`` across blocks and ``c3`` on the diagonal.  Its
spectrum is ``(m-1)c1 + c3 + m c2`` on the all-ones vector,
``(m-1)c1 + c3 - m c2`` on the block sign vector and ``c3 - c1`` with
multiplicity ``2m - 2``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import AssumptionError, ParameterError

__all__ = [
    "DbcMatrix",
    "ExpectedCoefficients",
    "dbc_to_dense",
    "dbc_eigen",
    "dbc_from_eigen",
    "dbc_nuclear_norm",
    "dbc_from_dense",
    "geometric_sum",
    "transition_eigenvalues",
    "expected_coefficients",
    "expected_pmi_solution",
    "expected_psd_solution",
    "check_conjecture_scaling",
]


@dataclass(frozen=True)
class DbcMatrix:
    m: int
    c1: float
    c2: float
    c3: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "DbcMatrix":
        d = json.loads(text)
        return cls(int(d["m"]), float(d["c1"]), float(d["c2"]), float(d["c3"]))


def _check_m(m: int) -> None:
    if m < 2:
        raise ParameterError("DBC matrices need m >= 2")


def community_labels(m: int) -> np.ndarray:
    return np.repeat([0, 1], m)


def dbc_to_dense(Z: DbcMatrix) -> np.ndarray:
    _check_m(Z.m)
    y = community_labels(Z.m)
    X = np.where(y[:, None] == y[None, :], Z.c1, Z.c2).astype(float)
    np.fill_diagonal(X, Z.c3)
    return X


def dbc_from_dense(X: np.ndarray) -> tuple[DbcMatrix, float]:
    """Block averages of ``X`` and the largest deviation from them."""
    X = np.asarray(X, dtype=float)
    m = X.shape[0] // 2
    _check_m(m)
    y = community_labels(m)
    same = y[:, None] == y[None, :]
    diag = np.eye(2 * m, dtype=bool)
    within = same & ~diag
    c1, c2, c3 = X[within].mean(), X[~same].mean(), X[diag].mean()
    dev = max(np.abs(X[within] - c1).max(), np.abs(X[~same] - c2).max(),
              np.abs(X[diag] - c3).max())
    return DbcMatrix(m, float(c1), float(c2), float(c3)), float(dev)


def dbc_eigen(Z: DbcMatrix) -> tuple[float, float, float]:
    """Eigenvalues on ``y1 = (1, 1)``, ``y2 = (1, -1)`` and the repeated one."""
    _check_m(Z.m)
    m = Z.m
    base = (m - 1) * Z.c1 + Z.c3
    return base + m * Z.c2, base - m * Z.c2, Z.c3 - Z.c1


def dbc_from_eigen(lam1: float, lam2: float, lam3: float, m: int) -> DbcMatrix:
    _check_m(m)
    return DbcMatrix(
        m,
        (lam1 + lam2 - 2 * lam3) / (2 * m),
        (lam1 - lam2) / (2 * m),
        (lam1 + lam2 + (2 * m - 2) * lam3) / (2 * m),
    )


def dbc_nuclear_norm(Z: DbcMatrix) -> float:
    lam1, lam2, lam3 = dbc_eigen(Z)
    return abs(lam1) + abs(lam2) + (2 * Z.m - 2) * abs(lam3)


def geometric_sum(lam: float, w: int) -> float:
    """``sum_{v=1}^{w} lam^v``."""
    if abs(1 - lam) < 1e-12:
        return float(sum(lam ** v for v in range(1, w + 1)))
    return lam * (1 - lam ** w) / (1 - lam)


def transition_eigenvalues(m: int, a: float, b: float) -> tuple[float, float, float]:
    """Spectrum of ``W = D^{-1} A`` for the expected graph ``A = Z(a, b, 0)``."""
    deg = (m - 1) * a + m * b
    return 1.0, ((m - 1) * a - m * b) / deg, -a / deg


@dataclass(frozen=True)
class ExpectedCoefficients:
    """Ergodic coefficients of the expected graph: ``N+ = Z(alpha1, alpha2, alpha3)``, ``N- = beta``."""

    m: int
    alpha1: float
    alpha2: float
    alpha3: float
    beta: float

    @property
    def alpha13(self) -> float:
        return (self.m - 1) / self.m * self.alpha1 + self.alpha3 / self.m

    @property
    def nu1(self) -> float:
        return float(np.log((self.alpha13 + self.beta) / (self.alpha2 + self.beta)))

    def positive(self) -> DbcMatrix:
        return DbcMatrix(self.m, self.alpha1, self.alpha2, self.alpha3)

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        n = 2 * self.m
        return dbc_to_dense(self.positive()), np.full((n, n), self.beta)


def expected_coefficients(m: int, a: float, b: float, w: int, k: float) -> ExpectedCoefficients:
    _check_m(m)
    if not a > m / (m - 1) * b or b < 0:
        raise AssumptionError(f"need a > m/(m-1)*b >= 0, got a={a}, b={b}, m={m}")
    if w < 1 or k < 1:
        raise AssumptionError("need w >= 1 and k >= 1")
    _, lam2, lam3 = transition_eigenvalues(m, a, b)
    s2 = geometric_sum(lam2, w)
    s3 = geometric_sum(lam3, w)
    c = 1.0 / (4 * m * m)
    return ExpectedCoefficients(
        m,
        c * (w + s2 - 2 * s3),
        c * (w - s2),
        c * (w + s2 + (2 * m - 2) * s3),
        k * w * c,
    )


def expected_pmi_solution(coeffs: ExpectedCoefficients) -> DbcMatrix:
    """Unconstrained (full-rank) optimum ``Z(ln a1/b, ln a2/b, ln a3/b)``."""
    bt = coeffs.beta
    return DbcMatrix(coeffs.m, float(np.log(coeffs.alpha1 / bt)),
                     float(np.log(coeffs.alpha2 / bt)), float(np.log(coeffs.alpha3 / bt)))


def expected_psd_solution(coeffs: ExpectedCoefficients) -> tuple[float, DbcMatrix]:
    """Rank-one PSD optimum ``Z(nu1, -nu1, nu1)`` and ``nu1``."""
    nu1 = coeffs.nu1
    return nu1, DbcMatrix(coeffs.m, nu1, -nu1, nu1)


def check_conjecture_scaling(coeffs: ExpectedCoefficients, nu0: float, solver_config=None) -> dict:
    """Solve the trace-bounded problem at ``nu = nu0 * n`` and compare with ``Z(nu0, -nu0, nu0)``.

    Only a report: the scaled form is conjectured, not proven, when the
    bound is active.
    """
    from .nuclear import NucConfig, solve_nuc

    if not nu0 > 0:
        raise ParameterError("nu0 must be positive")
    n = 2 * coeffs.m
    pos, neg = coeffs.dense()
    cfg = solver_config or NucConfig(nu=nu0 * n)
    if cfg.nu != nu0 * n:
        cfg = cfg.replace(nu=nu0 * n)
    X, trace = solve_nuc(pos, neg, cfg)
    target = dbc_to_dense(DbcMatrix(coeffs.m, nu0, -nu0, nu0))
    dev = float(np.linalg.norm(X - target) / np.linalg.norm(target))
    lam = np.linalg.eigvalsh(X)[::-1]
    return {
        "nu0": nu0,
        "nu1": coeffs.nu1,
        "n": n,
        "relative_deviation": dev,
        "trace": float(np.trace(X)),
        "eigenvalue_ratio": float(lam[1] / lam[0]) if lam[0] > 0 else float("nan"),
        "iterations": len(trace.objective),
        "final_gap": trace.gap[-1] if trace.gap else None,
    }
