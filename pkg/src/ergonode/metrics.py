"""Embedding post-processing and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.linalg import orthogonal_procrustes

from .errors import DegenerateNodeError, InputError, NumericalError, ParameterError
from .graph import Graph, degrees

__all__ = [
    "ClusterStats",
    "Ellipse",
    "svd_coordinates",
    "procrustes_align",
    "cluster_stats",
    "snr_1d",
    "gram_distance",
    "chi2_quantile",
    "gaussian_ellipse",
    "spectral_embedding",
]


def _as_embedding(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2:
        raise InputError("embedding must be a 2-D array")
    if not np.all(np.isfinite(U)):
        raise InputError("embedding has non-finite entries")
    return U


def svd_coordinates(U) -> np.ndarray:
    """Rotate ``U`` by its right singular vectors so the columns become orthogonal.

    Column ``j`` of the result has norm equal to the ``j``-th singular value.
    Column signs are fixed so that each column's largest-magnitude entry is
    positive.
    """
    U = _as_embedding(U)
    _, _, Vt = np.linalg.svd(U, full_matrices=False)
    C = U @ Vt.T
    if C.shape[1] < U.shape[1]:
        C = np.hstack([C, np.zeros((U.shape[0], U.shape[1] - C.shape[1]))])
    for j in range(C.shape[1]):
        col = C[:, j]
        if col.size and col[np.argmax(np.abs(col))] < 0:
            C[:, j] = -col
    return C


def procrustes_align(U1, U2) -> tuple[np.ndarray, float]:
    """Orthogonal ``P`` minimizing ``||U1 - U2 P||_F`` and the minimized distance."""
    U1 = _as_embedding(U1)
    U2 = _as_embedding(U2)
    if U1.shape != U2.shape:
        raise InputError(f"shape mismatch: {U1.shape} vs {U2.shape}")
    P, _ = orthogonal_procrustes(U2, U1)
    return P, float(np.linalg.norm(U1 - U2 @ P))


@dataclass(frozen=True)
class ClusterStats:
    """Per-community means, population covariances and projected variances ``eta^2``."""

    means: np.ndarray  # (2, d)
    covariances: np.ndarray  # (2, d, d)
    projected: np.ndarray  # (2,)

    @property
    def delta(self) -> np.ndarray:
        return self.means[0] - self.means[1]


def _two_groups(U: np.ndarray, labels) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    if labels.shape != (U.shape[0],):
        raise InputError("labels must have one entry per row of U")
    values = np.unique(labels)
    if values.size != 2:
        raise InputError(f"need exactly 2 communities, found {values.size}")
    groups = [U[labels == v] for v in values]
    if min(len(g) for g in groups) < 2:
        raise InputError("every community needs at least 2 members")
    return groups[0], groups[1]


def cluster_stats(U, labels) -> ClusterStats:
    U = _as_embedding(U)
    g1, g2 = _two_groups(U, labels)
    means = np.stack([g1.mean(axis=0), g2.mean(axis=0)])
    covs = np.stack([np.cov(g, rowvar=False, bias=True).reshape(U.shape[1], U.shape[1])
                     for g in (g1, g2)])
    delta = means[0] - means[1]
    eta = np.array([delta @ K @ delta for K in covs])
    return ClusterStats(means, covs, eta)


def snr_1d(U, labels, mode: str = "formula") -> float:
    """Separation of two communities along the line joining their means.

    ``mode="formula"`` evaluates ``||D||^2 / (0.5 (eta1^2 + eta2^2))`` with
    ``eta_i^2 = D^T K_i D``; ``mode="projection_normalized"`` divides each
    ``eta_i^2`` by ``||D||^2`` first, which is the variance of the points
    projected on the unit direction of ``D``.

    Returns ``inf`` when the means differ but both projected variances vanish
    and ``0.0`` when the means coincide but the spread does not.

    Raises
    ------
    NumericalError
        When both numerator and denominator vanish.
    """
    if mode not in ("formula", "projection_normalized"):
        raise ParameterError(f"unknown mode {mode!r}")
    st = cluster_stats(U, labels)
    num = float(st.delta @ st.delta)
    eta = st.projected
    if mode == "projection_normalized" and num > 0:
        eta = eta / num
    den = 0.5 * float(eta.sum())
    # eta is quadratic in D, so compare against ||D||^4 (or ||D||^2 when normalized)
    scale = num * num if mode == "formula" else num
    if num == 0:
        spread = float(np.trace(st.covariances[0]) + np.trace(st.covariances[1]))
        if spread > 0:
            return 0.0
        raise NumericalError("SNR-1D is 0/0: identical means and zero spread")
    if den <= 1e-12 * scale:
        return float("inf")
    return num / den


def gram_distance(U1, U2, normalized: bool = False) -> float:
    """``||U1 U1^T - U2 U2^T||_F``, optionally over ``max`` of the two Gram norms."""
    U1 = _as_embedding(U1)
    U2 = _as_embedding(U2)
    if U1.shape[0] != U2.shape[0]:
        raise InputError("embeddings must have the same number of rows")
    G1, G2 = U1 @ U1.T, U2 @ U2.T
    raw = float(np.linalg.norm(G1 - G2))
    if not normalized:
        return raw
    denom = max(np.linalg.norm(G1), np.linalg.norm(G2))
    if denom == 0:
        raise NumericalError("normalized Gram distance undefined for two zero embeddings")
    return raw / float(denom)


def chi2_quantile(confidence: float, dof: int = 2) -> float:
    """Chi-square quantile, the squared Mahalanobis radius of a ``confidence`` ellipse."""
    if not 0 < confidence < 1:
        raise ParameterError("confidence must lie in (0, 1)")
    return float(stats.chi2.ppf(confidence, dof))


@dataclass(frozen=True)
class Ellipse:
    """Confidence ellipse ``(x - center)^T covariance^{-1} (x - center) <= scale``."""

    center: np.ndarray
    covariance: np.ndarray
    scale: float
    degenerate: bool

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "covariance": self.covariance.tolist(),
                "scale": self.scale, "degenerate": self.degenerate}


def gaussian_ellipse(points, confidence: float = 0.95) -> Ellipse:
    """Maximum-likelihood Gaussian fit of 2-D points with its confidence region."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise InputError("points must have shape (k, 2)")
    if P.shape[0] < 3:
        raise InputError("need at least 3 points")
    center = P.mean(axis=0)
    cov = np.cov(P, rowvar=False, bias=True)
    lam = np.linalg.eigvalsh(cov)
    # compare with the coordinate scale too, so point masses count as degenerate
    scale = max(lam[-1], float(np.mean(P * P)), 1e-300)
    degenerate = bool(lam[0] <= 1e-12 * scale)
    return Ellipse(center, cov, chi2_quantile(confidence, 2), degenerate)


def spectral_embedding(g: Graph, d: int) -> np.ndarray:
    """Top-``d`` eigenvectors of ``D^{-1/2} A D^{-1/2}`` scaled by ``sqrt(n)``.

    Each column's first coordinate above ``1e-12`` in magnitude is made positive.
    """
    if not 1 <= d <= g.n:
        raise ParameterError(f"need 1 <= d <= n, got d={d}")
    deg = degrees(g)
    if np.any(deg <= 0):
        raise DegenerateNodeError("spectral embedding needs positive degrees")
    s = 1.0 / np.sqrt(deg)
    M = s[:, None] * g.adjacency * s[None, :]
    _, V = np.linalg.eigh((M + M.T) / 2)
    U = V[:, ::-1][:, :d] * np.sqrt(g.n)
    for j in range(d):
        nz = np.flatnonzero(np.abs(U[:, j]) > 1e-12)
        if nz.size and U[nz[0], j] < 0:
            U[:, j] = -U[:, j]
    return U
