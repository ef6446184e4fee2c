"""Closed-form limits of normalized skip-bigram counts, PMI, and PSD projection.

The positive limit is ``pi_i sum_v alpha_v (W^v)_ij`` restricted to the
component of ``i``; the negative limit is ``k pi_i pi_j sum_v alpha_v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConnectivityError, EmptyInputError, InputError, ParameterError
from .graph import Graph, connected_components, stationary_distribution, transition_matrix
from .walks import HardWindow, WeightSpec, gap_weights

__all__ = [
    "LimitCoefficients",
    "PmiMatrix",
    "Geometric",
    "InverseFactorial",
    "resolve_weights",
    "ergodic_limits",
    "weighted_ergodic_limits",
    "double_limits",
    "finite_r_limits",
    "empirical_pmi",
    "gram_ergo_pmi",
    "clip_pmi",
    "project_psd_rank",
    "DEFAULT_PMI_FLOOR",
]

TAIL_TOL = 1e-12
DEFAULT_PMI_FLOOR = -30.0


@dataclass(frozen=True)
class LimitCoefficients:
    positive: np.ndarray
    negative: np.ndarray
    regime: str = "ergodic"  # "ergodic", "finite_r" or "double"
    length: int | None = None


@dataclass(frozen=True)
class PmiMatrix:
    """PMI-type matrix where ``-inf`` marks pairs that never co-occur."""

    values: np.ndarray

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)


@dataclass(frozen=True)
class Geometric:
    """``alpha_v = scale * rho**v`` for ``v >= 1``."""

    rho: float
    scale: float = 1.0

    def truncate(self, tol: float = TAIL_TOL) -> np.ndarray:
        if not 0 <= self.rho < 1:
            raise ParameterError("geometric weights need 0 <= rho < 1")
        if self.rho == 0:
            return np.array([0.0])
        V = 1
        # tail sum_{v>V} |scale| rho^v = |scale| rho^(V+1) / (1 - rho)
        while abs(self.scale) * self.rho ** (V + 1) / (1 - self.rho) >= tol:
            V += 1
        return self.scale * self.rho ** np.arange(1, V + 1)


@dataclass(frozen=True)
class InverseFactorial:
    """``alpha_v = 1 / v!``; the positive limit becomes ``pi_i (exp W - I)_ij``."""

    def truncate(self, tol: float = TAIL_TOL) -> np.ndarray:
        alpha = [1.0]
        # tail after V terms is below (1/(V+1)!) * (1 + 1/(V+2) + ...) < 2/(V+1)!
        while 2.0 / math.factorial(len(alpha) + 1) >= tol:
            alpha.append(1.0 / math.factorial(len(alpha) + 1))
        return np.array(alpha)


WeightFamily = Union[WeightSpec, Geometric, InverseFactorial]


def resolve_weights(spec: WeightFamily, tol: float = TAIL_TOL) -> np.ndarray:
    if isinstance(spec, (Geometric, InverseFactorial)):
        return spec.truncate(tol)
    return gap_weights(spec)


def _power_sum(W: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """``sum_v alpha_v W^v`` by iterated multiplication."""
    out = np.zeros_like(W)
    P = np.eye(W.shape[0])
    for a in alpha:
        P = P @ W
        if a:
            out += a * P
    return out


def _limits(g: Graph, alpha: np.ndarray, k: float, regime: str) -> LimitCoefficients:
    if k < 0:
        raise ParameterError("k must be >= 0")
    W = transition_matrix(g)
    pi = stationary_distribution(g)
    # W is block diagonal over components, so W^v never crosses components
    pos = pi[:, None] * _power_sum(W, alpha)
    neg = k * alpha.sum() * np.outer(pi, pi)
    return LimitCoefficients(pos, neg, regime)


def ergodic_limits(g: Graph, w: int, k: float) -> LimitCoefficients:
    """Hard-window limits; valid for disconnected graphs as well."""
    if w < 1:
        raise ParameterError("w must be >= 1")
    return _limits(g, HardWindow(w).weights(), k, "ergodic")


def _require_connected(g: Graph) -> None:
    comps = connected_components(g).count
    if comps != 1:
        raise ConnectivityError(f"graph must be connected, found {comps} components")


def weighted_ergodic_limits(g: Graph, weights: WeightFamily, k: float,
                            tol: float = TAIL_TOL) -> LimitCoefficients:
    """Walk-distance-weighted limits as the walk length grows."""
    _require_connected(g)
    return _limits(g, resolve_weights(weights, tol), k, "ergodic")


def double_limits(g: Graph, weights: WeightFamily, k: float,
                  tol: float = TAIL_TOL) -> LimitCoefficients:
    """Limit in ``r`` then ``l`` (either order); coincides with the large-``l`` limit."""
    lim = weighted_ergodic_limits(g, weights, k, tol)
    return LimitCoefficients(lim.positive, lim.negative, "double")


def finite_r_limits(g: Graph, weights: WeightFamily, k: float, length: int,
                    tol: float = TAIL_TOL) -> LimitCoefficients:
    """Limits as ``r`` grows with the walk length fixed at ``length`` nodes.

    Walks start once from every node, so occupation at step ``s`` is
    ``1^T W^(s-1) / n``; gaps ``v >= length`` contribute nothing.
    """
    if length < 2:
        raise ParameterError("length must be >= 2")
    if k < 0:
        raise ParameterError("k must be >= 0")
    _require_connected(g)
    alpha = resolve_weights(weights, tol)
    W = transition_matrix(g)
    n = g.n
    # occ[t] = sum_{s=0}^{t-1} 1^T W^s, i.e. total visits to each node in the first t steps
    occ = np.zeros((length + 1, n))
    row = np.ones(n)
    for t in range(1, length + 1):
        occ[t] = occ[t - 1] + row
        row = row @ W
    pos = np.zeros((n, n))
    visits = np.zeros(n)
    P = np.eye(n)
    for v, a in enumerate(alpha, start=1):
        if v >= length:
            break
        P = P @ W
        if a:
            pos += a * occ[length - v][:, None] * P
            visits += a * occ[length - v]
    pos /= length * n
    pi_len = occ[length] / (length * n)
    neg = k * np.outer(visits, pi_len) / (length * n)
    return LimitCoefficients(pos, neg, "finite_r", length)


def empirical_pmi(positive: np.ndarray, w: int | None = None, r: int | None = None,
                  length: int | None = None) -> PmiMatrix:
    """PMI of the empirical positive-pair distribution.

    The joint law is ``positive / |D+|``.  Hard-window counts have
    ``|D+| = r n (l w - w(w+1)/2)``, which equals ``positive.sum()``; when
    ``(w, r, length)`` are given that identity is checked.
    """
    N = np.asarray(positive, dtype=float)
    if not np.any(N > 0):
        raise EmptyInputError("positive counts are all zero")
    total = N.sum()
    if None not in (w, r, length):
        expected = r * N.shape[0] * (length * w - w * (w + 1) / 2)
        if abs(total - expected) > 1e-9 * expected:
            raise InputError(f"counts sum to {total:g}, expected {expected:g} for "
                             f"w={w}, r={r}, length={length}")
    joint = N / total
    p1 = joint.sum(axis=1)
    p2 = joint.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.log(joint) - np.log(np.outer(p1, p2))
    vals[joint == 0] = -np.inf
    return PmiMatrix(vals)


def gram_ergo_pmi(limits: LimitCoefficients) -> PmiMatrix:
    """Unconstrained minimizer ``ln(N+/N-)`` of the Gram objective."""
    pos, neg = limits.positive, limits.negative
    if np.any(neg <= 0):
        raise InputError("negative coefficients must be strictly positive")
    with np.errstate(divide="ignore"):
        vals = np.where(pos > 0, np.log(np.where(pos > 0, pos, 1.0) / neg), -np.inf)
    return PmiMatrix(vals)


def clip_pmi(pmi: PmiMatrix | np.ndarray, floor: float = DEFAULT_PMI_FLOOR) -> np.ndarray:
    vals = pmi.values if isinstance(pmi, PmiMatrix) else np.asarray(pmi, dtype=float)
    return np.maximum(vals, floor)


def project_psd_rank(X: np.ndarray, d: int | None = None) -> np.ndarray:
    """Frobenius-nearest PSD matrix of rank at most ``d`` (``None``: no rank limit)."""
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise InputError("matrix has non-finite entries; clip -inf first")
    if np.max(np.abs(X - X.T), initial=0.0) > 1e-9:
        raise InputError("matrix is not symmetric")
    lam, V = np.linalg.eigh((X + X.T) / 2)
    if d is not None:
        if d < 0:
            raise ParameterError("rank must be nonnegative")
        lam[: max(lam.size - d, 0)] = 0.0
    lam = np.clip(lam, 0.0, None)
    return (V * lam) @ V.T
