"""The shared logistic objective and the SGD embedding solver.

``f(N+, N-, X) = sum_ij N+_ij s(X_ij) + N-_ij s(-X_ij)`` with
``s(t) = ln(1 + exp(-t))``.  Sampled counts (VEC) and ergodic limits
(ErgoVEC) go through exactly the same code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DivergenceError, InputError, ParameterError

__all__ = [
    "logistic_loss",
    "objective_value",
    "objective_gradient",
    "gram_matrix",
    "factorize_gram",
    "SgdConfig",
    "SgdTrace",
    "solve_embeddings_sgd",
]

log = logging.getLogger(__name__)


def _softplus(x: np.ndarray) -> np.ndarray:
    # ln(1 + e^x) = max(x, 0) + ln(1 + e^-|x|); cheaper than logaddexp
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def logistic_loss(t):
    """``ln(1 + exp(-t))``, stable for large ``|t|``."""
    return _softplus(-np.asarray(t, dtype=float))


def _check(pos, neg, X):
    pos, neg, X = (np.asarray(a, dtype=float) for a in (pos, neg, X))
    if not (pos.shape == neg.shape == X.shape):
        raise InputError(f"shape mismatch: {pos.shape}, {neg.shape}, {X.shape}")
    return pos, neg, X


def objective_value(pos, neg, X) -> float:
    pos, neg, X = _check(pos, neg, X)
    if not np.all(np.isfinite(X)):
        raise InputError("X must be finite")
    # s(X) = softplus(-X) = softplus(X) - X and s(-X) = softplus(X)
    return float(np.sum((pos + neg) * _softplus(X)) - np.sum(pos * X))


def objective_gradient(pos, neg, X) -> np.ndarray:
    """Entrywise derivative ``-N+ / (1 + e^X) + N- / (1 + e^-X)``."""
    pos, neg, X = _check(pos, neg, X)
    # expit(-X) = 1 - expit(X)
    return (pos + neg) * expit(X) - pos


def gram_matrix(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    return U @ U.T


def factorize_gram(X, d: int) -> np.ndarray:
    """Embedding ``U`` (n x d) whose Gram matrix is the best rank-``d`` PSD fit of ``X``.

    Raises
    ------
    InputError
        If ``X`` has an eigenvalue below ``-1e-6 * ||X||_2``; project it with
        :func:`ergonode.ergodic.project_psd_rank` first.
    """
    X = np.asarray(X, dtype=float)
    if d < 1:
        raise ParameterError("d must be >= 1")
    if np.max(np.abs(X - X.T), initial=0.0) > 1e-9 * max(1.0, np.abs(X).max(initial=0.0)):
        raise InputError("Gram matrix must be symmetric")
    lam, V = np.linalg.eigh((X + X.T) / 2)
    scale = np.abs(lam).max(initial=0.0)
    if lam.size and lam[0] < -1e-6 * scale:
        raise InputError(
            f"matrix is not PSD (min eigenvalue {lam[0]:.3g}); use project_psd_rank first")
    lam, V = lam[::-1][:d], V[:, ::-1][:, :d]
    U = V * np.sqrt(np.clip(lam, 0.0, None))
    if U.shape[1] < d:
        U = np.hstack([U, np.zeros((U.shape[0], d - U.shape[1]))])
    return U


@dataclass
class SgdConfig:
    """Adam-based SGD settings.

    The default learning rate suits limit coefficients on dense (linear
    regime) graphs; sampled counts and sparse graphs want smaller steps, see
    :func:`ergonode.pipeline.default_learning_rate`.
    """

    d: int = 2
    learning_rate: float = 0.02
    epochs: int = 400
    batch_size: int = 128
    init_scale: float = 0.1
    seed: int = 0
    tol_objective: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-7
    warmup_fraction: float = 0.1  # the stopping rule is ignored for this share of epochs

    def __post_init__(self):
        if self.d < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("d, epochs and batch_size must be positive")
        if not 0 <= self.warmup_fraction <= 1:
            raise ParameterError("warmup_fraction must lie in [0, 1]")
        if not self.learning_rate > 0 or not self.init_scale > 0:
            raise ParameterError("learning_rate and init_scale must be positive")


@dataclass
class SgdTrace:
    objective: list = field(default_factory=list)
    procrustes_change: list = field(default_factory=list)

    def rows(self):
        for e, (f, c) in enumerate(zip(self.objective, self.procrustes_change), start=1):
            yield e, f, c


def _relative_procrustes_change(prev: np.ndarray, cur: np.ndarray) -> float:
    # orthogonal P minimizing ||prev - cur P||
    a, _, bt = np.linalg.svd(cur.T @ prev)
    denom = np.linalg.norm(prev)
    return float(np.linalg.norm(prev - cur @ (a @ bt)) / denom) if denom else 0.0


def solve_embeddings_sgd(pos, neg, cfg: SgdConfig | None = None,
                         init: np.ndarray | None = None) -> tuple[np.ndarray, SgdTrace]:
    """Minimize ``f(N+, N-, U U^T)`` over ``U`` with minibatch Adam.

    Each pair with nonzero ``N+_ij`` is a positive example of weight
    ``N+_ij`` and each pair with nonzero ``N-_ij`` a negative example of
    weight ``N-_ij``.  An epoch is one shuffled pass over all examples.

    Returns
    -------
    U : ndarray, shape (n, d)
    trace : SgdTrace
        Objective after every epoch and the relative Procrustes change of
        ``U`` between consecutive epochs.
    """
    cfg = cfg or SgdConfig()
    pos = np.asarray(pos, dtype=float)
    neg = np.asarray(neg, dtype=float)
    if pos.shape != neg.shape or pos.ndim != 2 or pos.shape[0] != pos.shape[1]:
        raise InputError("coefficient matrices must be square and of equal shape")
    if np.any(pos < 0) or np.any(neg < 0):
        raise InputError("coefficients must be nonnegative")
    n = pos.shape[0]
    rng = np.random.default_rng(cfg.seed)
    if init is None:
        U = rng.normal(0.0, cfg.init_scale / np.sqrt(cfg.d), size=(n, cfg.d))
    else:
        U = np.array(init, dtype=float)

    pi, pj = np.nonzero(pos)
    ni, nj = np.nonzero(neg)
    I = np.concatenate([pi, ni])
    J = np.concatenate([pj, nj])
    wt = np.concatenate([pos[pi, pj], neg[ni, nj]])
    sign = np.concatenate([np.ones(pi.size), -np.ones(ni.size)])
    trace = SgdTrace()
    if wt.size == 0:
        return U, trace
    # rescale to unit mean weight; the minimizer is unchanged
    wt = wt / wt.mean()

    m1 = np.zeros_like(U)
    m2 = np.zeros_like(U)
    step = 0
    prev_f = objective_value(pos, neg, gram_matrix(U))
    prev_U = U.copy()
    bs = cfg.batch_size
    warmup = int(np.ceil(cfg.warmup_fraction * cfg.epochs))
    for epoch in range(cfg.epochs):
        order = rng.permutation(wt.size)
        # overflow is detected right after the epoch and reported as divergence
        with np.errstate(over="ignore", invalid="ignore"):
            for lo in range(0, order.size, bs):
                b = order[lo:lo + bs]
                i, j, s, w = I[b], J[b], sign[b], wt[b]
                x = np.einsum("bk,bk->b", U[i], U[j])
                # d/dx of w * s(s_b * x)
                gx = -(s * w * expit(-s * x)) / b.size
                grad = np.zeros_like(U)
                np.add.at(grad, i, gx[:, None] * U[j])
                np.add.at(grad, j, gx[:, None] * U[i])
                step += 1
                m1 = cfg.beta1 * m1 + (1 - cfg.beta1) * grad
                m2 = cfg.beta2 * m2 + (1 - cfg.beta2) * grad * grad
                lr = cfg.learning_rate * np.sqrt(1 - cfg.beta2 ** step) / (1 - cfg.beta1 ** step)
                U -= lr * m1 / (np.sqrt(m2) + cfg.adam_eps)
        if not np.all(np.isfinite(U)):
            raise DivergenceError(
                f"SGD diverged at epoch {epoch + 1}; lower learning_rate={cfg.learning_rate}")
        f = objective_value(pos, neg, gram_matrix(U))
        if not np.isfinite(f):
            raise DivergenceError(
                f"objective overflowed at epoch {epoch + 1}; lower learning_rate={cfg.learning_rate}")
        trace.objective.append(f)
        trace.procrustes_change.append(_relative_procrustes_change(prev_U, U))
        prev_U = U.copy()
        # near the small random init the objective sits on a plateau, so the
        # relative-change rule only applies once the warm-up epochs are done
        if epoch + 1 >= warmup and abs(prev_f - f) <= cfg.tol_objective * abs(prev_f):
            log.debug("objective converged after %d epochs", epoch + 1)
            break
        prev_f = f
    return U, trace
