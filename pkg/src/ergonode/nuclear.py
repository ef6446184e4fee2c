"""Frank-Wolfe solver for the logistic objective over ``{X PSD, tr X <= nu}``.

The linear minimization oracle picks between the atoms ``nu v v^T`` (``v``
the top eigenvector of the negative gradient) and ``0``; their convex hull is
exactly the feasible set, which handles the inequality without penalties.
The eigenvector comes from restarted Lanczos by default; block power
iteration is available but stalls when the top of the spectrum is clustered.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .ergodic import DEFAULT_PMI_FLOOR, LimitCoefficients, clip_pmi, gram_ergo_pmi, project_psd_rank
from .errors import InputError, NumericalError, ParameterError
from .objective import objective_gradient, objective_value

__all__ = ["NucConfig", "NucTrace", "top_eigenpair", "top_eigenpair_lanczos",
           "frank_wolfe_atom", "solve_nuc",
           "project_trace_simplex"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NucConfig:
    nu: float
    max_iter: int = 1000
    gap_tol: Optional[float] = None  # None: 1e-7 * f(initial iterate)
    eig_tol: float = 1e-9
    init: str = "scaled_pmi"  # or "zero"
    step: str = "exact"  # or "fixed" for the 2/(t+2) schedule
    seed: int = 0
    pmi_floor: float = DEFAULT_PMI_FLOOR
    power_max_iter: int = 5000
    line_search_iter: int = 60
    eig_method: str = "lanczos"  # or "power" (block power iteration)
    correction_steps: int = 20  # projected-gradient steps on range(X) after each FW step; 0 = pure FW

    def __post_init__(self):
        if not self.nu >= 0:
            raise ParameterError(f"nu must be nonnegative, got {self.nu}")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.init not in ("zero", "scaled_pmi"):
            raise ParameterError(f"unknown init {self.init!r}")
        if self.eig_method not in ("lanczos", "power"):
            raise ParameterError(f"unknown eig_method {self.eig_method!r}")
        if self.step not in ("exact", "fixed"):
            raise ParameterError(f"unknown step rule {self.step!r}")

    def replace(self, **changes) -> "NucConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class NucTrace:
    objective: list = field(default_factory=list)
    gap: list = field(default_factory=list)
    trace_norm: list = field(default_factory=list)

    def rows(self):
        yield from zip(range(len(self.objective)), self.objective, self.gap, self.trace_norm)


EIG_BLOCK = 8


def top_eigenpair(M: np.ndarray, v0: np.ndarray, tol: float = 1e-9, max_iter: int = 5000,
                  seed: int = 0) -> tuple[float, np.ndarray, np.ndarray]:
    """Largest algebraic eigenpair of symmetric ``M`` by shifted block power iteration.

    A block of up to ``EIG_BLOCK`` vectors is iterated with a Rayleigh-Ritz
    step, so nearly tied top eigenvalues (typical close to a rank > 1
    optimum) do not stall convergence.  ``v0`` is a start vector or a start
    block.  Stops once the top Ritz value changes by at most ``tol`` times
    the spectral scale; if it has not after half the budget the non-leading
    columns are redrawn from ``seed``.

    Returns
    -------
    lam, v, block
        Top Ritz value, its unit vector and the final block (a warm start).
    """
    n = M.shape[0]
    shift = np.abs(M).sum(axis=1).max(initial=0.0)  # Gershgorin bound on ||M||
    rng = np.random.default_rng(seed)
    V = np.asarray(v0, dtype=float).reshape(n, -1)
    b = min(n, EIG_BLOCK)
    if V.shape[1] < b:
        V = np.hstack([V, rng.standard_normal((n, b - V.shape[1]))])
    V = V[:, :b]
    if shift == 0:
        v = V[:, 0] / np.linalg.norm(V[:, 0])
        return 0.0, v, V
    B = M + shift * np.eye(n)
    V, _ = np.linalg.qr(V)
    lam = -np.inf
    for it in range(max_iter):
        V, _ = np.linalg.qr(B @ V)
        theta, Y = np.linalg.eigh(V.T @ M @ V)
        V = V @ Y[:, ::-1]
        new = float(theta[-1])
        if abs(new - lam) <= tol * shift:
            return new, V[:, 0], V
        lam = new
        if it == max_iter // 2:
            V[:, 1:] = rng.standard_normal((n, b - 1))
    raise NumericalError(f"power iteration did not converge in {max_iter} iterations")


DENSE_EIG_MAX_N = 64


def top_eigenpair_lanczos(M: np.ndarray, v0: np.ndarray, tol: float = 1e-9,
                          max_iter: int = 5000) -> tuple[float, np.ndarray, np.ndarray]:
    """Largest algebraic eigenpair of symmetric ``M`` by restarted Lanczos.

    Small matrices are diagonalized densely.  Same return convention as
    :func:`top_eigenpair`; the block is the single eigenvector.
    """
    n = M.shape[0]
    if n <= DENSE_EIG_MAX_N:
        lam, V = np.linalg.eigh(M)
        return float(lam[-1]), V[:, -1], V[:, -1:]
    start = np.asarray(v0, dtype=float).reshape(n, -1)[:, 0]
    try:
        lam, V = eigsh(M, k=1, which="LA", v0=start, tol=tol, maxiter=max_iter,
                       ncv=min(n, 40))
    except ArpackNoConvergence as exc:
        raise NumericalError(f"Lanczos did not converge in {max_iter} restarts") from exc
    return float(lam[0]), V[:, 0], V


def frank_wolfe_atom(G: np.ndarray, nu: float, v0: Optional[np.ndarray] = None,
                     tol: float = 1e-9, max_iter: int = 5000, seed: int = 0,
                     method: str = "lanczos") -> tuple[np.ndarray, np.ndarray]:
    """Minimizer of ``<G, S>`` over ``{S PSD, tr S <= nu}``.

    Returns the atom and the eigenvector block (a warm start for the next call).
    """
    G = (G + G.T) / 2
    n = G.shape[0]
    if v0 is None:
        v0 = _initial_vector(n, seed)
    if method == "power":
        lam, v, block = top_eigenpair(-G, v0, tol, max_iter, seed)
    else:
        lam, v, block = top_eigenpair_lanczos(-G, v0, tol, max_iter)
    if lam <= 0 or nu == 0:
        return np.zeros_like(G), block
    return nu * np.outer(v, v), block


def _initial_vector(n: int, seed: int) -> np.ndarray:
    # all-ones is orthogonal to the community sign vector; perturb it
    rng = np.random.default_rng(seed)
    v = np.ones(n) / np.sqrt(n) + 0.1 * rng.standard_normal(n) / np.sqrt(n)
    return v / np.linalg.norm(v)


def _line_search(pos, neg, X, D, iters: int) -> float:
    """Bisection on ``phi'(g) = <grad f(X + g D), D>`` over ``[0, 1]``."""
    # grad f = (N+ + N-) expit(X) - N+, so phi'(g) = <(N+ + N-) D, expit(X + g D)> - <N+, D>
    total_d = ((pos + neg) * D).ravel()
    offset = float(np.sum(pos * D))
    x, d = X.ravel(), D.ravel()

    def slope(g):
        return float(total_d @ expit(x + g * d)) - offset

    if slope(1.0) <= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo


def project_trace_simplex(X: np.ndarray, nu: float) -> np.ndarray:
    """Euclidean projection onto ``{X PSD, tr X <= nu}``."""
    lam, V = np.linalg.eigh((X + X.T) / 2)
    lam = np.clip(lam, 0.0, None)
    if lam.sum() > nu:
        # project the spectrum onto the capped simplex {l >= 0, sum l = nu}
        s = np.sort(lam)[::-1]
        css = np.cumsum(s) - nu
        idx = np.arange(1, s.size + 1)
        rho = np.nonzero(s - css / idx > 0)[0][-1]
        lam = np.clip(lam - css[rho] / (rho + 1), 0.0, None)
    return (V * lam) @ V.T


def _range_correction(pos, neg, X, nu, steps, f, direction=None):
    """Projected-gradient descent on ``X = Q S Q^T`` with ``Q`` spanning range(X).

    ``direction`` (the latest atom vector) is always added to ``Q`` so a
    short Frank-Wolfe step cannot hide it below the rank cutoff.

    Steps start from the Barzilai-Borwein length and backtrack until the
    Armijo condition holds; ``1/L`` with ``L = max(N+ + N-) / 4`` always
    satisfies it, so every accepted step keeps ``X`` feasible and ``f``
    non-increasing.
    """
    if steps <= 0:
        return X, f
    lam, V = np.linalg.eigh(X)
    keep = lam > 1e-12 * max(lam[-1], 0.0)
    if not keep.any() and direction is None:
        return X, f
    Q = V[:, keep]
    if direction is not None:
        u = direction - Q @ (Q.T @ direction)
        if np.linalg.norm(u) > 1e-8 * np.linalg.norm(direction):
            Q = np.hstack([Q, (u / np.linalg.norm(u))[:, None]])
    S = Q.T @ X @ Q
    min_step = 1.0 / max(float(np.max(pos + neg)) / 4, 1e-300)
    step = min_step
    Gs = Q.T @ objective_gradient(pos, neg, X) @ Q
    for _ in range(steps):
        while True:
            S_new = project_trace_simplex(S - step * Gs, nu)
            X_new = Q @ S_new @ Q.T
            X_new = (X_new + X_new.T) / 2
            f_new = objective_value(pos, neg, X_new)
            decrease = float(np.sum(Gs * (S - S_new)))
            if f_new <= f - 0.5 * decrease / max(step, 1e-300) * step or step <= min_step:
                break
            step = max(step / 4, min_step)
        if not f_new < f:
            break
        Gs_new = Q.T @ objective_gradient(pos, neg, X_new) @ Q
        dS, dG = S_new - S, Gs_new - Gs
        curv = float(np.sum(dS * dG))
        step = max(float(np.sum(dS * dS)) / curv, min_step) if curv > 0 else min_step
        S, X, f, Gs = S_new, X_new, f_new, Gs_new
    return X, f


def _initial_iterate(pos, neg, cfg: NucConfig) -> np.ndarray:
    n = pos.shape[0]
    if cfg.init == "zero" or cfg.nu == 0:
        return np.zeros((n, n))
    if np.any(neg <= 0):
        raise InputError("scaled_pmi init needs strictly positive negative coefficients")
    X = project_psd_rank(clip_pmi(gram_ergo_pmi(LimitCoefficients(pos, neg)), cfg.pmi_floor))
    tr = np.trace(X)
    if tr > cfg.nu:
        X *= cfg.nu / tr
    return X


def solve_nuc(pos, neg, cfg: NucConfig,
              callback: Optional[Callable[[int, np.ndarray], None]] = None
              ) -> tuple[np.ndarray, NucTrace]:
    """Frank-Wolfe minimization of ``f(pos, neg, X)`` with ``X PSD`` and ``tr X <= nu``.

    Stops when the duality gap ``<G, X - S>`` drops to ``gap_tol`` or after
    ``max_iter`` steps.  The trace holds one entry per visited iterate,
    including the returned one; ``callback(t, X)`` sees the same iterates.
    """
    pos = np.asarray(pos, dtype=float)
    neg = np.asarray(neg, dtype=float)
    if pos.shape != neg.shape or pos.ndim != 2 or pos.shape[0] != pos.shape[1]:
        raise InputError("coefficient matrices must be square and of equal shape")
    n = pos.shape[0]
    X = _initial_iterate(pos, neg, cfg)
    trace = NucTrace()
    f = objective_value(pos, neg, X)
    gap_tol = cfg.gap_tol if cfg.gap_tol is not None else 1e-7 * abs(f)
    v = _initial_vector(n, cfg.seed)
    for t in range(cfg.max_iter + 1):
        G = objective_gradient(pos, neg, X)
        S, v = frank_wolfe_atom(G, cfg.nu, v, cfg.eig_tol, cfg.power_max_iter, cfg.seed,
                                cfg.eig_method)
        gap = float(np.sum(G * (X - S)))
        trace.objective.append(f)
        trace.gap.append(gap)
        trace.trace_norm.append(float(np.trace(X)))
        if callback is not None:
            callback(t, X)
        if gap <= gap_tol or t == cfg.max_iter:
            break
        D = S - X
        if cfg.step == "exact":
            gamma = _line_search(pos, neg, X, D, cfg.line_search_iter)
        else:
            gamma = 2.0 / (t + 2.0)
        X = X + gamma * D
        X = (X + X.T) / 2
        f = objective_value(pos, neg, X)
        X, f = _range_correction(pos, neg, X, cfg.nu, cfg.correction_steps, f,
                                    v[:, 0] if v.ndim == 2 else v)
        if not np.isfinite(f):
            raise NumericalError("objective became non-finite")
    log.debug("frank-wolfe stopped after %d steps, gap %.3g", len(trace.gap) - 1, trace.gap[-1])
    return X, trace
