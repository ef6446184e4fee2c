"""Weighted undirected graphs, SBM generation and the natural random walk.

Graphs are stored densely; everything here targets desk-scale node counts
(a few thousand at most).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import csgraph

from .errors import AssumptionError, DegenerateNodeError, InputError, ParameterError

__all__ = [
    "Graph",
    "SbmParams",
    "ComponentDecomposition",
    "generate_sbm",
    "expected_sbm_graph",
    "smooth_graph",
    "default_epsilon",
    "connected_components",
    "degrees",
    "transition_matrix",
    "stationary_distribution",
]


@dataclass(frozen=True)
class Graph:
    """Undirected graph with a dense nonnegative adjacency matrix.

    Attributes
    ----------
    adjacency : ndarray, shape (n, n)
        Symmetric edge weights with a zero diagonal; 0 means "no edge".
    labels : ndarray of int, optional
        Community index of every node.
    """

    adjacency: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError(f"adjacency must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InputError("adjacency has non-finite entries")
        if np.any(a < 0):
            raise InputError("adjacency has negative weights")
        if np.any(np.diag(a) != 0):
            raise InputError("adjacency diagonal must be zero (no self-loops)")
        if not np.array_equal(a, a.T):
            raise InputError("adjacency must be exactly symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=int)
            if y.shape != (a.shape[0],):
                raise InputError(f"labels must have length {a.shape[0]}, got {y.shape}")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def with_labels(self, labels) -> "Graph":
        return Graph(self.adjacency, labels)


@dataclass(frozen=True)
class SbmParams:
    """Parameters of a stochastic block model with contiguous balanced blocks.

    Build instances through :meth:`explicit`, :meth:`linear` or
    :meth:`logarithmic`; the latter two record the regime so the
    exact-recovery flag can be reported.
    """

    n: int
    B: np.ndarray
    regime: str = "explicit"
    p_scale: Optional[float] = None
    q_scale: Optional[float] = None

    @classmethod
    def explicit(cls, n: int, B) -> "SbmParams":
        return cls(n=n, B=np.atleast_2d(np.asarray(B, dtype=float)))

    @classmethod
    def linear(cls, n: int, p: float, q: float) -> "SbmParams":
        """Two blocks with constant within/cross probabilities ``p`` and ``q``."""
        return cls(n=n, B=np.array([[p, q], [q, p]], dtype=float), regime="linear",
                   p_scale=p, q_scale=q)

    @classmethod
    def logarithmic(cls, n: int, p_scale: float, q_scale: float) -> "SbmParams":
        """Two blocks with ``p = p_scale ln(n)/n`` and ``q = q_scale ln(n)/n``, clipped to [0, 1]."""
        if n < 2:
            raise ParameterError("logarithmic regime needs n >= 2")
        f = np.log(n) / n
        p = min(max(p_scale * f, 0.0), 1.0)
        q = min(max(q_scale * f, 0.0), 1.0)
        return cls(n=n, B=np.array([[p, q], [q, p]]), regime="logarithmic",
                   p_scale=p_scale, q_scale=q_scale)

    @property
    def K(self) -> int:
        return self.B.shape[0]

    @property
    def above_recovery_threshold(self) -> Optional[bool]:
        """``sqrt(p~) - sqrt(q~) > sqrt(2)`` in the logarithmic regime, else None."""
        if self.regime != "logarithmic":
            return None
        return bool(np.sqrt(self.p_scale) - np.sqrt(self.q_scale) > np.sqrt(2.0))

    def labels(self) -> np.ndarray:
        """Block-contiguous labels: the first n/K nodes are community 0, and so on."""
        self.validate()
        return np.repeat(np.arange(self.K), self.n // self.K)

    def validate(self) -> None:
        B = self.B
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ParameterError(f"B must be square, got shape {B.shape}")
        if not np.allclose(B, B.T, rtol=0, atol=0):
            raise ParameterError("B must be symmetric")
        if not np.all(np.isfinite(B)) or np.any(B < 0) or np.any(B > 1):
            raise ParameterError(f"edge probabilities must lie in [0, 1], got {B.tolist()}")
        if self.n < 1 or self.n % self.K:
            raise ParameterError(f"n={self.n} must be a positive multiple of K={self.K}")

    def to_dict(self) -> dict:
        d = {"n": self.n, "K": self.K, "regime": self.regime, "B": self.B.tolist()}
        if self.regime != "explicit":
            d.update(p_scale=self.p_scale, q_scale=self.q_scale,
                     above_recovery_threshold=self.above_recovery_threshold)
        return d


@dataclass(frozen=True)
class ComponentDecomposition:
    assignment: np.ndarray
    sizes: np.ndarray

    @property
    def count(self) -> int:
        return len(self.sizes)


def generate_sbm(params: SbmParams, seed: int) -> Graph:
    """Sample an unweighted SBM graph; identical output for identical ``(params, seed)``."""
    params.validate()
    y = params.labels()
    P = params.B[np.ix_(y, y)]
    rng = np.random.Generator(np.random.Philox(seed))
    draws = rng.random((params.n, params.n))
    upper = np.triu(draws < P, k=1)
    A = (upper | upper.T).astype(float)
    return Graph(A, y)


def expected_sbm_graph(m: int, a: float, b: float) -> Graph:
    """Expected adjacency of a balanced two-block SBM on ``2m`` nodes.

    Within-block weight ``a``, cross-block weight ``b``, zero diagonal.
    Requires ``a > m/(m-1) b`` so that the second transition eigenvalue is
    positive.
    """
    if m < 2:
        raise ParameterError("m must be at least 2")
    if not (0 <= b <= 1 and 0 <= a <= 1):
        raise ParameterError("a and b must lie in [0, 1]")
    if not a > m / (m - 1) * b:
        raise AssumptionError(f"need a > m/(m-1)*b, got a={a}, b={b}, m={m}")
    y = np.repeat([0, 1], m)
    A = np.where(y[:, None] == y[None, :], a, b).astype(float)
    np.fill_diagonal(A, 0.0)
    return Graph(A, y)


def default_epsilon(n: int) -> float:
    return 1.0 / (10 * n)


def smooth_graph(g: Graph, eps: float) -> Graph:
    """Add ``eps`` to every off-diagonal weight (the diagonal stays zero)."""
    if eps < 0:
        raise ParameterError("eps must be nonnegative")
    if eps == 0:
        return g
    A = g.adjacency + eps
    np.fill_diagonal(A, 0.0)
    return Graph(A, g.labels)


def connected_components(g: Graph) -> ComponentDecomposition:
    count, assignment = csgraph.connected_components(g.adjacency > 0, directed=False)
    # relabel by first appearance so ids are contiguous and stable
    _, first = np.unique(assignment, return_index=True)
    order = np.argsort(first)
    remap = np.empty(count, dtype=int)
    remap[order] = np.arange(count)
    assignment = remap[assignment]
    return ComponentDecomposition(assignment, np.bincount(assignment, minlength=count))


def degrees(g: Graph) -> np.ndarray:
    return g.adjacency.sum(axis=1)


def _check_degrees(d: np.ndarray) -> None:
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        raise DegenerateNodeError(
            f"{bad.size} node(s) have zero degree (first: {bad[0]}); smooth the graph first")


def transition_matrix(g: Graph) -> np.ndarray:
    """Row-stochastic ``W = D^{-1} A`` of the natural random walk."""
    d = degrees(g)
    _check_degrees(d)
    return g.adjacency / d[:, None]


def stationary_distribution(g: Graph) -> np.ndarray:
    """Stationary law that weights each component by its share of nodes.

    Within component ``t`` the mass is ``(n_t / n) * d_i / sum_{j in t} d_j``.
    """
    d = degrees(g)
    _check_degrees(d)
    comp = connected_components(g)
    vol = np.bincount(comp.assignment, weights=d)
    share = comp.sizes / g.n
    return share[comp.assignment] * d / vol[comp.assignment]
