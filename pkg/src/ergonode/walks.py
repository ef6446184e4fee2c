"""Random-walk sampling and skip-bigram counting.

Every walk ``(m, p)`` (the ``p``-th walk launched from node ``m``) draws its
steps from its own Philox stream keyed by ``(seed, m, p)``, and negative
samples for gap ``v`` come from a stream keyed by ``(seed, NEGATIVE_STREAM,
v)`` consumed in occurrence order.  Results therefore do not depend on how
walks are batched or scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptyInputError, ParameterError
from .graph import Graph, transition_matrix

__all__ = [
    "HardWindow",
    "WalkConfig",
    "WalkSet",
    "BigramCounts",
    "gap_weights",
    "walk_rng",
    "sample_walks",
    "unigram_distribution",
    "count_positive",
    "sample_negative",
    "count_bigrams",
]

NEGATIVE_STREAM = 0x6E6567  # "neg"
_NEG_CHUNK = 1 << 21


@dataclass(frozen=True)
class HardWindow:
    """Unit weight for every gap ``1..w``."""

    w: int

    def weights(self) -> np.ndarray:
        if self.w < 1:
            raise ParameterError("window size must be >= 1")
        return np.ones(self.w)


WeightSpec = Union[HardWindow, Sequence[float], np.ndarray]


def gap_weights(spec: WeightSpec) -> np.ndarray:
    """Per-gap weights ``alpha_1..alpha_V`` as a float array."""
    if isinstance(spec, HardWindow):
        return spec.weights()
    alpha = np.asarray(spec, dtype=float).ravel()
    if alpha.size == 0:
        raise ParameterError("weight sequence is empty")
    if not np.all(np.isfinite(alpha)):
        raise ParameterError("weights must be finite")
    return alpha


@dataclass(frozen=True)
class WalkConfig:
    r: int
    length: int
    weights: WeightSpec = HardWindow(8)
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.r < 1:
            raise ParameterError("r must be >= 1")
        if self.length < 2:
            raise ParameterError("walk length must be >= 2")
        if self.k < 0:
            raise ParameterError("k must be >= 0")
        if gap_weights(self.weights).size >= self.length:
            raise ParameterError("window/weights must be shorter than the walk length")


@dataclass(frozen=True)
class WalkSet:
    """``walks[m * r + p]`` is the ``p``-th walk started at node ``m``."""

    walks: np.ndarray
    n: int
    r: int

    @property
    def length(self) -> int:
        return self.walks.shape[1]


@dataclass(frozen=True)
class BigramCounts:
    positive: np.ndarray
    negative: np.ndarray


def walk_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``(seed, *key)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, key)])
    return np.random.Generator(np.random.Philox(ss))


def _row_search_table(P: np.ndarray) -> np.ndarray:
    """Flattened cumulative rows, row ``i`` shifted by ``i`` so one sorted search serves all rows."""
    n = P.shape[0]
    cum = np.cumsum(P, axis=1)
    # pin each row's end (and any trailing zero-weight columns) to exactly 1
    last = n - 1 - np.argmax(P[:, ::-1] > 0, axis=1)
    tail = np.arange(n)[None, :] >= last[:, None]
    cum[tail] = 1.0
    return (cum + np.arange(n)[:, None]).ravel()


def _draw(table: np.ndarray, n: int, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(table, rows + u, side="right")
    return idx - rows * n


def sample_walks(g: Graph, r: int, length: int, seed: int) -> WalkSet:
    """Launch ``r`` natural random walks of ``length`` nodes from every node."""
    if r < 1 or length < 2:
        raise ParameterError("need r >= 1 and length >= 2")
    W = transition_matrix(g)
    n = g.n
    table = _row_search_table(W)
    starts = np.repeat(np.arange(n), r)
    uniforms = np.empty((n * r, length - 1))
    for idx in range(n * r):
        m, p = divmod(idx, r)
        uniforms[idx] = walk_rng(seed, m, p).random(length - 1)
    walks = np.empty((n * r, length), dtype=np.int64)
    walks[:, 0] = starts
    for s in range(1, length):
        walks[:, s] = _draw(table, n, walks[:, s - 1], uniforms[:, s - 1])
    return WalkSet(walks, n, r)


def walks_from_config(g: Graph, cfg: WalkConfig) -> WalkSet:
    return sample_walks(g, cfg.r, cfg.length, cfg.seed)


def unigram_distribution(ws: WalkSet) -> np.ndarray:
    """Empirical node frequencies over every position of every walk."""
    if ws.walks.size == 0:
        raise EmptyInputError("walk set is empty")
    counts = np.bincount(ws.walks.ravel(), minlength=ws.n)
    return counts / ws.walks.size


def count_positive(ws: WalkSet, weights: WeightSpec) -> np.ndarray:
    """Forward skip-bigram counts ``sum_v alpha_v #{s : X_s = i, X_{s+v} = j}``."""
    alpha = gap_weights(weights)
    n, walks = ws.n, ws.walks
    if alpha.size >= ws.length:
        raise ParameterError("weights must be shorter than the walk length")
    N = np.zeros(n * n)
    for v, a in enumerate(alpha, start=1):
        if a == 0:
            continue
        pair = walks[:, :-v].ravel() * n + walks[:, v:].ravel()
        N += a * np.bincount(pair, minlength=n * n)
    return N.reshape(n, n)


def sample_negative(ws: WalkSet, weights: WeightSpec, k: int, seed: int,
                    unigram: Optional[np.ndarray] = None) -> np.ndarray:
    """Negative-pair counts from ``k`` unigram draws per positive occurrence.

    Each occurrence ``(X_s, X_{s+v})`` adds ``alpha_v`` to ``N[X_s, j]`` for
    each of its ``k`` draws ``j``, so ``N.sum() == k * positive.sum()``.
    """
    if k < 0:
        raise ParameterError("k must be >= 0")
    alpha = gap_weights(weights)
    n = ws.n
    N = np.zeros(n * n)
    if k == 0:
        return N.reshape(n, n)
    if unigram is None:
        unigram = unigram_distribution(ws)
    cdf = np.cumsum(unigram)
    cdf[unigram.size - 1 - np.argmax(unigram[::-1] > 0):] = 1.0
    for v, a in enumerate(alpha, start=1):
        if a == 0:
            continue
        first = ws.walks[:, :-v].ravel()
        rng = walk_rng(seed, NEGATIVE_STREAM, v)
        hits = np.zeros(n * n)
        # occurrence o owns draws [o*k, (o+1)*k) of the stream
        for lo in range(0, first.size, _NEG_CHUNK):
            src = np.repeat(first[lo:lo + _NEG_CHUNK], k)
            j = np.searchsorted(cdf, rng.random(src.size), side="right")
            hits += np.bincount(src * n + j, minlength=n * n)
        N += a * hits
    return N.reshape(n, n)


def count_bigrams(g: Graph, cfg: WalkConfig) -> tuple[BigramCounts, WalkSet]:
    """Sample walks and return positive/negative counts under ``cfg``."""
    ws = walks_from_config(g, cfg)
    pos = count_positive(ws, cfg.weights)
    neg = sample_negative(ws, cfg.weights, cfg.k, cfg.seed)
    return BigramCounts(pos, neg), ws
