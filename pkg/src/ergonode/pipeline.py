"""Experiment configuration and the in-memory embed/evaluate pipeline behind the CLI."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .ergodic import clip_pmi, ergodic_limits, gram_ergo_pmi, project_psd_rank
from .errors import ParameterError
from .graph import (Graph, SbmParams, default_epsilon, expected_sbm_graph, generate_sbm,
                    smooth_graph)
from .metrics import (cluster_stats, gaussian_ellipse, gram_distance, procrustes_align,
                      snr_1d, spectral_embedding, svd_coordinates)
from .nuclear import NucConfig, solve_nuc
from .objective import SgdConfig, factorize_gram, solve_embeddings_sgd
from .walks import HardWindow, WalkConfig, count_bigrams

__all__ = [
    "ALGORITHMS",
    "NU0_GRID",
    "ExperimentConfig",
    "EmbeddingResult",
    "build_graph",
    "prepare_graph",
    "embed",
    "evaluate",
    "second_dimension_variance",
]

log = logging.getLogger(__name__)

ALGORITHMS = ("vec", "ergovec", "ergopmi", "nucgram", "spectral")
NU0_GRID = tuple(round(0.018 * i, 3) for i in range(1, 13))
SWEEP_DEFAULTS = {"nu0": list(NU0_GRID), "n": [50, 100, 200], "ell": [50, 100, 200, 500]}
MAX_DESK_N = 1000

_GRAPH_DEFAULTS = {
    "sbm-linear": {"n": 100, "p": 0.6, "q": 0.06},
    "sbm-log": {"n": 100, "p_scale": 9.0, "q_scale": 2.0},
    "explicit": {"n": 100, "B": [[0.6, 0.06], [0.06, 0.6]]},
    "expected": {"m": 50, "a": 0.6, "b": 0.06},
    "file": {"path": None, "labels": None},
}


@dataclass
class ExperimentConfig:
    """Everything a run depends on; serialized verbatim into each manifest.

    ``graph`` is a dict with a ``kind`` among ``sbm-linear``, ``sbm-log``,
    ``explicit``, ``expected`` and ``file`` plus kind-specific fields.
    ``epsilon=None`` means ``1/(10n)`` for sampled or loaded graphs and 0 for
    the expected graph, which is already dense.
    """

    graph: dict = field(default_factory=lambda: {"kind": "sbm-linear"})
    epsilon: Optional[float] = None
    algo: str = "ergovec"
    w: int = 8
    k: int = 5
    d: int = 2
    r: int = 10
    length: int = 100
    nu0: float = 0.108
    seeds: list = field(default_factory=lambda: [0])
    out: str = "out"
    sgd: dict = field(default_factory=dict)
    nuc: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=lambda: {"axis": "nu0", "values": list(NU0_GRID)})
    figures: bool = True

    def __post_init__(self):
        self.graph = dict(self.graph)
        kind = self.graph.get("kind", "sbm-linear")
        if kind not in _GRAPH_DEFAULTS:
            raise ParameterError(f"unknown graph kind {kind!r}")
        self.graph = {"kind": kind, **_GRAPH_DEFAULTS[kind], **self.graph}
        if self.algo not in ALGORITHMS:
            raise ParameterError(f"unknown algorithm {self.algo!r}; choose from {ALGORITHMS}")
        for name in ("w", "k", "d", "r", "length"):
            if int(getattr(self, name)) < (0 if name == "k" else 1):
                raise ParameterError(f"{name} must be positive")
        if self.w >= self.length:
            raise ParameterError("window w must be shorter than the walk length")
        if not self.nu0 > 0:
            raise ParameterError("nu0 must be positive")
        if self.epsilon is not None and self.epsilon < 0:
            raise ParameterError("epsilon must be nonnegative")
        if not self.seeds:
            raise ParameterError("seeds must be a non-empty list")
        self.seeds = [int(s) for s in self.seeds]
        axis = self.sweep.get("axis", "nu0")
        if axis not in SWEEP_DEFAULTS:
            raise ParameterError(f"unknown sweep axis {axis!r}")
        self.sweep = {"axis": axis, "values": list(SWEEP_DEFAULTS[axis]), **self.sweep}
        # validate solver settings early so a bad field is a config error
        SgdConfig(d=self.d, **self.sgd)
        NucConfig(nu=1.0, **self.nuc)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _sbm_params(spec: dict) -> SbmParams:
    kind = spec["kind"]
    n = int(spec["n"])
    if kind == "sbm-linear":
        return SbmParams.linear(n, float(spec["p"]), float(spec["q"]))
    if kind == "sbm-log":
        return SbmParams.logarithmic(n, float(spec["p_scale"]), float(spec["q_scale"]))
    return SbmParams.explicit(n, spec["B"])


def build_graph(cfg: ExperimentConfig, seed: int) -> tuple[Graph, dict]:
    """Raw (unsmoothed) graph with labels and a description for the manifest."""
    spec = cfg.graph
    kind = spec["kind"]
    if kind == "file":
        from .io import read_edge_list, read_labels

        if not spec.get("path"):
            raise ParameterError("graph kind 'file' needs a path")
        g = read_edge_list(spec["path"])
        if spec.get("labels"):
            g = g.with_labels(read_labels(spec["labels"]))
        return g, {"kind": kind, "path": spec["path"], "n": g.n}
    if kind == "expected":
        m = int(spec["m"])
        g = expected_sbm_graph(m, float(spec["a"]), float(spec["b"]))
        return g, {"kind": kind, "m": m, "a": spec["a"], "b": spec["b"], "n": g.n}
    params = _sbm_params(spec)
    if params.n > MAX_DESK_N:
        log.warning("n=%d exceeds the desk-scale cap of %d; expect long runtimes",
                    params.n, MAX_DESK_N)
    g = generate_sbm(params, seed)
    desc = {"kind": kind, "seed": seed, **params.to_dict(),
            "above_recovery_threshold": params.above_recovery_threshold}
    if params.K == 2:
        desc.update(p=float(params.B[0, 0]), q=float(params.B[0, 1]))
    return g, desc


def effective_epsilon(cfg: ExperimentConfig, n: int) -> float:
    if cfg.epsilon is not None:
        return float(cfg.epsilon)
    return 0.0 if cfg.graph["kind"] == "expected" else default_epsilon(n)


def prepare_graph(cfg: ExperimentConfig, seed: int) -> tuple[Graph, dict]:
    """Build the graph and apply the configured smoothing."""
    g, desc = build_graph(cfg, seed)
    eps = effective_epsilon(cfg, g.n)
    if eps > 0:
        g = smooth_graph(g, eps)
    desc["epsilon"] = eps
    return g, desc


@dataclass
class EmbeddingResult:
    U: np.ndarray
    labels: Optional[np.ndarray]
    trace_header: tuple = ()
    trace_rows: list = field(default_factory=list)
    info: dict = field(default_factory=dict)


# Adam learning rates that work at desk scale: sampled counts are noisier than
# limits, and the sparser logarithmic regime needs smaller steps.
DEFAULT_LEARNING_RATES = {
    ("vec", "linear"): 0.001,
    ("vec", "logarithmic"): 0.001,
    ("ergovec", "linear"): 0.02,
    ("ergovec", "logarithmic"): 0.0025,
}


def default_learning_rate(algo: str, graph_kind: str) -> float:
    regime = "logarithmic" if graph_kind == "sbm-log" else "linear"
    return DEFAULT_LEARNING_RATES.get((algo, regime), SgdConfig.learning_rate)


def _sgd_config(cfg: ExperimentConfig, seed: int) -> SgdConfig:
    lr = default_learning_rate(cfg.algo, cfg.graph["kind"])
    return SgdConfig(**{"d": cfg.d, "seed": seed, "learning_rate": lr, **cfg.sgd})


def embed(g: Graph, cfg: ExperimentConfig, seed: int) -> EmbeddingResult:
    """Run ``cfg.algo`` on ``g`` and return the embedding with its solver trace."""
    algo = cfg.algo
    info: dict[str, Any] = {"algo": algo, "seed": seed}
    if algo == "spectral":
        return EmbeddingResult(spectral_embedding(g, cfg.d), g.labels, info=info)
    if algo == "vec":
        wcfg = WalkConfig(r=cfg.r, length=cfg.length, weights=HardWindow(cfg.w), k=cfg.k,
                          seed=seed)
        counts, _ = count_bigrams(g, wcfg)
        pos, neg = counts.positive, counts.negative
    else:
        lim = ergodic_limits(g, cfg.w, cfg.k)
        pos, neg = lim.positive, lim.negative
    if algo in ("vec", "ergovec"):
        U, trace = solve_embeddings_sgd(pos, neg, _sgd_config(cfg, seed))
        info["epochs"] = len(trace.objective)
        return EmbeddingResult(U, g.labels, ("epoch", "objective", "procrustes_change"),
                               list(trace.rows()), info)
    if algo == "ergopmi":
        X = project_psd_rank(clip_pmi(gram_ergo_pmi(lim)), cfg.d)
        return EmbeddingResult(factorize_gram(X, cfg.d), g.labels, info=info)
    nu = cfg.nu0 * g.n
    ncfg = NucConfig(**{"nu": nu, "seed": seed, **cfg.nuc})
    X, trace = solve_nuc(pos, neg, ncfg)
    info.update(nu=nu, iterations=len(trace.gap) - 1, final_gap=trace.gap[-1])
    return EmbeddingResult(factorize_gram(X, cfg.d), g.labels,
                           ("iter", "objective", "fw_gap", "trace_norm"),
                           list(trace.rows()), info)


def second_dimension_variance(U: np.ndarray) -> float:
    """Population variance of the second SVD coordinate (0 for 1-D embeddings)."""
    C = svd_coordinates(U)
    return float(np.var(C[:, 1])) if C.shape[1] > 1 else 0.0


def evaluate(U: np.ndarray, labels: Optional[np.ndarray], params: dict,
             reference: Optional[np.ndarray] = None) -> tuple[list, list, np.ndarray]:
    """Metric records, per-community ellipse records and SVD coordinates of ``U``."""
    records = []
    coords = svd_coordinates(U)
    records.append({"metric": "second_dim_variance", "value": second_dimension_variance(U),
                    "params": params})
    ellipses = []
    if labels is not None and np.unique(labels).size == 2:
        for mode in ("formula", "projection_normalized"):
            records.append({"metric": "snr_1d" if mode == "formula" else "snr_1d_projection",
                            "value": snr_1d(U, labels, mode), "params": params})
        st = cluster_stats(U, labels)
        records.append({"metric": "mean_distance", "value": float(np.linalg.norm(st.delta)),
                        "params": params})
        if coords.shape[1] >= 2:
            for lab in np.unique(labels):
                pts = coords[labels == lab, :2]
                if pts.shape[0] >= 3:
                    ellipses.append({"label": int(lab), **gaussian_ellipse(pts).to_dict()})
    if reference is not None:
        records.append({"metric": "gram_distance", "value": gram_distance(U, reference),
                        "params": params})
        records.append({"metric": "gram_distance_normalized",
                        "value": gram_distance(U, reference, normalized=True), "params": params})
        _, dist = procrustes_align(reference, U)
        records.append({"metric": "procrustes_distance", "value": dist, "params": params})
    return records, ellipses, coords
