"""Figures rendered next to the CLI's CSV/JSON outputs (headless Agg backend)."""

from __future__ import annotations

from collections import defaultdict
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Ellipse as EllipsePatch  # noqa: E402

from .metrics import Ellipse, gaussian_ellipse  # noqa: E402

__all__ = ["plot_embedding", "plot_sweep"]


def _ellipse_patch(e: Ellipse, color) -> EllipsePatch:
    lam, V = np.linalg.eigh(e.covariance)
    lam = np.clip(lam, 0.0, None)
    angle = np.degrees(np.arctan2(V[1, -1], V[0, -1]))
    width, height = 2 * np.sqrt(e.scale * lam[::-1])
    return EllipsePatch(e.center, width, height, angle=angle, fill=False, color=color, lw=1.5)


def plot_embedding(path, U: np.ndarray, labels: Optional[Sequence[int]] = None,
                   title: str = "", confidence: float = 0.95) -> None:
    """Scatter of the first two coordinates, one colour and ellipse per community."""
    U = np.asarray(U, dtype=float)
    if U.shape[1] == 1:
        U = np.hstack([U, np.zeros_like(U)])
    fig, ax = plt.subplots(figsize=(5, 5))
    labels = np.zeros(U.shape[0], dtype=int) if labels is None else np.asarray(labels)
    for idx, lab in enumerate(np.unique(labels)):
        pts = U[labels == lab, :2]
        color = f"C{idx}"
        ax.scatter(pts[:, 0], pts[:, 1], s=12, color=color, label=f"community {lab}")
        if pts.shape[0] >= 3:
            e = gaussian_ellipse(pts, confidence)
            if not e.degenerate:
                ax.add_patch(_ellipse_patch(e, color))
    ax.set_xlabel("dimension 1")
    ax.set_ylabel("dimension 2")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize="small")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_sweep(path, rows: Sequence[tuple], axis: str, metric: str) -> None:
    """Median (line) and per-seed values (dots) of ``metric`` along the sweep axis.

    ``rows`` are ``(axis_value, seed, metric, value)`` tuples; non-finite
    values are left out of the plot.
    """
    by_x = defaultdict(list)
    for x, _seed, name, value in rows:
        if name == metric and np.isfinite(value):
            by_x[float(x)].append(float(value))
    fig, ax = plt.subplots(figsize=(6, 4))
    if by_x:
        xs = sorted(by_x)
        for x in xs:
            ax.scatter([x] * len(by_x[x]), by_x[x], s=10, color="0.6")
        ax.plot(xs, [np.median(by_x[x]) for x in xs], marker="o", color="C0", label="median")
        ax.legend(loc="best", fontsize="small")
    ax.set_xlabel(axis)
    ax.set_ylabel(metric)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
