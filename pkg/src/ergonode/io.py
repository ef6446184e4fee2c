"""Plain-text serialization: edge lists, labels, dense matrices, embeddings, traces, JSON.

Floats are written with ``%.17g`` so files round-trip exactly and re-runs
are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InputError
from .graph import Graph

__all__ = [
    "fmt",
    "write_edge_list",
    "read_edge_list",
    "write_labels",
    "read_labels",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_walks",
    "write_embeddings",
    "read_embeddings",
    "write_rows_csv",
    "write_json",
    "read_json",
    "json_safe",
]


def fmt(x: float) -> str:
    """``%.17g`` with ``inf``, ``-inf`` and ``nan`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def write_edge_list(path, g: Graph, comment: Optional[str] = None) -> None:
    """One ``i<TAB>j<TAB>weight`` line per undirected edge with ``i < j``."""
    A = g.adjacency
    iu, ju = np.nonzero(np.triu(A, 1))
    with open(path, "w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"# n={g.n}\n")
        for i, j in zip(iu, ju):
            fh.write(f"{i}\t{j}\t{fmt(A[i, j])}\n")


def read_edge_list(path, n: Optional[int] = None) -> Graph:
    """Load a TSV edge list; a missing third column means weight 1.

    ``n`` defaults to a ``# n=<int>`` header if present, else one more than
    the largest id.  The matrix is symmetrized by taking the max over the two
    directions, and the same pair listed twice with different weights is
    rejected.
    """
    seen: dict[tuple[int, int], float] = {}
    header_n = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("n="):
                    header_n = int(body[2:])
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise InputError(f"{path}:{lineno}: expected 'i<TAB>j<TAB>weight'")
            try:
                i, j = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            if i < 0 or j < 0:
                raise InputError(f"{path}:{lineno}: node ids must be nonnegative")
            if i == j:
                raise InputError(f"{path}:{lineno}: self-loops are not allowed")
            if not (math.isfinite(w) and w >= 0):
                raise InputError(f"{path}:{lineno}: weight must be finite and nonnegative")
            key = (i, j)
            if key in seen and seen[key] != w:
                raise InputError(f"{path}:{lineno}: conflicting weights for edge {i}-{j}")
            seen[key] = w
    size = n if n is not None else header_n
    if size is None:
        size = 1 + max((max(k) for k in seen), default=-1)
    if size < 1:
        raise InputError(f"{path}: no nodes")
    A = np.zeros((size, size))
    for (i, j), w in seen.items():
        if max(i, j) >= size:
            raise InputError(f"{path}: node id {max(i, j)} out of range for n={size}")
        A[i, j] = w
    return Graph(np.maximum(A, A.T))


def write_labels(path, labels: Iterable[int]) -> None:
    with open(path, "w") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


def read_labels(path) -> np.ndarray:
    with open(path) as fh:
        vals = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    try:
        return np.array([int(v) for v in vals], dtype=np.int64)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_matrix_csv(path, M: np.ndarray) -> None:
    """Dense CSV with a header row of node ids; ``-inf`` is written literally."""
    M = np.asarray(M, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(range(M.shape[1]))
        for row in M:
            w.writerow(fmt(x) for x in row)


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    try:
        return np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_walks(path, walks: np.ndarray) -> None:
    with open(path, "w") as fh:
        for walk in walks:
            fh.write(" ".join(map(str, walk)) + "\n")


def write_embeddings(path, U: np.ndarray, labels: Optional[Sequence[int]] = None) -> None:
    """CSV ``node,label,x1..xd``; the label column is empty when unknown."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "label"] + [f"x{j + 1}" for j in range(U.shape[1])])
        for i, row in enumerate(U):
            lab = "" if labels is None else int(labels[i])
            w.writerow([i, lab] + [fmt(x) for x in row])


def read_embeddings(path) -> tuple[np.ndarray, Optional[np.ndarray]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][:2] != ["node", "label"]:
        raise InputError(f"{path}: not an embedding CSV")
    body = rows[1:]
    U = np.array([[float(x) for x in r[2:]] for r in body], dtype=float)
    labs = [r[1] for r in body]
    labels = None if any(v == "" for v in labs) else np.array([int(v) for v in labs])
    return U, labels


def write_rows_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(fmt(x) if isinstance(x, (float, np.floating)) else x for x in row)


def json_safe(obj):
    """Convert numpy values and non-finite floats (as strings) for JSON output."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(json_safe(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
