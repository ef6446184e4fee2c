"""Command-line runner: ``generate``, ``embed``, ``eval`` and ``sweep``.

Settings come from an optional JSON config (``--config``) overridden by
flags.  Every command writes a manifest holding the fully resolved config,
so a run can be reproduced from its manifest alone.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ErgonodeError, NumericalError, ParameterError
from .io import (read_embeddings, read_json, read_labels, write_edge_list, write_embeddings,
                 write_json, write_labels, write_rows_csv)
from .pipeline import (ExperimentConfig, embed, evaluate, prepare_graph, build_graph,
                       second_dimension_variance)
from .metrics import gram_distance, snr_1d

log = logging.getLogger("ergonode")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SWEEP_HEADER = ("axis_value", "seed", "metric", "value")


def _csv_floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _csv_ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--graph", help="graph kind (sbm-linear, sbm-log, explicit, expected) "
                        "or the path of an edge-list TSV")
    common.add_argument("--labels", help="labels file for an edge-list graph")
    common.add_argument("--n", type=int, help="number of nodes for SBM graphs")
    common.add_argument("--p", type=float, help="within-block probability (sbm-linear)")
    common.add_argument("--q", type=float, help="cross-block probability (sbm-linear)")
    common.add_argument("--p-scale", type=float, help="p~ in p = p~ ln(n)/n (sbm-log)")
    common.add_argument("--q-scale", type=float, help="q~ in q = q~ ln(n)/n (sbm-log)")
    common.add_argument("--m", type=int, help="block size of the expected graph")
    common.add_argument("--a", type=float, help="within-block weight of the expected graph")
    common.add_argument("--b", type=float, help="cross-block weight of the expected graph")
    common.add_argument("--epsilon", type=float, help="smoothing weight (default 1/(10n))")
    common.add_argument("--algo", help="vec, ergovec, ergopmi, nucgram or spectral")
    common.add_argument("--w", type=int, help="window size")
    common.add_argument("--k", type=int, help="negative sampling rate")
    common.add_argument("--d", type=int, help="embedding dimension")
    common.add_argument("--r", type=int, help="walks per node (vec)")
    common.add_argument("--length", type=int, help="walk length in nodes (vec)")
    common.add_argument("--nu0", type=float, help="trace bound per node (nucgram)")
    common.add_argument("--seed", type=int, help="single seed (replaces the seeds list)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ergonode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="sample a graph and write it as TSV")
    sub.add_parser("embed", parents=[common], help="compute node embeddings")
    ev = sub.add_parser("eval", parents=[common], help="evaluate an embedding CSV")
    ev.add_argument("--embeddings", help="embedding CSV (default <out>/embeddings.csv)")
    ev.add_argument("--reference", help="reference embedding CSV for Gram/Procrustes distances")
    sw = sub.add_parser("sweep", parents=[common], help="repeat embed+eval over a grid")
    sw.add_argument("--axis", choices=("nu0", "n", "ell"))
    sw.add_argument("--values", type=_csv_floats, help="comma-separated grid values")
    sw.add_argument("--seeds", type=_csv_ints, help="comma-separated seeds")
    return parser


_GRAPH_FLAGS = {"n": "n", "p": "p", "q": "q", "p_scale": "p_scale", "q_scale": "q_scale",
                "m": "m", "a": "a", "b": "b", "labels": "labels"}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = read_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise ParameterError("config file must hold a JSON object")
    graph = dict(data.get("graph", {}))
    if args.graph:
        if args.graph in ("sbm-linear", "sbm-log", "explicit", "expected", "file"):
            if graph.get("kind") != args.graph:
                graph = {"kind": args.graph}
        else:
            graph = {"kind": "file", "path": args.graph}
    for flag, key in _GRAPH_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            graph[key] = val
    if graph:
        data["graph"] = graph
    for flag in ("epsilon", "algo", "w", "k", "d", "r", "length", "nu0", "out"):
        val = getattr(args, flag)
        if val is not None:
            data[flag] = val
    if args.seed is not None:
        data["seeds"] = [args.seed]
    if getattr(args, "seeds", None):
        data["seeds"] = args.seeds
    if args.no_figures:
        data["figures"] = False
    sweep = dict(data.get("sweep", {"axis": "nu0"}))
    if getattr(args, "axis", None):
        if sweep.get("axis") != args.axis:
            sweep.pop("values", None)
        sweep["axis"] = args.axis
    if getattr(args, "values", None):
        sweep["values"] = args.values
    data["sweep"] = sweep
    return ExperimentConfig.from_dict(data)


def _manifest(cfg: ExperimentConfig, command: str, **extra) -> dict:
    return {"command": command, "version": __version__, "config": cfg.to_dict(), **extra}


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(cfg: ExperimentConfig) -> None:
    out = _out_dir(cfg)
    seed = cfg.seeds[0]
    g, desc = build_graph(cfg, seed)
    write_edge_list(out / "graph.tsv", g, comment=f"ergonode generate seed={seed}")
    if g.labels is not None:
        write_labels(out / "labels.txt", g.labels)
    from .pipeline import effective_epsilon

    desc["epsilon"] = effective_epsilon(cfg, g.n)
    write_json(out / "generate_manifest.json", _manifest(cfg, "generate", graph=desc))


def cmd_embed(cfg: ExperimentConfig) -> None:
    out = _out_dir(cfg)
    seed = cfg.seeds[0]
    g, desc = prepare_graph(cfg, seed)
    res = embed(g, cfg, seed)
    write_embeddings(out / "embeddings.csv", res.U, res.labels)
    if res.trace_rows:
        write_rows_csv(out / "trace.csv", res.trace_header, res.trace_rows)
    write_json(out / "embed_manifest.json", _manifest(cfg, "embed", graph=desc, run=res.info))
    if cfg.figures:
        from .plotting import plot_embedding

        plot_embedding(out / "embeddings.png", res.U, res.labels, title=cfg.algo)


def cmd_eval(cfg: ExperimentConfig, embeddings: Optional[str], reference: Optional[str]) -> None:
    out = _out_dir(cfg)
    path = Path(embeddings) if embeddings else out / "embeddings.csv"
    U, labels = read_embeddings(path)
    if labels is None and cfg.graph.get("labels"):
        labels = read_labels(cfg.graph["labels"])
    ref = read_embeddings(reference)[0] if reference else None
    params = {"embeddings": str(path), "reference": reference}
    records, ellipses, coords = evaluate(U, labels, params, ref)
    write_json(out / "metrics.json", records)
    write_json(out / "ellipses.json", ellipses)
    write_embeddings(out / "coordinates.csv", coords, labels)
    write_json(out / "eval_manifest.json", _manifest(cfg, "eval", embeddings=str(path),
                                                     reference=reference))
    if cfg.figures:
        from .plotting import plot_embedding

        plot_embedding(out / "coordinates.png", coords, labels, title="SVD coordinates")


def _finite_or_nan(fn, *a, **kw) -> float:
    try:
        return float(fn(*a, **kw))
    except NumericalError:
        return float("nan")


def sweep_point(cfg_data: dict, axis: str, value: float, seed: int) -> list:
    """Metric rows ``(value, seed, metric, value)`` for one grid point."""
    cfg = ExperimentConfig.from_dict(cfg_data)
    if axis == "nu0":
        cfg = cfg.replace(nu0=float(value))
    elif axis == "n":
        graph = dict(cfg.graph)
        if graph["kind"] == "expected":
            graph["m"] = int(value) // 2
        else:
            graph["n"] = int(value)
        cfg = cfg.replace(graph=graph)
    g, _ = prepare_graph(cfg, seed)
    rows = []
    if axis == "ell":
        vec = embed(g, cfg.replace(algo="vec", length=int(value)), seed).U
        ref = embed(g, cfg.replace(algo="ergovec"), seed).U
        rows.append((value, seed, "gram_distance_normalized",
                     gram_distance(vec, ref, normalized=True)))
        U = vec
    else:
        U = embed(g, cfg, seed).U
    rows.append((value, seed, "second_dim_variance", second_dimension_variance(U)))
    if g.labels is not None and np.unique(g.labels).size == 2:
        rows.append((value, seed, "snr_1d", _finite_or_nan(snr_1d, U, g.labels)))
        rows.append((value, seed, "snr_1d_projection",
                     _finite_or_nan(snr_1d, U, g.labels, mode="projection_normalized")))
    return rows


def _workers() -> int:
    env = os.environ.get("ERGONODE_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ParameterError(f"ERGONODE_THREADS must be an integer, got {env!r}")
    return cap


def cmd_sweep(cfg: ExperimentConfig) -> None:
    out = _out_dir(cfg)
    axis = cfg.sweep["axis"]
    values = cfg.sweep["values"]
    points = [(v, s) for v in values for s in cfg.seeds]
    data = cfg.to_dict()
    workers = min(_workers(), len(points))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(sweep_point, data, axis, v, s) for v, s in points]
            results = [f.result() for f in futures]
    else:
        results = [sweep_point(data, axis, v, s) for v, s in points]
    point_dir = out / "points"
    point_dir.mkdir(exist_ok=True)
    for (v, s), rows in zip(points, results):
        write_rows_csv(point_dir / f"{axis}={v:g}_seed={s}.csv", SWEEP_HEADER, rows)
    merged = [row for rows in results for row in rows]
    write_rows_csv(out / "sweep.csv", SWEEP_HEADER, merged)
    write_json(out / "sweep_manifest.json",
               _manifest(cfg, "sweep", axis=axis, values=values, workers=workers))
    if cfg.figures:
        from .plotting import plot_sweep

        for metric in sorted({r[2] for r in merged}):
            plot_sweep(out / f"sweep_{metric}.png", merged, axis, metric)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "generate":
            cmd_generate(cfg)
        elif args.command == "embed":
            cmd_embed(cfg)
        elif args.command == "eval":
            cmd_eval(cfg, args.embeddings, args.reference)
        else:
            cmd_sweep(cfg)
    except NumericalError as exc:
        print(f"ergonode: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ErgonodeError, OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        print(f"ergonode: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
