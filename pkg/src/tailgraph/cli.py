"""Command-line workflows: simulate, preprocess, tpdm, ptc-test, coverage, graph.

CSV files use a comma separator, '.' decimal point and a mandatory header
row.  All randomness flows from --seed; without the flag a seed is drawn
from entropy and printed.  Output files are written atomically (temp file
plus rename).  Exit codes: 0 success, 2 usage error, 3 data error,
4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile

import numpy as np

from . import graphx, inference, rvsim, tpdm
from .errors import DataError, NumericalError, TailgraphError
from .tpdm import TailSample

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tailgraph-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_matrix_csv(matrix: np.ndarray, columns) -> str:
    rows = [",".join(columns)]
    for row in np.asarray(matrix):
        rows.append(",".join(repr(float(v)) for v in row))
    return "\n".join(rows) + "\n"


def read_csv_matrix(path: str):
    """Read a numeric CSV with a header row; returns (columns, n x p array)."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            columns = [h.strip() for h in header]
            data = []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(columns):
                    raise DataError(f"{path}:{lineno}: expected {len(columns)} fields, got {len(row)}")
                try:
                    data.append([float(c) for c in row])
                except ValueError as exc:
                    bad = next(c for c in row if not _is_float(c))
                    raise DataError(f"{path}:{lineno}: non-numeric cell {bad!r}") from exc
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not data:
        raise DataError(f"{path}: no data rows")
    return columns, np.asarray(data, dtype=float)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    print(f"seed: {seed}")
    return seed


def _mass_arg(value: str):
    if value == "fixed2":
        return "fixed"
    if value == "estimate":
        return "estimate"
    raise argparse.ArgumentTypeError("mass must be 'fixed2' or 'estimate'")


def _critical_arg(value: str):
    if value in ("bonferroni", "none") or value.startswith("fixed:"):
        if value.startswith("fixed:"):
            try:
                float(value.split(":", 1)[1])
            except ValueError:
                raise argparse.ArgumentTypeError("fixed critical value must be numeric") from None
        return value
    raise argparse.ArgumentTypeError("critical must be 'bonferroni', 'none' or 'fixed:<c>'")


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    if args.a_matrix:
        _, A = read_csv_matrix(args.a_matrix)
    else:
        A = rvsim.ar1_matrix(args.phi, args.p)
    spec = rvsim.RvNoiseSpec(distribution=args.noise)
    Z = rvsim.sample_noise(A.shape[1], args.n, spec, seed)
    X = rvsim.construct(A, Z)
    columns = [f"X{i + 1}" for i in range(X.shape[1])]
    _atomic_write(args.out, _format_matrix_csv(X, columns))
    print(f"wrote {args.n} x {X.shape[1]} sample to {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    columns, raw = read_csv_matrix(args.input)
    sample = tpdm.marginal_transform(raw, columns=columns)
    _atomic_write(args.output, _format_matrix_csv(sample.data, sample.columns))
    sidecar = {
        "delta": sample.delta,
        "margin": sample.margin,
        "n": sample.n,
        "columns": sample.columns,
        "source": os.path.abspath(args.input),
    }
    _atomic_write(args.output + ".json", json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote preprocessed sample to {args.output} (delta={sample.delta:.6f})")
    return 0


def _load_sample(path: str) -> TailSample:
    columns, data = read_csv_matrix(path)
    sidecar = path + ".json"
    delta = None
    margin = "raw"
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            meta = json.load(fh)
        delta = meta.get("delta")
        margin = meta.get("margin", "raw")
    return TailSample(data, margin=margin, delta=delta, columns=columns)


def cmd_tpdm(args) -> int:
    sample = _load_sample(args.input)
    sigma = tpdm.estimate_tpdm(sample, q_radial=args.radial_quantile,
                               mode=args.mode, mass=args.mass)
    prefix = args.out_prefix
    _atomic_write(prefix + "_tpdm.csv", _format_matrix_csv(sigma.entries, sample.columns))
    meta = {
        "columns": sample.columns,
        "mode": args.mode,
        "radial_quantile": args.radial_quantile,
        "k_used": None if sigma.k_used is None else np.asarray(sigma.k_used).tolist(),
        "entries": sigma.entries.tolist(),
    }
    from .project import invert_ipm

    try:
        inverse = invert_ipm(sigma)
        cond = float(np.linalg.cond(sigma.entries))
        _atomic_write(prefix + "_inverse.csv",
                      _format_matrix_csv(inverse.entries, sample.columns))
        meta["condition_number"] = cond
        meta["inverse"] = inverse.entries.tolist()
        _atomic_write(prefix + "_tpdm.json", json.dumps(meta, indent=2) + "\n")
    except NumericalError as exc:
        meta["condition_number"] = None
        meta["inverse_error"] = str(exc)
        _atomic_write(prefix + "_tpdm.json", json.dumps(meta, indent=2) + "\n")
        raise
    print(f"wrote TPDM and inverse with prefix {prefix}")
    return 0


def cmd_ptc_test(args) -> int:
    sample = _load_sample(args.input)
    report = inference.ptc_test_all_pairs(
        sample, q_radial=args.radial_quantile, q_pred=args.pred_quantile,
        q_res=args.res_quantile, cv_method=args.critical, alpha=args.alpha,
        tpdm_mode=args.mode, tpdm_mass=args.mass)
    prefix = args.out_prefix
    _atomic_write(prefix + "_report.json", json.dumps(report.to_dict(), indent=2) + "\n")
    rows = [",".join(report.csv_header)]
    for row in report.to_csv_rows():
        rows.append(",".join(str(v) for v in row))
    _atomic_write(prefix + "_report.csv", "\n".join(rows) + "\n")
    graph = graphx.build_graph(report)
    _atomic_write(prefix + "_graph.dot", graphx.emit_dot(graph))
    n_err = sum(1 for r in report.records if r.error)
    print(f"tested {len(report.records)} pairs: {report.n_rejected()} rejected, "
          f"{n_err} errored (critical value {report.critical_value:.4f})")
    return 0


def cmd_coverage(args) -> int:
    if args.reps < 100:
        raise DataError("need at least 100 replications for a coverage estimate")
    seed = _resolve_seed(args)
    result = inference.coverage_study(
        phi=args.phi, n=args.n, reps=args.reps, q_radial=args.radial_quantile,
        level=args.level, seed=seed)
    _atomic_write(args.out, json.dumps(result.to_dict(), indent=2) + "\n")
    print(f"coverage {result.coverage:.4f} at level {args.level} "
          f"({result.reps} replications) -> {args.out}")
    return 0


def cmd_graph(args) -> int:
    if bool(args.report) == bool(args.stats):
        raise DataError("exactly one of --report or --stats is required")
    if args.report:
        with open(args.report) as fh:
            payload = json.load(fh)
        critical = float(args.critical.split(":", 1)[1]) if args.critical else payload["critical_value"]
        T = np.zeros((len(payload["columns"]),) * 2)
        for rec in payload["pairs"]:
            if rec.get("error"):
                continue
            T[rec["i"], rec["j"]] = T[rec["j"], rec["i"]] = rec["t"] or 0.0
        graph = graphx.graph_from_stats(T, payload["columns"], critical)
    else:
        columns, T = read_csv_matrix(args.stats)
        if not args.critical:
            raise DataError("--critical fixed:<c> is required with --stats")
        critical = float(args.critical.split(":", 1)[1])
        graph = graphx.graph_from_stats(T, columns, critical)
    _atomic_write(args.out, graphx.emit_dot(graph, width_scale=args.width_scale))
    if args.json:
        _atomic_write(args.json, json.dumps(graphx.to_adjacency(graph), indent=2) + "\n")
    print(f"graph with {len(graph.edges)} edges -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailgraph",
        description="Tail dependence estimation, partial tail correlation tests and extremal graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate the autoregressive tail model")
    sim.add_argument("--phi", type=float, default=0.7)
    sim.add_argument("--p", type=int, default=4)
    sim.add_argument("--n", type=int, default=10_000)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--noise", choices=("shifted-pareto", "frechet"), default="shifted-pareto")
    sim.add_argument("--a-matrix", default=None, help="CSV coefficient matrix instead of the AR model")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    prep = sub.add_parser("preprocess", help="rank-transform to shifted-Pareto margins")
    prep.add_argument("--input", required=True)
    prep.add_argument("--output", required=True)
    prep.set_defaults(func=cmd_preprocess)

    tp = sub.add_parser("tpdm", help="estimate the TPDM and its inverse")
    tp.add_argument("--input", required=True)
    tp.add_argument("--radial-quantile", type=float, default=0.95)
    tp.add_argument("--mode", choices=("pairwise", "global"), default="pairwise")
    tp.add_argument("--mass", type=_mass_arg, default="fixed2")
    tp.add_argument("--out-prefix", required=True)
    tp.set_defaults(func=cmd_tpdm)

    pt = sub.add_parser("ptc-test", help="all-pairs partial tail correlation test")
    pt.add_argument("--input", required=True)
    pt.add_argument("--radial-quantile", type=float, default=0.95)
    pt.add_argument("--pred-quantile", type=float, default=0.98)
    pt.add_argument("--res-quantile", type=float, default=0.98)
    pt.add_argument("--alpha", type=float, default=0.05)
    pt.add_argument("--critical", type=_critical_arg, default="bonferroni")
    pt.add_argument("--mode", choices=("pairwise", "global"), default="pairwise")
    pt.add_argument("--mass", type=_mass_arg, default="fixed2")
    pt.add_argument("--out-prefix", required=True)
    pt.set_defaults(func=cmd_ptc_test)

    cov = sub.add_parser("coverage", help="confidence-interval coverage simulation")
    cov.add_argument("--phi", type=float, default=0.7)
    cov.add_argument("--n", type=int, default=10_000)
    cov.add_argument("--reps", type=int, default=500)
    cov.add_argument("--radial-quantile", type=float, default=0.98)
    cov.add_argument("--level", type=float, default=0.95)
    cov.add_argument("--seed", type=int, default=None)
    cov.add_argument("--out", required=True)
    cov.set_defaults(func=cmd_coverage)

    gr = sub.add_parser("graph", help="emit a DOT graph from a report or a statistic matrix")
    gr.add_argument("--report", default=None, help="report JSON from ptc-test")
    gr.add_argument("--stats", default=None, help="square CSV of test statistics")
    gr.add_argument("--critical", type=_critical_arg, default=None)
    gr.add_argument("--width-scale", type=float, default=4.0)
    gr.add_argument("--out", required=True)
    gr.add_argument("--json", default=None, help="also write JSON adjacency here")
    gr.set_defaults(func=cmd_graph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TailgraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
