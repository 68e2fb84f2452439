"""Command line entry point ``dfe``.

Exit codes: 0 success, 2 unreadable or malformed input, 3 bad configuration,
4 numerical failure. Errors are printed to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import secrets
import sys
from contextlib import nullcontext
from dataclasses import fields

import numpy as np

from .config import ESTIMATORS, ConfigError, RunConfig, run_estimator, _buckets
from .io import EmbeddingFormatError, read_embeddings
from .quantization import Smoothing, count_assignments, kmeans_fit, smooth_counts
from .simulation import SyntheticSpec, error_study, make_distribution

logger = logging.getLogger("divfrontier")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_PARSE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; here those are configuration errors
    def error(self, message):
        raise ConfigError(message)


def _add_run_options(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with run options; flags given here take precedence")
    p.add_argument("--estimator", choices=ESTIMATORS, default=S)
    p.add_argument("--divergence", default=S, help="generator name, e.g. kl or skew_js:0.3")
    p.add_argument("--summaries", default=S, help="comma-separated subset of mauve,fi,mid")
    p.add_argument("--k", type=int, default=S, help="number of quantization buckets")
    p.add_argument("--smoothing", default=S)
    p.add_argument("--c", type=float, default=S, help="scale in exp(-c x)")
    p.add_argument("--grid-size", dest="grid_size", type=int, default=S)
    p.add_argument("--pca-dims", dest="pca_dims", type=int, default=S)
    p.add_argument("--knn-k", dest="knn_k", type=int, default=S)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=S)
    p.add_argument("--bandwidth", type=float, default=S)
    p.add_argument("--l2-penalty", dest="l2_penalty", type=float, default=S)
    p.add_argument("--mc-samples", dest="mc_samples", type=int, default=S)
    p.add_argument("--epsilon", type=float, default=S)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--format", choices=("json", "csv"), default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dfe", description="Divergence frontiers between two embedding samples.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, text in (("compare", "score two embedding files"),
                       ("frontier", "write the frontier curve as CSV")):
        p = sub.add_parser(name, help=text)
        p.add_argument("p_file")
        p.add_argument("q_file")
        p.add_argument("--out", help="write results here instead of stdout")
        _add_run_options(p)

    p = sub.add_parser("quantize", help="write the two quantized histograms as JSON")
    p.add_argument("p_file")
    p.add_argument("q_file")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--smoothing", default="krichevsky_trofimov")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=300)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="error study on synthetic histograms")
    p.add_argument("--p", dest="family_p", required=True, help="zipf:<exponent> or dirichlet:<alpha>")
    p.add_argument("--q", dest="family_q", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, action="append", required=True, help="sample size; repeatable")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--estimators", default="none,krichevsky_trofimov,laplace,braess_sauer,good_turing")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    return parser


def _resolve_config(args) -> RunConfig:
    base = RunConfig.from_json_file(args.config).to_dict() if args.config else {}
    names = {f.name for f in fields(RunConfig)}
    for key, value in vars(args).items():
        if key in names:
            base[key] = value
    return RunConfig.from_dict(base)


def _resolve_seed(seed):
    if seed is None:
        seed = secrets.randbits(32)
        logger.warning("no --seed given; using seed %d", seed)
    return int(seed)


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_pair(p_file, q_file):
    X = read_embeddings(p_file)
    Y = read_embeddings(q_file)
    if X.shape[1] != Y.shape[1]:
        raise ConfigError(f"dimension mismatch: {p_file} has {X.shape[1]} columns, {q_file} has {Y.shape[1]}")
    return X, Y


def _report_record(report, cfg: RunConfig) -> dict:
    k = report.params.get("k", report.params.get("k_neighbors"))
    rec = {
        "schema": SCHEMA_VERSION,
        "mauve": report.mauve if "mauve" in cfg.summaries else None,
        "fi": report.fi if "fi" in cfg.summaries else None,
        "mid": report.mid if "mid" in cfg.summaries else None,
        "estimator": report.estimator,
        "divergence": report.divergence,
        "c": report.scale_c,
        "k": k,
        "seed": cfg.seed,
        "warnings": list(report.warnings),
    }
    return rec


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    X, Y = _load_pair(args.p_file, args.q_file)
    cfg.seed = _resolve_seed(cfg.seed)
    report = run_estimator(X, Y, cfg)
    for w in report.warnings:
        logger.warning(w)
    rec = _report_record(report, cfg)
    if cfg.format == "json":
        _emit(json.dumps(rec) + "\n", args.out)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = [k for k in rec if k != "warnings"]
        writer.writerow(cols + ["warnings"])
        writer.writerow([rec[k] for k in cols] + [";".join(rec["warnings"])])
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_frontier(args) -> int:
    cfg = _resolve_config(args)
    X, Y = _load_pair(args.p_file, args.q_file)
    cfg.seed = _resolve_seed(cfg.seed)
    report = run_estimator(X, Y, cfg)
    for w in report.warnings:
        logger.warning(w)
    lines = ["lambda,x,y,exp_neg_cx,exp_neg_cy"]
    for row in report.curve.to_rows(report.scale_c):
        lines.append(",".join("%.17g" % v for v in row))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_quantize(args) -> int:
    try:
        smoothing = Smoothing.parse(args.smoothing)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.k is not None and args.k < 1:
        raise ConfigError("k must be positive")
    X, Y = _load_pair(args.p_file, args.q_file)
    seed = _resolve_seed(args.seed)
    k = _buckets(RunConfig(k=args.k), len(X) + len(Y))
    model = kmeans_fit(np.vstack([X, Y]), k, seed=seed, max_iters=args.max_iters)
    cx = count_assignments(model, X)
    cy = count_assignments(model, Y)
    rec = {
        "schema": SCHEMA_VERSION,
        "k": model.k,
        "smoothing": smoothing.value,
        "seed": seed,
        "n_p": int(len(X)),
        "n_q": int(len(Y)),
        "p": smooth_counts(cx, smoothing).tolist(),
        "q": smooth_counts(cy, smoothing).tolist(),
        "counts_p": cx.tolist(),
        "counts_q": cy.tolist(),
    }
    _emit(json.dumps(rec) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.k < 1 or args.reps < 1 or any(n < 1 for n in args.n):
        raise ConfigError("k, n and reps must be positive")
    try:
        # the Dirichlet draws use fixed seeds so a given family string always names the same histogram
        sp = SyntheticSpec.parse(args.family_p, args.k, seed=1)
        sq = SyntheticSpec.parse(args.family_q, args.k, seed=2)
        P, Q = make_distribution(sp), make_distribution(sq)
        estimators = [Smoothing.parse(e).value for e in args.estimators.split(",") if e]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result = error_study(P, Q, estimators, args.n, args.reps, seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["family_p", "family_q", "k", "n", "estimator", "reps", "mean_abs_err", "std_err"])
    for row in result.rows():
        writer.writerow([sp.label, sq.label, args.k, row["n"], row["estimator"], row["reps"],
                         "%.17g" % row["mean_abs_err"], "%.17g" % row["std_err"]])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


_COMMANDS = {"compare": cmd_compare, "frontier": cmd_frontier, "quantize": cmd_quantize,
             "simulate": cmd_simulate}


def _fail(code: int, message: str) -> int:
    sys.stderr.write(json.dumps({"error": message, "exit_code": code}) + "\n")
    return code


def _thread_limit():
    value = os.environ.get("DFE_THREADS")
    if not value:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"DFE_THREADS must be a positive integer, got {value!r}") from None
    if n < 1:
        raise ConfigError(f"DFE_THREADS must be a positive integer, got {value!r}")
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    from .ot import SinkhornConvergenceError

    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        with _thread_limit():
            return _COMMANDS[args.command](args)
    except EmbeddingFormatError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except (SinkhornConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, str(exc))
    except OSError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, str(exc))


if __name__ == "__main__":
    sys.exit(main())
