"""Command-line experiment harness.

Four subcommands cover the full loop: ``synth`` writes a seeded dataset to
disk, ``recover`` fits a single subspace, ``cluster`` fits a union of
subspaces, and ``eval`` scores saved artifacts against ground truth.

Exit codes: 0 success, 1 usage error, 2 unreadable or inconsistent data,
3 numerical failure.  All randomness derives from ``--seed`` through
``numpy.random.default_rng``; ``--repeats N`` reruns an experiment with
seeds ``seed, seed+1, ...`` writing one set of artifacts per repeat.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import formats
from .clustering import cluster
from .errors import (
    AllColumnsUnusable,
    DegenerateGradient,
    RankDeficient,
    Underdetermined,
    ZeroDenominator,
    ZeroVector,
)
from .geometry import Subspace, principal_angle
from .metrics import match_and_angles, project_columns, relative_residual, segmentation_error
from .recovery import RecoveryConfig, run
from .stepsize import StepParams
from .synth import SyntheticSpec, gen_low_rank, gen_union

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (
    AllColumnsUnusable,
    DegenerateGradient,
    RankDeficient,
    Underdetermined,
    ZeroVector,
    ZeroDenominator,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--passes", type=float, default=None)
    p.add_argument("--angle-tol", type=float, default=None)
    p.add_argument("--rank", "-d", type=int, default=None)
    p.add_argument("--eta0", type=float, default=1.0)
    p.add_argument("--mu-max", type=float, default=15.0)
    p.add_argument("--mu-min", type=float, default=0.0)
    p.add_argument("--fmax", type=float, default=0.5)
    p.add_argument("--fmin", type=float, default=-1.0)
    p.add_argument("--omega", type=float, default=0.1)
    p.add_argument(
        "--step-rule",
        choices=["adaptive", "diminishing", "constant", "grouse"],
        default="adaptive",
    )
    p.add_argument("--dim-scale", type=float, default=1.0)
    p.add_argument("--const-eta", type=float, default=1.0)


def _add_io(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data")
    p.add_argument("--mask")
    p.add_argument("--truth")
    p.add_argument("--truth-labels")
    p.add_argument("--basis-out")
    p.add_argument("--trace-out")
    p.add_argument("--labels-out")


def build_parser() -> _Parser:
    parser = _Parser(prog="gasg21", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="write a seeded synthetic dataset")
    ps.add_argument("--mode", choices=["low-rank", "union"], default="low-rank")
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--m", type=int, default=None)
    ps.add_argument("--d", type=int, required=True)
    ps.add_argument("--k", type=int, default=1)
    ps.add_argument("--per", type=int, default=None)
    ps.add_argument("--outliers", type=float, default=0.0)
    ps.add_argument("--observe", type=float, default=1.0)
    ps.add_argument("--smin", type=float, default=2000.0)
    ps.add_argument("--smax", type=float, default=10000.0)
    ps.add_argument("--outlier-sigma", type=float, default=1.0)
    ps.add_argument("--seed", type=int, default=0)
    _add_io(ps)

    pr = sub.add_parser("recover", help="fit one subspace to a dataset")
    _add_shared(pr)
    _add_io(pr)

    pc = sub.add_parser("cluster", help="fit a union of subspaces")
    _add_shared(pc)
    pc.add_argument("--k", type=int, required=True)
    pc.add_argument("--q-factor", type=int, default=10)
    pc.add_argument("--neighbors", type=int, default=None)
    pc.add_argument("--max-iter", type=int, default=None)
    _add_io(pc)

    pe = sub.add_parser("eval", help="score saved artifacts against truth")
    pe.add_argument("--k", type=int, default=1)
    pe.add_argument("--json", action="store_true")
    _add_io(pe)
    return parser


def _step_params(args) -> StepParams:
    return StepParams(
        f_max=args.fmax,
        f_min=args.fmin,
        omega=args.omega,
        mu_min=args.mu_min,
        mu_max=args.mu_max,
        eta0=args.eta0,
    )


def _iterations(args, m: int, default: int) -> int:
    if args.iters is not None:
        return args.iters
    if args.passes is not None:
        return int(round(args.passes * m))
    return default


def _derived(path: str | None, repeat: int, repeats: int) -> str | None:
    """Per-repeat output path: untouched for a single run, ``.rN`` inserted
    before the extension otherwise."""
    if path is None or repeats == 1:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}.r{repeat}{ext}"


def cmd_synth(args) -> int:
    if args.data is None:
        print("synth requires --data", file=sys.stderr)
        return EXIT_USAGE
    if args.mode == "low-rank":
        if args.m is None:
            print("low-rank mode requires --m", file=sys.stderr)
            return EXIT_USAGE
        spec = SyntheticSpec(
            n=args.n,
            m=args.m,
            d=args.d,
            singular_range=(args.smin, args.smax),
            outlier_fraction=args.outliers,
            observe_fraction=args.observe,
            outlier_sigma=args.outlier_sigma,
            rng_seed=args.seed,
        )
        columns, truth = gen_low_rank(spec)
    else:
        if args.per is None:
            print("union mode requires --per", file=sys.stderr)
            return EXIT_USAGE
        columns, truth = gen_union(
            k=args.k,
            d=args.d,
            n=args.n,
            inliers_per_subspace=args.per,
            outlier_fraction=args.outliers,
            observe_fraction=args.observe,
            rng=np.random.default_rng(args.seed),
            outlier_sigma=args.outlier_sigma,
        )
    formats.write_triplets(args.data, columns)
    if args.mask:
        formats.write_mask(args.mask, columns)
    if args.truth:
        if len(truth.subspaces) == 1:
            formats.write_basis(args.truth, truth.subspaces[0])
        else:
            formats.write_bases(args.truth, truth.subspaces)
    if args.truth_labels:
        formats.write_labels(args.truth_labels, truth.labels)
    print(f"wrote {len(columns)} columns to {args.data}")
    return EXIT_OK


def _recover_once(args, columns, truth, seed: int, basis_out, trace_out) -> None:
    m = len(columns)
    cfg = RecoveryConfig(
        rank=args.rank,
        step_rule=args.step_rule,
        step_params=_step_params(args),
        dim_scale=args.dim_scale,
        constant_eta=args.const_eta,
        max_iterations=_iterations(args, m, default=1000),
        rng_seed=seed,
        truth=truth,
        angle_tolerance=args.angle_tol,
    )
    t0 = time.perf_counter()
    U, trace = run(columns, cfg)
    wall = time.perf_counter() - t0
    if basis_out:
        formats.write_basis(basis_out, U)
    if trace_out:
        formats.write_trace(trace_out, trace)
    parts = [f"iterations {len(trace.records)}", f"wall {wall:.3f}s"]
    if truth is not None:
        parts.append(f"angle {trace.final_angle():.6e}")
    print("  ".join(parts))


def cmd_recover(args) -> int:
    if args.data is None or args.rank is None:
        print("recover requires --data and --rank", file=sys.stderr)
        return EXIT_USAGE
    columns = formats.read_triplets(args.data)
    truth = formats.read_basis(args.truth) if args.truth else None
    for r in range(args.repeats):
        _recover_once(
            args,
            columns,
            truth,
            seed=args.seed + r,
            basis_out=_derived(args.basis_out, r, args.repeats),
            trace_out=_derived(args.trace_out, r, args.repeats),
        )
    return EXIT_OK


def _cluster_once(args, columns, seed: int, basis_out, trace_out, labels_out) -> None:
    m = len(columns)
    max_iter = args.max_iter if args.max_iter is not None else 20 * m
    t0 = time.perf_counter()
    model = cluster(
        columns,
        k=args.k,
        d=args.rank,
        q=args.q_factor * args.k,
        max_iter=max_iter,
        rng=np.random.default_rng(seed),
        neighborhood_size=args.neighbors,
        step_params=_step_params(args),
    )
    wall = time.perf_counter() - t0
    if basis_out:
        formats.write_bases(basis_out, model.subspaces)
    if labels_out:
        formats.write_labels(labels_out, model.assignments)
    if trace_out and model.traces is not None:
        for path, trace in zip(
            formats.basis_paths(trace_out, len(model.traces)), model.traces
        ):
            formats.write_trace(path, trace)
    print(f"clusters {args.k}  iterations {max_iter}  wall {wall:.3f}s")
    if args.truth:
        true_bases = formats.read_bases(args.truth, args.k)
        report = match_and_angles(true_bases, model.subspaces)
        print(
            f"angle worst {report.worst:.6e}  median {report.median:.6e}  "
            f"mean {report.mean:.6e}"
        )
    if args.truth_labels:
        true_labels = formats.read_labels(args.truth_labels)
        err = segmentation_error(
            true_labels, model.assignments, outlier_mask=true_labels < 0
        )
        print(f"segmentation error {err:.2f}%")


def cmd_cluster(args) -> int:
    if args.data is None or args.rank is None:
        print("cluster requires --data and --rank", file=sys.stderr)
        return EXIT_USAGE
    if args.k < 1:
        print("--k must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    columns = formats.read_triplets(args.data)
    if args.k == 1:
        # A single cluster is plain recovery; reuse that pipeline so the
        # artifacts match cmd_recover byte for byte on the same seed.
        truth = None
        if args.truth:
            truth = formats.read_basis(args.truth)
        if args.iters is None and args.passes is None and args.max_iter is not None:
            args.iters = args.max_iter
        for r in range(args.repeats):
            _recover_once(
                args,
                columns,
                truth,
                seed=args.seed + r,
                basis_out=_derived(args.basis_out, r, args.repeats),
                trace_out=_derived(args.trace_out, r, args.repeats),
            )
            if args.labels_out:
                labels = np.zeros(len(columns), dtype=np.intp)
                for j, col in enumerate(columns):
                    if col.observed_count < args.rank:
                        labels[j] = -1
                formats.write_labels(
                    _derived(args.labels_out, r, args.repeats), labels
                )
        return EXIT_OK
    for r in range(args.repeats):
        _cluster_once(
            args,
            columns,
            seed=args.seed + r,
            basis_out=_derived(args.basis_out, r, args.repeats),
            trace_out=_derived(args.trace_out, r, args.repeats),
            labels_out=_derived(args.labels_out, r, args.repeats),
        )
    return EXIT_OK


def cmd_eval(args) -> int:
    report: dict[str, float] = {}
    if args.basis_out and args.truth:
        if args.k == 1:
            U = formats.read_basis(args.basis_out)
            T = formats.read_basis(args.truth)
            report["angle"] = principal_angle(U, T)
        else:
            recovered = formats.read_bases(args.basis_out, args.k)
            true_bases = formats.read_bases(args.truth, args.k)
            angles = match_and_angles(true_bases, recovered)
            report["angle_worst"] = angles.worst
            report["angle_median"] = angles.median
            report["angle_mean"] = angles.mean
    if args.basis_out and args.data and args.k == 1:
        columns = formats.read_triplets(args.data)
        U = formats.read_basis(args.basis_out)
        n = U.ambient_dim
        full = [c for c in columns if c.observed_count == n]
        if full:
            X = np.stack([c.values for c in full], axis=1)
            report["relative_residual"] = relative_residual(
                X, project_columns(U, X)
            )
    if args.labels_out and args.truth_labels:
        pred = formats.read_labels(args.labels_out)
        true_labels = formats.read_labels(args.truth_labels)
        report["segmentation_error_pct"] = segmentation_error(
            true_labels, pred, outlier_mask=true_labels < 0
        )
    if not report:
        print(
            "eval needs artifacts: --basis-out with --truth and/or --data, "
            "or --labels-out with --truth-labels",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        for key in sorted(report):
            print(f"{key} {report[key]:.6e}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "synth": cmd_synth,
        "recover": cmd_recover,
        "cluster": cmd_cluster,
        "eval": cmd_eval,
    }
    try:
        return handlers[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
