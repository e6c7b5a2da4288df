"""Command-line entry point: ``tubal <subcommand> ...``.

Exit codes: 0 success, 1 solver did not converge (single solves), 2 usage or
I/O error.
"""

import argparse
import logging
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import tensor_io
from .completion import SolverConfig, complete_entrywise, complete_tubal
from .diagnostics import certificate_report, golfing_certificate, mu0, union_mask
from .experiments import (DiagnosticsConfig, PhaseGridConfig, generate_low_tubal_rank,
                          run_diagnostics_sweep, run_phase_grid)
from .sampling import ENTRYWISE, TUBAL, TangentSpace, bernoulli_mask, tubal_mask
from .tsvd import multi_rank, t_svd, t_svd_reduced, tubal_rank

log = logging.getLogger("tubal")


class UsageError(Exception):
    pass


def _out(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _overrides(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_gen(args):
    n1, n2, n3 = args.shape
    M = generate_low_tubal_rank(n1, n2, n3, args.rank, args.seed)
    path = args.output or _out(args, "tensor.tsv3")
    tensor_io.write_tensor(path, M)
    print(f"wrote {path}")
    return 0


def cmd_sample(args):
    n1, n2, n3 = args.shape
    sampler = bernoulli_mask if args.kind == ENTRYWISE else tubal_mask
    mask = sampler(n1, n2, n3, args.p, args.seed)
    path = args.output or _out(args, "mask.tsm3")
    tensor_io.write_mask(path, mask)
    print(f"wrote {path} observed={mask.n_observed}")
    return 0


def cmd_tsvd(args):
    M = tensor_io.read_tensor(args.tensor)
    factors = t_svd_reduced(M, args.rank) if args.rank else t_svd(M)
    directory = args.output or args.out_dir
    tensor_io.write_factors(directory, factors)
    print(f"tubal_rank={tubal_rank(M, args.tol)}")
    print("multi_rank=" + ",".join(str(v) for v in multi_rank(M, args.tol)))
    print(f"factors={directory}")
    return 0


def cmd_complete(args):
    observed = tensor_io.read_tensor(args.tensor)
    mask = tensor_io.read_mask(args.mask)
    observed = np.where(mask.to_dense(), observed, 0.0)
    cfg = SolverConfig(rho=args.rho, max_iters=args.max_iters,
                       tol_primal=args.tol, tol_dual=args.tol, verbose=args.verbose)
    solve = complete_entrywise if mask.kind == ENTRYWISE else complete_tubal
    X, report = solve(observed, mask, cfg)
    path = args.output or _out(args, "completed.tsv3")
    tensor_io.write_tensor(path, X)
    lines = [
        f"output={path}",
        f"iterations={report.iterations}",
        f"converged={report.converged}",
        f"primal_residual={report.primal_residuals[-1]!r}",
        f"dual_residual={report.dual_residuals[-1]!r}",
        f"rse_observed={report.rse_observed!r}",
    ]
    if args.reference:
        from .completion import rse

        lines.append(f"rse={rse(X, tensor_io.read_tensor(args.reference))!r}")
    text = "\n".join(lines) + "\n"
    with open(_out(args, "report.txt"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0 if report.converged else 1


def cmd_phase_grid(args):
    over = _overrides(args.set)
    if args.seed is not None:
        over["base_seed"] = str(args.seed)
    if args.config:
        cfg = PhaseGridConfig.from_file(args.config, **over)
    else:
        cfg = PhaseGridConfig.from_dict(over)
    grid = run_phase_grid(cfg, out_dir=args.out_dir, threads=args.threads)
    print("rank\\rate " + " ".join(f"{p:5.2f}" for p in grid.rates))
    for r, row in zip(grid.ranks, grid.recovery):
        print(f"{r:9d} " + " ".join(f"{v:5.2f}" for v in row))
    print(f"csv={os.path.join(args.out_dir, 'phase_grid.csv')}")
    return 0


def cmd_diagnose(args):
    if args.sweep:
        over = _overrides(args.set)
        if args.seed is not None:
            over["base_seed"] = str(args.seed)
        cfg = DiagnosticsConfig.from_file(args.sweep, **over)
        path = _out(args, "diagnostics.csv")
        rows = run_diagnostics_sweep(cfg, path, threads=args.threads)
        passed = sum(bool(r.get("passed")) for r in rows)
        print(f"rows={len(rows)} passed={passed} csv={path}")
        return 0
    if args.factors:
        factors = tensor_io.read_factors(args.factors)
    elif args.tensor:
        if not args.rank:
            raise UsageError("--tensor requires --rank")
        factors = t_svd_reduced(tensor_io.read_tensor(args.tensor), args.rank)
    else:
        raise UsageError("diagnose needs --factors, --tensor or --sweep")
    text = mu0(factors).to_text()
    T = TangentSpace.from_factors(factors)
    if args.golf is not None:
        Y, batches = golfing_certificate(T, args.golf, seed=args.seed or 0)
        mask = union_mask(batches, p=args.golf)
        text += certificate_report(Y, T, mask, args.golf, t0=len(batches)).to_text()
    elif args.mask:
        from .diagnostics import prop1_condition1

        mask = tensor_io.read_mask(args.mask)
        text += f"cond1={prop1_condition1(T, mask)!r}\n"
    with open(_out(args, "diagnostics.txt"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tubal", description="t-SVD tensor completion toolkit")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def shape(p):
        p.add_argument("--shape", type=int, nargs=3, metavar=("N1", "N2", "N3"), default=[30, 30, 20])

    p = sub.add_parser("gen", help="synthetic low-tubal-rank tensor")
    shape(p)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sample", help="write a sampling mask")
    shape(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--kind", choices=[ENTRYWISE, TUBAL], default=ENTRYWISE)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("tsvd", help="factorize a tensor file")
    p.add_argument("tensor")
    p.add_argument("--rank", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("-o", "--output", help="directory for U/S/V.tsv3")
    p.set_defaults(func=cmd_tsvd)

    p = sub.add_parser("complete", help="complete a tensor from a mask")
    p.add_argument("tensor")
    p.add_argument("mask")
    p.add_argument("--rho", type=float)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--reference", help="ground-truth tensor for RSE")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("phase-grid", help="recovery-rate grid over rank x sampling rate")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_phase_grid)

    p = sub.add_parser("diagnose", help="incoherence and certificate report")
    p.add_argument("--factors", help="directory holding U.tsv3 and V.tsv3")
    p.add_argument("--tensor")
    p.add_argument("--rank", type=int)
    p.add_argument("--mask")
    p.add_argument("--golf", type=float, metavar="P", help="build a golfing certificate at rate P")
    p.add_argument("--sweep", metavar="CONFIG", help="run a seeded sweep from a config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.seed is None and args.command in ("gen", "sample"):
        args.seed = 0
    try:
        with threadpool_limits(limits=1):
            return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
