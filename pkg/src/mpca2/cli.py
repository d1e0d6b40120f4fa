"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (including a
failed ``verify`` check).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .baselines import pca_fit, pca_reconstruct, twod2pca_fit
from .errors import NumericalError, ValidationError
from .glram import MpcaConfig, glram_fit, reconstruct
from .harness import METHODS, ReportRow, compare, parse_grid, verify
from .linalg import MatrixDataset
from .simulator import random_spec, sample

log = logging.getLogger("mpca2")


def _add_data_args(parser, flag="--in", dest="inp"):
    parser.add_argument(flag, dest=dest, required=True, help="PGM directory, CSV or MT2 binary file")
    parser.add_argument("--format", choices=["pgm-dir", "csv", "bin"], help="input format (guessed if omitted)")
    parser.add_argument("--shape", help="PxQ sample shape for CSV input (square inferred otherwise)")


def _add_mpca_args(parser):
    parser.add_argument("--tol", type=float, default=1e-10, help="relative objective change for convergence")
    parser.add_argument("--stat-tol", type=float, default=1e-10, help="fixed-point residual for convergence")
    parser.add_argument("--max-iter", type=int, default=500)
    parser.add_argument("--restarts", type=int, default=5)
    parser.add_argument("--init", choices=["row-scatter", "random"], default="row-scatter")
    parser.add_argument("--seed", type=int, default=0)


def _mpca_config(args, pdim=1, qdim=1):
    return MpcaConfig(
        pdim=pdim,
        qdim=qdim,
        tol=args.tol,
        stat_tol=args.stat_tol,
        max_iter=args.max_iter,
        init=args.init,
        restarts=args.restarts,
        seed=args.seed,
    )


def _write_data(path, data):
    if Path(path).suffix.lower() == ".csv":
        io.write_csv(path, data)
    else:
        io.write_bin(path, data)


def cmd_spec(args):
    spec = random_spec(args.p, args.q, args.p0, args.q0, args.sigma2, args.seed)
    io.save_spec(args.out, spec)
    log.info("wrote model spec %s", args.out)


def cmd_simulate(args):
    spec = io.load_spec(args.spec)
    data = sample(spec, args.n, args.seed)
    _write_data(args.out, data)
    log.info("wrote %d samples of shape %s to %s", data.n, data.shape, args.out)


def cmd_fit(args):
    data = io.ingest(args.inp, args.format, args.shape)
    if args.method == "mpca":
        cfg = _mpca_config(args, args.pdim, args.qdim)
        basis = glram_fit(data, cfg)
        config = cfg.to_dict()
        log.info(
            "objective %.10g after %d iterations (converged=%s, restart %d)",
            basis.value,
            basis.iterations,
            basis.converged,
            basis.best_restart,
        )
    elif args.method == "2d2pca":
        basis = twod2pca_fit(data, args.pdim, args.qdim)
        config = {"pdim": args.pdim, "qdim": args.qdim}
    else:
        k = args.k or args.pdim * args.qdim
        basis = pca_fit(data, k)
        config = {"k": k}
    io.save_basis(args.out, basis, data.mean, config)
    log.info("wrote %s basis to %s", args.method, args.out)


def cmd_reconstruct(args):
    basis, mean, header = io.load_basis(args.basis)
    data = io.ingest(args.inp, args.format, args.shape)
    if data.shape != tuple(mean.shape):
        raise ValidationError(f"data shape {data.shape} does not match basis shape {mean.shape}")
    if header["kind"] == "pca":
        recon = pca_reconstruct(data, basis, mean=mean)
    else:
        recon = reconstruct(data, basis, mean=mean)
    _write_data(args.out, recon)
    if args.pgm_dir:
        out = Path(args.pgm_dir)
        out.mkdir(parents=True, exist_ok=True)
        width = len(str(recon.n))
        for i, img in enumerate(recon.samples):
            io.write_pgm(out / f"{i:0{width}d}.pgm", img)
    err = np.sum((data.samples - recon.samples) ** 2) / data.n
    log.info("mean squared reconstruction error %.6g", err)


def _split(data, frac, seed):
    if not 0 < frac < 1:
        raise ValidationError(f"split must lie in (0, 1), got {frac}")
    idx = np.random.default_rng(seed).permutation(data.n)
    cut = int(round(frac * data.n))
    return MatrixDataset(data.samples[idx[:cut]]), MatrixDataset(data.samples[idx[cut:]])


def cmd_compare(args):
    data = io.ingest(args.train, args.format, args.shape)
    if args.test:
        train, test = data, io.ingest(args.test, args.format, args.shape)
    elif args.split:
        train, test = _split(data, args.split, args.seed)
    else:
        raise ValidationError("compare needs --test or --split")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}; expected some of {METHODS}")
    rows = compare(train, test, parse_grid(args.grid), methods, _mpca_config(args), args.workers)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=ReportRow.columns())
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_dict())
    for row in rows:
        print(
            f"{row.method:>7} {row.pdim:>3}x{row.qdim:<3} k={row.k:<5} "
            f"train={row.train_error:.6g} test={row.test_error:.6g} ev={row.explained_variance:.4f}"
        )


def cmd_verify(args):
    spec = io.load_spec(args.spec)
    report = verify(spec, _mpca_config(args))
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    for c in report["checks"]:
        residual = "-" if c["residual"] is None else f"{c['residual']:.3g}"
        print(f"{c['status']:>10}  {c['check']:<16} ({c['pdim']},{c['qdim']})  residual={residual}")
    if not report["passed"]:
        raise NumericalError("one or more verification checks failed")


def build_parser():
    parser = argparse.ArgumentParser(prog="mpca2", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spec", help="write a random model spec")
    for name in ("p", "q", "p0", "q0"):
        p.add_argument(f"--{name}", type=int, required=True)
    p.add_argument("--sigma2", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spec)

    p = sub.add_parser("simulate", help="sample a dataset from a model spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file (.csv or MT2 binary)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a basis")
    p.add_argument("--method", choices=METHODS, default="mpca")
    p.add_argument("--pdim", type=int, required=True)
    p.add_argument("--qdim", type=int, required=True)
    p.add_argument("--k", type=int, help="PCA components (default pdim*qdim)")
    _add_mpca_args(p)
    _add_data_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reconstruct", help="reconstruct data with a saved basis")
    p.add_argument("--basis", required=True)
    _add_data_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm-dir", help="also dump reconstructions as PGM images")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("compare", help="reconstruction error sweep over methods and dimensions")
    _add_data_args(p, "--train", "train")
    p.add_argument("--test")
    p.add_argument("--split", type=float, help="train fraction when no --test is given")
    p.add_argument("--grid", required=True, help='e.g. "1x1,2x2,4x4"')
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--workers", type=int, default=1)
    _add_mpca_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="check population nesting and shift properties for a spec")
    p.add_argument("--spec", required=True)
    _add_mpca_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        log.error("error: %s", exc)
        return 2
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        log.error("error: %s", exc)
        return 2
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
