"""Command-line entry point: ``pwlcv <verb> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import benchmarks
from .control_variates import convergence_sweep, rows_to_csv
from .errors import DimensionMismatch, MaskOverflow, NonFiniteLoss, PwlcvError
from .geometry import MASK_CAPACITY
from .integrator import dump_pieces, integrate
from .mlp import ActivationSpec, ConditionedSlice, Mlp, TrainConfig, load_model, save_model, train

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("sample counts must be positive")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwlcv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    t = sub.add_parser("train", help="fit a network to a benchmark function or a CSV table")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--function", choices=benchmarks.BENCH_NAMES)
    src.add_argument("--table", type=Path, help="CSV: input columns then target columns")
    t.add_argument("--layers", type=int, default=2)
    t.add_argument("--width", type=int, default=32)
    t.add_argument("--epochs", type=int, default=5000)
    t.add_argument("--batch-size", type=int, default=4096)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--activation", choices=("relu", "leaky_relu"), default="relu")
    t.add_argument("--negative-slope", type=float, default=0.01)
    t.add_argument("--cond-dim", type=int, default=0, help="conditioning columns in --table")
    t.add_argument("--outputs", type=int, default=1, help="target columns in --table")
    t.add_argument("--seed", type=int, default=DEFAULT_SEED)
    t.add_argument("--out", type=Path, required=True)

    i = sub.add_parser("integrate", help="integrate a model exactly over the unit square")
    i.add_argument("--model", type=Path, required=True)
    i.add_argument("--phi", type=_float_list, default=[])
    i.add_argument("--pieces", type=Path)
    i.add_argument("--svg", type=Path)

    e = sub.add_parser("estimate", help="convergence table for one estimator")
    e.add_argument("--model", type=Path)
    e.add_argument("--function", choices=benchmarks.BENCH_NAMES, required=True)
    e.add_argument("--n", type=_int_list, default=[1024])
    e.add_argument("--trials", type=int, default=128)
    e.add_argument("--mode", choices=("mc", "cv", "combined"), default="cv")
    e.add_argument("--m", type=int, default=0)
    e.add_argument("--phi", type=_float_list, default=[])
    e.add_argument("--seed", type=int, default=DEFAULT_SEED)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out", type=Path, required=True)

    b = sub.add_parser("bench", help="reproduce the analytic-function experiments")
    b.add_argument("--experiment", choices=("fig5", "fig7"), default="fig5")
    b.add_argument("--function", choices=benchmarks.BENCH_NAMES, action="append")
    b.add_argument("--epochs", type=int, default=5000)
    b.add_argument("--trials", type=int, default=128)
    b.add_argument("--n", type=_int_list, default=list(benchmarks.DYADIC_COUNTS))
    b.add_argument("--seed", type=int, default=DEFAULT_SEED)
    b.add_argument("--out-dir", type=Path, default=Path("out"))
    b.add_argument("--timestamp")
    b.add_argument("--jobs", type=int, default=1)

    d = sub.add_parser("dump-subdivision", help="write the pieces of a model as CSV and/or SVG")
    d.add_argument("--model", type=Path, required=True)
    d.add_argument("--phi", type=_float_list, default=[])
    d.add_argument("--csv", type=Path)
    d.add_argument("--svg", type=Path)

    a = sub.add_parser("appendix-b", help="control variates with noisy integrand estimates")
    a.add_argument("--n", type=_int_list, default=list(benchmarks.DYADIC_COUNTS))
    a.add_argument("--trials", type=int, default=128)
    a.add_argument("--seed", type=int, default=DEFAULT_SEED)
    a.add_argument("--out", type=Path, required=True)
    return p


def _load(path: Path) -> Mlp:
    return load_model(path.read_text(encoding="utf-8"))


def _slice(mlp: Mlp, phi) -> ConditionedSlice:
    try:
        return mlp.slice(phi)
    except DimensionMismatch as exc:
        raise UsageError(str(exc)) from None


def _validate(args):
    for name in ("epochs", "trials", "layers", "batch_size", "jobs"):
        if getattr(args, name, 1) < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1")
    if getattr(args, "trials", 2) < 2:
        raise UsageError("--trials must be >= 2")
    if getattr(args, "width", 1) > MASK_CAPACITY:
        raise UsageError(str(MaskOverflow(
            f"hidden width {args.width} exceeds mask capacity {MASK_CAPACITY}")))
    if getattr(args, "width", 1) < 1:
        raise UsageError("--width must be >= 1")
    if getattr(args, "m", 0) < 0:
        raise UsageError("--m must be >= 0")
    if args.verb == "estimate" and args.mode != "mc" and args.model is None:
        raise UsageError(f"--mode {args.mode} needs --model")
    if args.verb == "dump-subdivision" and args.csv is None and args.svg is None:
        raise UsageError("give --csv and/or --svg")


def cmd_train(args) -> int:
    if args.activation == "leaky_relu":
        act = ActivationSpec.leaky(args.negative_slope)
    else:
        act = ActivationSpec()
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, seed=args.seed)
    if args.function:
        target = benchmarks.bench_function(args.function).eval
        mlp = Mlp.init(args.layers, args.width, activation=act, seed=args.seed)
    else:
        data = np.loadtxt(args.table, delimiter=",", skiprows=1, ndmin=2)
        n_in = 2 + args.cond_dim
        if data.shape[1] != n_in + args.outputs:
            raise UsageError(f"table has {data.shape[1]} columns, expected {n_in + args.outputs}")
        target = (data[:, :n_in], data[:, n_in:])
        mlp = Mlp.init(args.layers, args.width, cond_dim=args.cond_dim, outputs=args.outputs,
                       activation=act, seed=args.seed)
    trained, losses = train(mlp, target, cfg)
    args.out.write_text(save_model(trained), encoding="utf-8")
    print(f"final_mse = {float(losses[-1])!r}")
    print(f"model written to {args.out}")
    return 0


def cmd_integrate(args) -> int:
    sl = _slice(_load(args.model), args.phi)
    if args.pieces is not None or args.svg is not None:
        dump_pieces(sl, args.pieces, args.svg)
    res = integrate(sl)
    for k, g in enumerate(res.G):
        print(f"G[{k}] = {float(g)!r}")
    print(f"pieces = {res.piece_count}")
    return 0


def estimate_rows(args):
    """Library call behind ``estimate``; shared with the golden-file tests."""
    fn = benchmarks.bench_function(args.function)
    sl = G = None
    if args.mode != "mc":
        sl = _slice(_load(args.model), args.phi)
        G = integrate(sl).G
    return convergence_sweep(fn.integrand(), sl, G, args.n, args.trials, args.seed,
                             reference=fn.reference_integral, estimators=[args.mode],
                             m=args.m, jobs=args.jobs)


def cmd_estimate(args) -> int:
    rows = estimate_rows(args)
    args.out.write_text(rows_to_csv(rows), encoding="utf-8")
    for r in rows:
        print(f"{r.estimator} n={r.n_samples} mean={r.mean!r} variance={r.variance!r}")
    return 0


def cmd_bench(args) -> int:
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed)
    if args.experiment == "fig7":
        table = benchmarks.run_fig7("bilinear", train_cfg=cfg)
        args.out_dir.mkdir(parents=True, exist_ok=True)
        (args.out_dir / "fig7_face_counts.json").write_text(
            benchmarks.face_counts_to_json(table), encoding="utf-8")
        for r in table:
            print(f"{r.layers}x{r.width}: pieces={r.pieces} (reported {r.reference_pieces})")
        return 0
    for name in args.function or benchmarks.BENCH_NAMES:
        out = benchmarks.run_fig5(name, cfg, sample_counts=args.n, trials=args.trials,
                                  seed=args.seed, out_root=args.out_dir,
                                  timestamp=args.timestamp, jobs=args.jobs)
        s = out["summary"]
        n_max = max(args.n)
        ratio = (benchmarks.variance_at(out["rows"], "cv", n_max)
                 / benchmarks.variance_at(out["rows"], "mc", n_max))
        print(f"{name}: G={s['G'][0]!r} pieces={s['piece_count']} "
              f"train_mse={s['final_train_mse']:.3g} var_ratio@{n_max}={ratio:.4g} -> {out['dir']}")
    return 0


def cmd_dump(args) -> int:
    sl = _slice(_load(args.model), args.phi)
    n = dump_pieces(sl, args.csv, args.svg)
    print(f"pieces = {n}")
    return 0


def cmd_appendix_b(args) -> int:
    rows = benchmarks.run_appendix_b(args.n, args.trials, args.seed)
    args.out.write_text(rows_to_csv(rows), encoding="utf-8")
    n_max = max(args.n)
    mc = benchmarks.variance_at(rows, "mc", n_max)
    mcn = benchmarks.variance_at(rows, "mc_noisy", n_max)
    print(f"cv/mc variance ratio @ {n_max} = {benchmarks.variance_at(rows, 'cv', n_max) / mc:.4g}")
    print(f"cv_noisy/mc_noisy variance ratio @ {n_max} = "
          f"{benchmarks.variance_at(rows, 'cv_noisy', n_max) / mcn:.4g}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "integrate": cmd_integrate,
    "estimate": cmd_estimate,
    "bench": cmd_bench,
    "dump-subdivision": cmd_dump,
    "appendix-b": cmd_appendix_b,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        if hasattr(args, "seed"):
            print(f"seed = {args.seed}")
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pwlcv {args.verb}: error: {exc}", file=sys.stderr)
        return 2
    except (NonFiniteLoss, PwlcvError, OSError, ValueError) as exc:
        print(f"pwlcv {args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
