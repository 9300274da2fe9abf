"""Train a 2x32 net per benchmark and compare plain MC with the CV estimator."""
import argparse

from pwlcv.benchmarks import BENCH_NAMES, run_fig5, variance_at
from pwlcv.mlp import TrainConfig

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--functions", nargs="+", default=list(BENCH_NAMES))
p.add_argument("--epochs", type=int, default=5000)
p.add_argument("--trials", type=int, default=128)
p.add_argument("--seed", type=int, default=42)
p.add_argument("--out-dir", default="out")
args = p.parse_args()

for name in args.functions:
    out = run_fig5(name, TrainConfig(epochs=args.epochs, seed=args.seed), trials=args.trials,
                   seed=args.seed, out_root=args.out_dir)
    rows = out["rows"]
    ratio = variance_at(rows, "cv", 1024) / variance_at(rows, "mc", 1024)
    print(f"{name:9s} G={out['summary']['G'][0]:.6f} pieces={out['summary']['piece_count']:5d} "
          f"var ratio @1024 = {ratio:.4g}  -> {out['dir']}")
