"""Piece counts of trained bilinear nets for depth {2, 3} and width {32, 64}."""
import argparse
import time
from pathlib import Path

from pwlcv.benchmarks import face_counts_to_json, run_fig7
from pwlcv.mlp import TrainConfig

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--epochs", type=int, default=5000)
p.add_argument("--seed", type=int, default=42)
p.add_argument("--out", default="out/fig7_face_counts.json")
args = p.parse_args()

t0 = time.time()
table = run_fig7(train_cfg=TrainConfig(epochs=args.epochs, seed=args.seed))
Path(args.out).parent.mkdir(parents=True, exist_ok=True)
Path(args.out).write_text(face_counts_to_json(table))
for r in table:
    print(f"{r.layers}x{r.width}: {r.pieces} pieces (reported {r.reference_pieces}), "
          f"train mse {r.final_train_mse:.2e}")
print(f"{time.time() - t0:.0f} s")
