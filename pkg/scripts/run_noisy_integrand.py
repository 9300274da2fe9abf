"""Noisy-integrand study: CV helps with exact values, much less with one-sample estimates."""
import argparse

from pwlcv.benchmarks import noisy_closed_form_variances, run_appendix_b, variance_at
from pwlcv.control_variates import DYADIC_COUNTS, write_convergence_csv

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--trials", type=int, default=4096)
p.add_argument("--seed", type=int, default=42)
p.add_argument("--out", default="out/noisy_integrand.csv")
args = p.parse_args()

rows = run_appendix_b(DYADIC_COUNTS, args.trials, args.seed)
write_convergence_csv(rows, args.out)
closed = noisy_closed_form_variances()
for name in ("mc", "cv", "mc_noisy", "cv_noisy"):
    print(f"{name:9s} n*var @1024 = {1024 * variance_at(rows, name, 1024):.4f} "
          f"(closed form {closed[name]:.4f})")
print(f"cv/mc = {closed['cv'] / closed['mc']:.4f}, "
      f"noisy cv/mc = {closed['cv_noisy'] / closed['mc_noisy']:.4f} (closed form)")
