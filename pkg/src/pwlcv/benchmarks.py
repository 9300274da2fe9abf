"""Analytic test integrands and the experiment drivers built on them."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .control_variates import (
    DYADIC_COUNTS,
    EstimatorConfig,
    Integrand,
    SweepRow,
    convergence_sweep,
    cv_estimate,
    mc_estimate,
    replicate,
    summarize,
    write_convergence_csv,
)
from .errors import UnknownFunction
from .integrator import dump_pieces, integrate
from .mlp import Mlp, TrainConfig, save_model, train

GAUSS_NORM = 4.0 / (math.pi * math.erf(1.0) ** 2)
DISK_RADIUS_SQ = 2.0 / math.pi

# Piece counts reported for trained bilinear nets, keyed by (layers, width).
REFERENCE_FACE_COUNTS = {(2, 32): 85, (3, 32): 542, (2, 64): 528, (3, 64): 1570}


@dataclass(frozen=True)
class BenchFunction:
    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    reference_integral: float = 1.0

    def __call__(self, xy):
        return self.eval(np.asarray(xy, dtype=np.float64))

    def integrand(self) -> Integrand:
        return Integrand(self.eval)


def _disk(p):
    return np.where(p[:, 0] ** 2 + p[:, 1] ** 2 < DISK_RADIUS_SQ, 2.0, 0.0)


def _step(p):
    return np.where(p[:, 0] < 1.0 / math.pi, math.pi, 0.0)


def _gaussian(p):
    return GAUSS_NORM * np.exp(-p[:, 0] ** 2 - p[:, 1] ** 2)


def _bilinear(p):
    return 4.0 * p[:, 0] * p[:, 1]


_FUNCTIONS = {"disk": _disk, "step": _step, "gaussian": _gaussian, "bilinear": _bilinear}
BENCH_NAMES = tuple(_FUNCTIONS)


def bench_function(name: str) -> BenchFunction:
    try:
        return BenchFunction(name, _FUNCTIONS[name])
    except KeyError:
        raise UnknownFunction(f"unknown benchmark function {name!r}; "
                              f"choose from {', '.join(BENCH_NAMES)}") from None


def midpoint_quadrature(fn: Callable[[np.ndarray], np.ndarray], n: int = 2048,
                        chunk: int = 1 << 18) -> np.ndarray:
    """Midpoint rule on an ``n x n`` grid over the unit square, per channel."""
    h = 1.0 / n
    c = (np.arange(n) + 0.5) * h
    total = None
    rows_per_chunk = max(1, chunk // n)
    for i in range(0, n, rows_per_chunk):
        xs = c[i:i + rows_per_chunk]
        pts = np.column_stack([np.repeat(xs, n), np.tile(c, len(xs))])
        v = np.asarray(fn(pts), dtype=np.float64).reshape(len(pts), -1).sum(axis=0)
        total = v if total is None else total + v
    return total * h * h


def train_on(name: str, layers: int = 2, width: int = 32, cfg: TrainConfig | None = None,
             seed: int | None = None):
    cfg = cfg or TrainConfig()
    fn = bench_function(name)
    init_seed = cfg.seed if seed is None else seed
    mlp = Mlp.init(layers, width, seed=init_seed)
    return train(mlp, fn.eval, cfg)


# -- variance study on the benchmark functions --------------------------------


def run_fig5(name: str, train_cfg: TrainConfig | None = None, *,
             sample_counts: Sequence[int] = DYADIC_COUNTS, trials: int = 128, seed: int = 42,
             layers: int = 2, width: int = 32, out_root: str | Path | None = "out",
             timestamp: str | None = None, jobs: int = 1) -> dict:
    """Train, integrate exactly, and compare plain MC with the CV estimator.

    Writes ``out_root/<name>/<timestamp>/`` unless ``out_root`` is None.
    """
    train_cfg = train_cfg or TrainConfig(seed=seed)
    fn = bench_function(name)
    mlp, losses = train_on(name, layers, width, train_cfg)
    sl = mlp.slice()
    res = integrate(sl)
    rows = convergence_sweep(fn.integrand(), sl, res.G, sample_counts, trials, seed,
                             reference=fn.reference_integral, jobs=jobs)
    summary = {
        "function": name,
        "layers": layers,
        "width": width,
        "epochs": train_cfg.epochs,
        "seed": seed,
        "G": res.G.tolist(),
        "piece_count": res.piece_count,
        "per_layer_face_counts": res.per_layer_face_counts,
        "final_train_mse": float(losses[-1]),
    }
    out = {"summary": summary, "rows": rows, "mlp": mlp, "losses": losses, "result": res}
    if out_root is not None:
        stamp = timestamp or time.strftime("%Y%m%d-%H%M%S")
        d = Path(out_root) / name / stamp
        d.mkdir(parents=True, exist_ok=True)
        (d / "model.json").write_text(save_model(mlp), encoding="utf-8")
        dump_pieces(sl, d / "pieces.csv", d / "subdivision.svg")
        write_convergence_csv(rows, d / "convergence.csv")
        (d / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        out["dir"] = d
    return out


def variance_at(rows: Sequence[SweepRow], estimator: str, n: int) -> float:
    return next(r.variance for r in rows if r.estimator == estimator and r.n_samples == n)


# -- piece counts vs depth and width ------------------------------------------


@dataclass
class FaceCountRow:
    layers: int
    width: int
    pieces: int
    reference_pieces: int | None
    final_train_mse: float


def run_fig7(name: str = "bilinear",
             configs: Sequence[tuple[int, int]] = ((2, 32), (3, 32), (2, 64), (3, 64)),
             train_cfg: TrainConfig | None = None) -> list[FaceCountRow]:
    train_cfg = train_cfg or TrainConfig()
    table = []
    for layers, width in configs:
        mlp, losses = train_on(name, layers, width, train_cfg)
        res = integrate(mlp.slice())
        table.append(FaceCountRow(layers, width, res.piece_count,
                                  REFERENCE_FACE_COUNTS.get((layers, width)), float(losses[-1])))
    return table


def face_counts_to_json(table: Sequence[FaceCountRow]) -> str:
    return json.dumps([asdict(r) for r in table], indent=2) + "\n"


# -- noisy-integrand experiment -------------------------------------------------
#
# f(x) = 2x on [0, 1], its one-sample estimate 8 x y z with y, z ~ U(0, 1), and
# the control variate g = 0.9 f with known integral 0.9.

CV_SCALE = 0.9


def _f_true(x):
    return 2.0 * x[:, 0]


def _f_noisy(x, rng):
    yz = rng.random((len(x), 2))
    return 8.0 * x[:, 0] * yz[:, 0] * yz[:, 1]


def _g(x):
    return CV_SCALE * 2.0 * x[:, 0]


NOISY_INTEGRAND = Integrand(_f_true, _f_noisy, dim=1)


def noisy_closed_form_variances() -> dict[str, float]:
    """Closed-form per-sample variances of the four estimators."""
    r = 1 - CV_SCALE
    return {
        "mc": 4 / 3 - 1,
        "cv": r * r * (4 / 3 - 1),
        "mc_noisy": 64 / 27 - 1,
        # E[(8xyz - 1.8x)^2] - 0.1^2
        "cv_noisy": 64 / 27 - 2 * 16 * CV_SCALE / 12 + 4 * CV_SCALE**2 / 3 - r * r,
    }


def run_appendix_b(sample_counts: Sequence[int] = DYADIC_COUNTS, trials: int = 128,
                   seed: int = 42) -> list[SweepRow]:
    """Plain MC and CV, each with exact and noisy integrand values.

    Estimators: ``mc``/``cv`` use ``f`` itself, ``mc_noisy``/``cv_noisy`` use
    the one-sample estimates. Sampling is 1D and uniform.
    """
    f = NOISY_INTEGRAND
    estimators = {
        "mc": lambda n, rng: mc_estimate(f, EstimatorConfig(n), rng=rng).estimate,
        "cv": lambda n, rng: cv_estimate(f, _g, CV_SCALE, EstimatorConfig(n), rng=rng).estimate,
        "mc_noisy": lambda n, rng: mc_estimate(f, EstimatorConfig(n), rng=rng, noisy=True).estimate,
        "cv_noisy": lambda n, rng: cv_estimate(f, _g, CV_SCALE, EstimatorConfig(n), rng=rng,
                                               noisy=True).estimate,
    }
    rows = []
    for name, est in estimators.items():
        for n in sample_counts:
            rows.append(summarize(name, n, replicate(est, n, trials, seed), 1.0))
    return rows
