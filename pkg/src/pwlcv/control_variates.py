"""Monte Carlo estimators with and without a control variate.

All estimators sample uniformly, so the density is 1 over the whole domain
and drops out of every formula. ``alpha`` is kept as a config field but is
fixed to 1.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .mlp import ConditionedSlice

DYADIC_COUNTS = tuple(2**k for k in range(11))  # 1 .. 1024
CSV_COLUMNS = ("estimator", "n_samples", "trial_count", "mean", "variance", "mse")


@dataclass
class Integrand:
    """``eval`` maps ``(n, dim)`` points to ``(n,)`` or ``(n, K)`` values.

    ``noisy_eval(points, rng)`` optionally returns an unbiased one-sample
    estimate of ``eval`` at each point.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    noisy_eval: Optional[Callable[[np.ndarray, np.random.Generator], np.ndarray]] = None
    dim: int = 2

    def values(self, pts, rng=None, noisy=False) -> np.ndarray:
        if noisy:
            if self.noisy_eval is None:
                raise ValueError("integrand has no noisy estimator")
            out = self.noisy_eval(pts, rng)
        else:
            out = self.eval(pts)
        out = np.asarray(out, dtype=np.float64)
        return out.reshape(len(pts), -1)


@dataclass
class EstimatorConfig:
    n_samples: int
    alpha: float = 1.0
    seed: int = 42
    sampler: str = "uniform-unit-square"

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.alpha != 1.0:
            raise ValueError("alpha is fixed to 1")
        if self.sampler != "uniform-unit-square":
            raise ValueError(f"unsupported sampler {self.sampler!r}")


@dataclass
class EstimatorReport:
    estimate: np.ndarray
    n: int
    empirical_variance: np.ndarray
    mse_vs_reference: Optional[np.ndarray] = None


def trial_rng(seed: int, *stream) -> np.random.Generator:
    """Independent generator for one (seed, stream ids...) combination."""
    return np.random.default_rng([seed, *stream])


def _report(samples: np.ndarray, offset, reference) -> EstimatorReport:
    n = samples.shape[0]
    est = offset + samples.mean(axis=0)
    var = samples.var(axis=0, ddof=1) / n if n > 1 else np.zeros(samples.shape[1])
    mse = None if reference is None else (est - np.asarray(reference)) ** 2
    return EstimatorReport(est, n, var, mse)


def _points(rng, n, dim):
    return rng.random((n, dim))


def mc_estimate(f: Integrand, cfg: EstimatorConfig, *, rng=None, noisy=False,
                reference=None) -> EstimatorReport:
    """Plain average of ``f`` at uniform samples.

    ``empirical_variance`` is the estimated variance of the returned estimate.
    """
    rng = rng if rng is not None else trial_rng(cfg.seed)
    pts = _points(rng, cfg.n_samples, f.dim)
    return _report(f.values(pts, rng, noisy), 0.0, reference)


def _check_G(G):
    G = np.atleast_1d(np.asarray(G, dtype=np.float64))
    if not np.all(np.isfinite(G)):
        raise ValueError("control variate integral must be finite")
    return G


def _cv_terms(f, g, pts, rng, noisy, alpha):
    return f.values(pts, rng, noisy) - alpha * np.asarray(g(pts), dtype=np.float64).reshape(len(pts), -1)


def cv_estimate(f: Integrand, slice: ConditionedSlice | Callable, G, cfg: EstimatorConfig, *,
                rng=None, noisy=False, reference=None) -> EstimatorReport:
    """``alpha * G + mean(f - alpha * g)`` over uniform samples.

    ``slice`` is any vectorized control variate; a ``ConditionedSlice`` is
    evaluated with ``forward_batch``.
    """
    G = _check_G(G)
    g = slice.forward_batch if isinstance(slice, ConditionedSlice) else slice
    rng = rng if rng is not None else trial_rng(cfg.seed)
    pts = _points(rng, cfg.n_samples, f.dim)
    return _report(_cv_terms(f, g, pts, rng, noisy, cfg.alpha), cfg.alpha * G, reference)


def combined_estimate(f: Integrand, slice, G, m: int, n: int, seed: int = 42, *,
                      rng=None, noisy=False, reference=None) -> EstimatorReport:
    """Weighted mix of an ``m``-sample plain and an ``n``-sample CV estimate.

    The two parts use disjoint samples: the first ``m`` draws feed the plain
    average, the remaining ``n`` the control-variate residual. Weights are
    ``m/(m+n)`` and ``n/(m+n)``.
    """
    if m < 0 or n < 1:
        raise ValueError("need m >= 0 and n >= 1")
    G = _check_G(G)
    g = slice.forward_batch if isinstance(slice, ConditionedSlice) else slice
    rng = rng if rng is not None else trial_rng(seed)
    pts = _points(rng, m + n, f.dim)
    cv = _report(_cv_terms(f, g, pts[m:], rng, noisy, 1.0), G, reference)
    if m == 0:
        return cv
    plain = _report(f.values(pts[:m], rng, noisy), 0.0, reference)
    wm, wn = m / (m + n), n / (m + n)
    est = wm * plain.estimate + wn * cv.estimate
    var = wm**2 * plain.empirical_variance + wn**2 * cv.empirical_variance
    mse = None if reference is None else (est - np.asarray(reference)) ** 2
    return EstimatorReport(est, m + n, var, mse)


def combined_weights(m: int, n: int) -> tuple[float, float]:
    return m / (m + n), n / (m + n)


# -- convergence studies ------------------------------------------------------


@dataclass
class SweepRow:
    estimator: str
    n_samples: int
    trial_count: int
    mean: float
    variance: float
    mse: float


def _estimator_fn(name, f, slice, G, m, noisy):
    if name == "mc":
        return lambda n, rng: mc_estimate(f, EstimatorConfig(n), rng=rng, noisy=noisy).estimate
    if name == "cv":
        return lambda n, rng: cv_estimate(f, slice, G, EstimatorConfig(n), rng=rng,
                                          noisy=noisy).estimate
    if name == "combined":
        return lambda n, rng: combined_estimate(f, slice, G, m, n, rng=rng, noisy=noisy).estimate
    raise ValueError(f"unknown estimator {name!r}")


def replicate(estimator: Callable[[int, np.random.Generator], np.ndarray], n: int, trials: int,
              seed: int) -> np.ndarray:
    """``trials`` independent estimates; stream ``(seed, n, trial)`` per trial."""
    return np.array([np.atleast_1d(estimator(n, trial_rng(seed, n, t))) for t in range(trials)])


def summarize(name: str, n: int, estimates: np.ndarray, reference: float,
              channel: int = 0) -> SweepRow:
    e = estimates[:, channel]
    return SweepRow(name, n, len(e), float(e.mean()), float(e.var(ddof=1)),
                    float(np.mean((e - reference) ** 2)))


def convergence_sweep(f: Integrand, slice=None, G=None, sample_counts: Sequence[int] = DYADIC_COUNTS,
                      trials: int = 128, seed: int = 42, *, reference: float = 1.0,
                      estimators: Sequence[str] | None = None, m: int = 0, noisy: bool = False,
                      channel: int = 0, jobs: int = 1) -> list[SweepRow]:
    """Empirical variance and MSE of each estimator for every sample count.

    Plain MC always runs; CV runs when a control variate is supplied. Rows
    are ordered by estimator, then sample count, whatever ``jobs`` is.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials to estimate a variance")
    if estimators is None:
        estimators = ["mc"] if slice is None else ["mc", "cv"]
    tasks = [(name, n) for name in estimators for n in sample_counts]

    def run(task):
        name, n = task
        est = replicate(_estimator_fn(name, f, slice, G, m, noisy), n, trials, seed)
        return summarize(name, n, est, reference, channel)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.estimator, r.n_samples, r.trial_count, repr(r.mean), repr(r.variance),
                    repr(r.mse)])
    return buf.getvalue()


def write_convergence_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def loglog_slope(rows: Sequence[SweepRow], estimator: str) -> float:
    """Least-squares slope of log(variance) against log(n)."""
    pts = [(r.n_samples, r.variance) for r in rows if r.estimator == estimator and r.variance > 0]
    x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])
