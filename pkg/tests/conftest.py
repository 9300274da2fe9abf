import numpy as np
import pytest

from pwlcv.benchmarks import BENCH_NAMES, run_fig5
from pwlcv.geometry import AffineFn2, polygon_centroid


def line_through(p, q):
    """AffineFn2 vanishing on p and q, positive to the left of p -> q."""
    a, b = p[1] - q[1], q[0] - p[0]
    return AffineFn2(a, b, -(a * p[0] + b * p[1]))


def interior_points(polygon, k, rng):
    """k random strictly-interior points of a convex polygon."""
    v = np.asarray(polygon, dtype=np.float64)
    w = rng.dirichlet(np.ones(len(v)), size=k)
    pts = w @ v
    # Pull toward the centroid so slivers still give interior samples.
    c = np.asarray(polygon_centroid(polygon))
    return c + 0.999 * (pts - c)


def brute_midpoint(fn, n):
    """Plain midpoint rule, independent of the package's quadrature helper."""
    h = 1.0 / n
    c = (np.arange(n) + 0.5) * h
    X, Y = np.meshgrid(c, c, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return np.asarray(fn(pts)).reshape(len(pts), -1).sum(axis=0) * h * h


@pytest.fixture(scope="session")
def fig5_runs():
    """Default 2x32 ReLU nets, 5000 epochs, seed 42, one per benchmark."""
    return {name: run_fig5(name, out_root=None) for name in BENCH_NAMES}


ACCEPTANCE = {}


def record(number, ok, detail):
    """Store and print one acceptance line; the summary hook repeats them at the end."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
