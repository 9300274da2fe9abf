import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlcv.errors import DimensionMismatch, LayerBudgetExceeded, TooFewVertices
from pwlcv.geometry import AffineFn2, face_area, polygon_centroid
from pwlcv.integrator import (
    Traversal,
    combine_lines,
    dump_pieces,
    enumerate_pieces,
    integrate,
    integrate_affine_over_polygon,
    output_affine,
)
from pwlcv.mlp import ActivationSpec, Layer, Mlp

from conftest import brute_midpoint, interior_points

UNIT = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def fig2_net():
    """One hidden layer whose neurons cut along x = 0.5 and y = 0.5."""
    return Mlp([Layer([[1.0, 0.0], [0.0, 1.0]], [-0.5, -0.5])], Layer([[1.0, 1.0]], [0.0]))


def test_combine_lines_examples():
    prev = [AffineFn2(1, 0, -0.5)]
    assert combine_lines(prev, 1, [[2.0]], [0.1]) == [AffineFn2(2, 0, -0.9)]
    assert combine_lines(prev, 0, [[2.0]], [0.1]) == [AffineFn2(0, 0, 0.1)]
    (leaky,) = combine_lines(prev, 0, [[2.0]], [0.1], negative_slope=0.01)
    assert leaky.a == pytest.approx(0.02) and leaky.b == 0 and leaky.c == pytest.approx(0.09)
    with pytest.raises(DimensionMismatch):
        combine_lines(prev, 1, [[1.0, 2.0]], [0.0])


def test_output_affine_examples():
    last = [AffineFn2(1, 0, 0)]
    assert output_affine(last, 1, [1.0], [0.0]) == [AffineFn2(1, 0, 0)]
    assert output_affine(last, 0, [1.0], [0.25]) == [AffineFn2(0, 0, 0.25)]
    assert output_affine([AffineFn2(0, 1, 0)], 1, [[1.0], [-1.0]], [0.0, 1.0]) == [
        AffineFn2(0, 1, 0), AffineFn2(0, -1, 1)]


def test_affine_polygon_integral_examples():
    tri = [(0, 0), (1, 0), (0, 1)]
    assert integrate_affine_over_polygon(tri, AffineFn2(1, 0, 0)) == pytest.approx(1 / 6, abs=1e-16)
    assert integrate_affine_over_polygon(UNIT, AffineFn2(0, 0, 1)) == 1.0
    # Oracle: midpoint rule is exact for affine integrands on a grid.
    oracle = brute_midpoint(lambda p: p[:, 0] + p[:, 1], 64)[0]
    assert integrate_affine_over_polygon(UNIT, AffineFn2(1, 1, 0)) == pytest.approx(oracle, abs=1e-12)
    with pytest.raises(TooFewVertices):
        integrate_affine_over_polygon([(0, 0), (1, 1)], AffineFn2(1, 1, 1))


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 9), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10**6))
def test_centroid_identity(n, a, b, c, seed):
    # Affine integrand over any polygon integrates to area * value at the area centroid.
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    if np.min(np.diff(np.r_[ang, ang[0] + 2 * np.pi])) < 1e-3:
        return
    r = rng.uniform(0.05, 0.5)
    poly = [(0.5 + r * np.cos(t), 0.5 + r * np.sin(t)) for t in ang]
    f = AffineFn2(a, b, c)
    area = face_area(poly)
    xs, ys = np.array(poly).T
    cross = xs * np.roll(ys, -1) - np.roll(xs, -1) * ys
    cx = np.sum((xs + np.roll(xs, -1)) * cross) / (6 * area)
    cy = np.sum((ys + np.roll(ys, -1)) * cross) / (6 * area)
    expected = area * f.evaluate(cx, cy)
    got = integrate_affine_over_polygon(poly, f)
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-14)


def test_constant_network_single_piece():
    net = Mlp([Layer(np.zeros((3, 2)), np.zeros(3))], Layer(np.zeros((1, 3)), [0.7]))
    pieces = list(enumerate_pieces(net.slice()))
    assert len(pieces) == 1
    assert pieces[0].polygon == UNIT and pieces[0].affine == [AffineFn2(0, 0, 0.7)]
    res = integrate(net.slice())
    assert res.G[0] == pytest.approx(0.7, abs=1e-15) and res.piece_count == 1


def test_fig2_four_pieces():
    pieces = list(enumerate_pieces(fig2_net().slice()))
    assert len(pieces) == 4
    assert sorted(round(p.area(), 12) for p in pieces) == [0.25] * 4
    # max(x-.5,0) + max(y-.5,0) integrates to 1/8 + 1/8.
    assert integrate(fig2_net().slice()).G[0] == pytest.approx(0.25, abs=1e-15)


def test_single_relu_integral():
    net = Mlp([Layer([[1.0, 0.0]], [-0.5])], Layer([[1.0]], [0.0]))
    assert integrate(net.slice()).G[0] == pytest.approx(0.125, abs=1e-15)


def test_conditioned_integral():
    net = Mlp([Layer([[1.0, 0.0, 1.0]], [-0.5])], Layer([[1.0]], [0.0]), cond_dim=1)
    # max(x - 0.25, 0) over the square: 0.75^2 / 2.
    assert integrate(net.slice([0.25])).G[0] == pytest.approx(0.28125, abs=1e-15)


def test_layer_budget():
    net = Mlp.init(2, 4)
    net.hidden = net.hidden * 5
    with pytest.raises(LayerBudgetExceeded):
        integrate(net.slice())


def test_workspace_count_and_reuse():
    net = Mlp.init(3, 8, seed=2)
    trav = Traversal(net.slice())
    ids = [id(d) for d in trav.dcels]
    n = sum(1 for _ in trav.run())
    assert len(trav.dcels) == 3 and [id(d) for d in trav.dcels] == ids
    assert trav.trail == [0, 0, 0]
    assert n == trav.face_counts[-1]


def check_pieces(net, rng, k=5):
    sl = net.slice()
    pieces = list(enumerate_pieces(sl))
    total_area = sum(p.area() for p in pieces)
    assert abs(total_area - 1) <= 1e-8
    pts, expect = [], []
    for p in pieces:
        q = interior_points(p.polygon, k, rng)
        pts.append(q)
        expect.append(np.column_stack([f.evaluate(q[:, 0], q[:, 1]) for f in p.affine]))
    got = sl.forward_batch(np.vstack(pts))
    assert np.max(np.abs(got - np.vstack(expect))) <= 1e-6
    return pieces


@pytest.mark.parametrize("seed", range(8))
def test_pieces_partition_and_affine(seed):
    rng = np.random.default_rng(seed)
    act = ActivationSpec() if seed % 2 == 0 else ActivationSpec.leaky(0.05)
    net = Mlp.init(1 + seed % 3, 6 + 2 * seed, outputs=1 + seed % 2, activation=act, seed=seed)
    check_pieces(net, rng)


def test_pieces_disjoint_by_point_location():
    net = Mlp.init(2, 6, seed=13)
    pieces = list(enumerate_pieces(net.slice()))
    rng = np.random.default_rng(13)
    pts = rng.random((400, 2))
    counts = np.zeros(len(pts), int)
    for p in pieces:
        v = np.asarray(p.polygon)
        e = np.roll(v, -1, axis=0) - v
        rel = pts[:, None, :] - v[None, :, :]
        cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
        counts += np.all(cross > 1e-12, axis=1)
    # Random points avoid boundaries almost surely, so each lies in exactly one piece.
    assert np.all(counts == 1)


def test_integral_matches_quadrature_small():
    for seed in range(3):
        net = Mlp.init(2, 8, outputs=2, seed=100 + seed)
        sl = net.slice()
        got = integrate(sl).G
        ref = brute_midpoint(sl.forward_batch, 1024)
        np.testing.assert_allclose(got, ref, atol=1e-4)


def test_leaky_limit_integral():
    relu = Mlp.init(2, 12, seed=21)
    leaky = relu.copy()
    leaky.activation = ActivationSpec.leaky(1e-9)
    assert abs(integrate(relu.slice()).G[0] - integrate(leaky.slice()).G[0]) <= 1e-6


def test_integer_weights_degenerate_geometry():
    # Many coincident and concurrent lines in every layer.
    rng = np.random.default_rng(5)
    net = Mlp([Layer(rng.integers(-2, 3, (8, 2)).astype(float), rng.integers(-2, 3, 8) / 2),
               Layer(rng.integers(-1, 2, (8, 8)).astype(float), rng.integers(-2, 3, 8) / 2)],
              Layer(rng.integers(-2, 3, (1, 8)).astype(float), [0.0]))
    check_pieces(net, rng)
    ref = brute_midpoint(net.slice().forward_batch, 1024)
    assert integrate(net.slice()).G[0] == pytest.approx(ref[0], abs=1e-4)


def test_dump_pieces(tmp_path):
    n = dump_pieces(fig2_net().slice(), tmp_path / "p.csv", tmp_path / "p.svg")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert n == 4 and lines[0] == "piece_id,vertices,a0,b0,c0" and len(lines) == 5
    assert (tmp_path / "p.svg").read_text().count("<polygon") == 4


def test_centroid_identity_on_pieces():
    net = Mlp.init(2, 10, seed=8)
    for p in enumerate_pieces(net.slice()):
        area = p.area()
        if area < 1e-12:
            continue
        poly = p.polygon
        xs, ys = np.array(poly).T
        cross = xs * np.roll(ys, -1) - np.roll(xs, -1) * ys
        cx = np.sum((xs + np.roll(xs, -1)) * cross) / (6 * area)
        cy = np.sum((ys + np.roll(ys, -1)) * cross) / (6 * area)
        exp = area * p.affine[0].evaluate(cx, cy)
        assert integrate_affine_over_polygon(poly, p.affine[0]) == pytest.approx(exp, rel=1e-12, abs=1e-15)
