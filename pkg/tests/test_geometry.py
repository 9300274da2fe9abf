import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlcv.errors import (
    DegenerateLine,
    MaskOverflow,
    NonConvexInput,
    OuterFaceQuery,
    TooFewVertices,
)
from pwlcv.geometry import (
    EPS,
    MASK_CAPACITY,
    AffineFn2,
    add_line,
    dump_svg,
    face_area,
    face_polygon,
    init_unit_square,
    init_with_face,
    polygon_centroid,
)

from conftest import interior_points, line_through

UNIT = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def topology(d):
    return len(d.vertices), d.n_edges, d.n_inner_faces


def test_unit_square_init():
    d = init_unit_square()
    assert len(d.vertices) == 4 and len(d.half_edges) == 8
    assert d.n_inner_faces == 1
    assert sum(f.is_outer for f in d.faces) == 1
    assert d.total_inner_area() == 1.0
    assert len(d.vertices) - d.n_edges + d.n_faces == 2
    assert d.lines == [] and d.face_mask(1) == 0
    assert face_polygon(d, 1) == UNIT
    d.audit()


def test_init_with_face():
    d = init_with_face([(0, 0), (1, 0), (0, 1)])
    assert topology(d) == (3, 3, 1)
    assert face_area(d.face_polygon(1)) == 0.5
    sq = init_with_face(UNIT)
    assert sq.half_edges == init_unit_square().half_edges
    with pytest.raises(NonConvexInput):
        init_with_face([(0, 0), (0.5, 0), (1, 0)])
    with pytest.raises(NonConvexInput):
        init_with_face(UNIT[::-1])
    with pytest.raises(NonConvexInput):
        init_with_face([(0, 0), (1, 0), (0.2, 0.2), (0, 1)])
    with pytest.raises(TooFewVertices):
        init_with_face([(0, 0), (1, 0)])


def test_face_area():
    assert face_area(UNIT) == 1.0
    assert face_area([(0, 0), (1, 0), (0, 1)]) == 0.5
    assert face_area(UNIT[::-1]) == -1.0
    with pytest.raises(TooFewVertices):
        face_area([(0, 0)])


def test_horizontal_split():
    # Hand count: 4 corners + 2 cut points, 4 + 2 boundary pieces + 1 cut edge.
    d = add_line(init_unit_square(), 0, AffineFn2(0, 1, -0.5))
    assert topology(d) == (6, 7, 2)
    d.audit()
    by_top = {max(v.y for v in d.face_polygon(f)): f for f in d.inner_face_ids()}
    assert d.face_mask(by_top[1.0]) == 1
    assert d.face_mask(by_top[0.5]) == 0
    bottom = d.face_polygon(by_top[0.5])
    assert len(bottom) == 4 and max(v.y for v in bottom) == 0.5


def test_two_lines_four_masks():
    d = init_unit_square()
    d.add_line(0, AffineFn2(1, 0, -0.5))
    d.add_line(1, AffineFn2(0, 1, -0.5))
    d.audit()
    assert sorted(d.face_mask(f) for f in d.inner_face_ids()) == [0, 1, 2, 3]
    for f in d.inner_face_ids():
        c = polygon_centroid(d.face_polygon(f))
        assert d.face_mask(f) == (c.x > 0.5) | ((c.y > 0.5) << 1)


def test_line_missing_domain_sets_mask():
    d = init_unit_square()
    before = d.half_edges
    d.add_line(0, AffineFn2(1, 1, 10))
    assert d.half_edges == before
    assert d.face_mask(1) == 1
    d.add_line(1, AffineFn2(1, 1, -10))
    assert d.face_mask(1) == 1


def test_errors():
    d = init_unit_square()
    with pytest.raises(DegenerateLine):
        d.add_line(0, AffineFn2(0, 0, 1))
    with pytest.raises(OuterFaceQuery):
        d.face_polygon(0)
    with pytest.raises(ValueError):
        d.add_line(3, AffineFn2(1, 0, -0.5))
    d.lines = [AffineFn2(1, 1, 5)] * MASK_CAPACITY
    with pytest.raises(MaskOverflow):
        d.add_line(MASK_CAPACITY, AffineFn2(1, 0, -0.5))


def test_degenerate_flag():
    assert AffineFn2(0, 0, 1).is_degenerate_line()
    assert not AffineFn2(1e-6, 0, 1).is_degenerate_line()
    f = AffineFn2(2, -3, 0.5)
    assert f.evaluate(0.25, 0.5) == 2 * 0.25 - 3 * 0.5 + 0.5


def test_line_through_corner_reuses_vertex():
    d = add_line(init_unit_square(), 0, line_through((0, 0), (1, 1)))
    d.audit()
    assert topology(d) == (4, 5, 2)
    assert sorted(face_area(d.face_polygon(f)) for f in d.inner_face_ids()) == [0.5, 0.5]


def test_collinear_with_boundary_and_duplicates():
    d = init_unit_square()
    d.add_line(0, AffineFn2(1, 0, 0))  # the edge x = 0
    d.add_line(1, AffineFn2(1, 0, -0.5))
    d.add_line(2, AffineFn2(-1, 0, 0.5))  # same line, flipped
    d.add_line(3, AffineFn2(1, 0, -0.5 + 0.1 * EPS))  # within tolerance
    d.audit()
    assert d.n_inner_faces == 2


def test_concurrent_lines():
    d = init_unit_square()
    for i, ang in enumerate(np.linspace(0, math.pi, 7, endpoint=False)):
        d.add_line(i, AffineFn2(math.cos(ang), math.sin(ang), -0.5 * (math.cos(ang) + math.sin(ang))))
        d.audit()
    # Seven concurrent lines through the centre make 14 sectors.
    assert d.n_inner_faces == 14
    assert abs(d.total_inner_area() - 1) < 1e-12


def test_general_position_three_lines_hits_bound():
    d = init_unit_square()
    for i, ln in enumerate([AffineFn2(0, 1, -0.5), AffineFn2(1, 0, -0.5), AffineFn2(1, 1, -0.8)]):
        d.add_line(i, ln)
    d.audit()
    assert d.n_inner_faces == 3 * 2 // 2 + 3 + 1


def test_insertion_inside_triangle_face():
    d = init_with_face([(0.2, 0.2), (0.8, 0.2), (0.5, 0.9)])
    d.add_line(0, AffineFn2(1, 0, -0.5))
    d.add_line(1, AffineFn2(0, 1, -0.95))  # misses the triangle
    d.audit()
    assert d.n_inner_faces == 2
    assert all(not (d.face_mask(f) >> 1) & 1 for f in d.inner_face_ids())
    assert abs(d.total_inner_area() - 0.21) < 1e-12


def random_line(rng, d):
    """Mix of general lines and lines through existing vertices."""
    kind = rng.random()
    if kind < 0.3 and len(d.vertices) >= 2:
        p, q = rng.sample(d.vertices, 2)
        if p != q:
            return line_through(p, q)
    if kind < 0.45:
        p = rng.choice(d.vertices)
        q = (rng.random(), rng.random())
        if math.dist(p, q) > 1e-6:
            return line_through(p, q)
    if kind < 0.55:
        v = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0])
        return AffineFn2(1, 0, -v) if rng.random() < 0.5 else AffineFn2(0, 1, -v)
    return line_through((rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2)),
                        (rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2)))


def test_fuzz_audit_small():
    rng = random.Random(7)
    for _ in range(40):
        d = init_unit_square()
        for i in range(10):
            d.add_line(i, random_line(rng, d))
            d.audit()
        assert abs(d.total_inner_area() - 1) < 1e-9


def test_mask_matches_interior_samples():
    rng = random.Random(3)
    nrng = np.random.default_rng(3)
    d = init_unit_square()
    for i in range(12):
        d.add_line(i, random_line(rng, d))
    for f in d.inner_face_ids():
        poly = d.face_polygon(f)
        if face_area(poly) < 1e-10:
            continue
        for x, y in interior_points(poly, 5, nrng):
            for i, ln in enumerate(d.lines):
                v = ln.evaluate(x, y)
                if abs(v) > 1e-9:
                    assert ((d.face_mask(f) >> i) & 1) == (v > 0)


def test_deterministic_topology():
    def build():
        rng = random.Random(11)
        d = init_unit_square()
        for i in range(15):
            d.add_line(i, random_line(rng, d))
        return d

    a, b = build(), build()
    assert a.half_edges == b.half_edges and a.vertices == b.vertices and a.faces == b.faces


coord = st.floats(-0.5, 1.5, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coord, coord, coord, coord), min_size=1, max_size=8))
def test_random_arrangement_properties(segments):
    d = init_unit_square()
    n = 0
    for x0, y0, x1, y1 in segments:
        ln = line_through((x0, y0), (x1, y1))
        if ln.is_degenerate_line():
            continue
        d.add_line(n, ln)
        n += 1
        d.audit()
    assert abs(d.total_inner_area() - 1) < 1e-9
    assert d.n_inner_faces <= n * (n - 1) // 2 + n + 1
    assert d.n_edges <= n * n + 4 + 2 * n
    assert len(d.vertices) <= n * (n - 1) // 2 + 4 + 2 * n
    for v in d.vertices:
        assert -EPS <= v.x <= 1 + EPS and -EPS <= v.y <= 1 + EPS


def test_dump_svg(tmp_path):
    d = add_line(init_unit_square(), 0, AffineFn2(1, -1, 0.1))
    path = tmp_path / "sub.svg"
    dump_svg(d, path)
    text = path.read_text()
    assert text.startswith("<svg") and text.count("<polygon") == 2
