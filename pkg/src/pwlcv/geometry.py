"""Bounded 2D line arrangements stored in a doubly-connected edge list.

The subdivision always covers a convex region (the unit square or a convex
face handed down from a coarser arrangement). Lines are inserted one at a
time; every face that a line crosses is cut in two and every inner face
records, in a bitset, on which side of each inserted line it lies.

Face 0 is always the unbounded outer face.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import (
    DegenerateLine,
    GeometryError,
    MaskOverflow,
    NonConvexInput,
    OuterFaceQuery,
    TooFewVertices,
)

EPS = 1e-9
MASK_CAPACITY = 64
OUTER_FACE = 0


@dataclass(frozen=True)
class AffineFn2:
    """``a*x + b*y + c``. A line is its zero set."""

    a: float
    b: float
    c: float

    def evaluate(self, x, y):
        return self.a * x + self.b * y + self.c

    def is_degenerate_line(self, tol: float = EPS) -> bool:
        return math.hypot(self.a, self.b) <= tol

    def __add__(self, other: "AffineFn2") -> "AffineFn2":
        return AffineFn2(self.a + other.a, self.b + other.b, self.c + other.c)

    def __mul__(self, s: float) -> "AffineFn2":
        return AffineFn2(self.a * s, self.b * s, self.c * s)

    __rmul__ = __mul__

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


class Vertex(NamedTuple):
    x: float
    y: float


class HalfEdge(NamedTuple):
    origin: int
    next: int
    twin: int
    face: int


class Face(NamedTuple):
    boundary: int
    line_mask: int
    is_outer: bool


def face_area(polygon: Sequence[Sequence[float]]) -> float:
    """Signed shoelace area, positive for counterclockwise loops."""
    n = len(polygon)
    if n < 3:
        raise TooFewVertices(f"polygon needs >= 3 vertices, got {n}")
    s = 0.0
    x0, y0 = polygon[-1]
    for x1, y1 in polygon:
        s += x0 * y1 - x1 * y0
        x0, y0 = x1, y1
    return 0.5 * s


def polygon_centroid(polygon: Sequence[Sequence[float]]) -> Vertex:
    """Vertex mean. Lies strictly inside any convex polygon with area > 0."""
    n = len(polygon)
    return Vertex(sum(p[0] for p in polygon) / n, sum(p[1] for p in polygon) / n)


def check_convex_ccw(polygon: Sequence[Sequence[float]]) -> None:
    n = len(polygon)
    if n < 3:
        raise TooFewVertices(f"polygon needs >= 3 vertices, got {n}")
    for i in range(n):
        x0, y0 = polygon[i - 2]
        x1, y1 = polygon[i - 1]
        x2, y2 = polygon[i]
        cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1)
        if cross < -EPS:
            raise NonConvexInput(f"reflex or clockwise turn at vertex {i - 1}")
    if face_area(polygon) <= 0.0:
        raise NonConvexInput("polygon has no positive area")
    for x, y in polygon:
        if not (-EPS <= x <= 1 + EPS and -EPS <= y <= 1 + EPS):
            raise GeometryError(f"vertex ({x}, {y}) outside the unit square")


class Dcel:
    """Half-edge structure with per-face line masks.

    Half-edges live in parallel lists indexed by id; ``HalfEdge`` and ``Face``
    records are views built on demand.
    """

    def __init__(self):
        self.vertices: list[Vertex] = []
        self.lines: list[AffineFn2] = []
        self._origin: list[int] = []
        self._next: list[int] = []
        self._twin: list[int] = []
        self._face: list[int] = []
        self._face_edge: list[int] = []
        self._face_mask: list[int] = []

    # -- construction -----------------------------------------------------

    def reset_to_polygon(self, polygon: Sequence[Sequence[float]], validate: bool = True) -> "Dcel":
        """Reinitialize in place with a single CCW convex inner face."""
        if validate:
            check_convex_ccw(polygon)
        elif len(polygon) < 3:
            raise TooFewVertices(f"polygon needs >= 3 vertices, got {len(polygon)}")
        n = len(polygon)
        self.vertices = [Vertex(float(x), float(y)) for x, y in polygon]
        self.lines = []
        # Half-edge 2i runs p[i] -> p[i+1] inside; 2i+1 is its outer twin.
        self._origin = [0] * (2 * n)
        self._next = [0] * (2 * n)
        self._twin = [0] * (2 * n)
        self._face = [0] * (2 * n)
        for i in range(n):
            h, t = 2 * i, 2 * i + 1
            self._origin[h] = i
            self._origin[t] = (i + 1) % n
            self._next[h] = 2 * ((i + 1) % n)
            self._next[t] = 2 * ((i - 1) % n) + 1
            self._twin[h], self._twin[t] = t, h
            self._face[h], self._face[t] = 1, OUTER_FACE
        self._face_edge = [1, 0]
        self._face_mask = [0, 0]
        return self

    # -- queries ----------------------------------------------------------

    @property
    def half_edges(self) -> list[HalfEdge]:
        return [HalfEdge(*r) for r in zip(self._origin, self._next, self._twin, self._face)]

    @property
    def faces(self) -> list[Face]:
        return [Face(e, m, f == OUTER_FACE)
                for f, (e, m) in enumerate(zip(self._face_edge, self._face_mask))]

    @property
    def n_faces(self) -> int:
        return len(self._face_edge)

    @property
    def n_inner_faces(self) -> int:
        return len(self._face_edge) - 1

    @property
    def n_edges(self) -> int:
        return len(self._origin) // 2

    def inner_face_ids(self) -> range:
        return range(1, len(self._face_edge))

    def face_mask(self, face_id: int) -> int:
        return self._face_mask[face_id]

    def loop(self, face_id: int) -> list[int]:
        start = self._face_edge[face_id]
        out = [start]
        h = self._next[start]
        nxt = self._next
        while h != start:
            out.append(h)
            h = nxt[h]
            if len(out) > len(nxt):
                raise GeometryError(f"face {face_id} boundary does not close")
        return out

    def face_polygon(self, face_id: int) -> list[Vertex]:
        if face_id == OUTER_FACE:
            raise OuterFaceQuery("the outer face has no bounded polygon")
        if not 0 < face_id < len(self._face_edge):
            raise IndexError(f"no face {face_id}")
        verts, org = self.vertices, self._origin
        return [verts[org[h]] for h in self.loop(face_id)]

    def total_inner_area(self) -> float:
        return sum(face_area(self.face_polygon(f)) for f in self.inner_face_ids())

    # -- line insertion ---------------------------------------------------

    def add_line(self, line_index: int, line: AffineFn2) -> "Dcel":
        self._check_index(line_index)
        if line.is_degenerate_line():
            raise DegenerateLine(f"line {line} has no direction")
        self.lines.append(line)
        a, b, c = line.a, line.b, line.c
        tol = EPS * math.hypot(a, b)
        values = [a * v.x + b * v.y + c for v in self.vertices]
        side = [1 if v > tol else (-1 if v < -tol else 0) for v in values]
        for f in range(1, len(self._face_edge)):
            self._cut_face(f, line, values, side)
        self._update_masks(line_index, line)
        return self

    def add_constant_line(self, line_index: int, line: AffineFn2) -> "Dcel":
        """Record a direction-less line: no geometry, mask bit set iff ``c > 0``."""
        self._check_index(line_index)
        self.lines.append(line)
        if line.c > 0:
            bit = 1 << line_index
            for f in range(1, len(self._face_mask)):
                self._face_mask[f] |= bit
        return self

    def _check_index(self, line_index):
        if line_index >= MASK_CAPACITY:
            raise MaskOverflow(f"line index {line_index} exceeds mask capacity {MASK_CAPACITY}")
        if line_index != len(self.lines):
            raise ValueError(f"expected line index {len(self.lines)}, got {line_index}")

    def _update_masks(self, line_index, line):
        bit = 1 << line_index
        verts, org, nxt = self.vertices, self._origin, self._next
        for f in range(1, len(self._face_edge)):
            start = h = self._face_edge[f]
            sx = sy = 0.0
            n = 0
            while True:
                v = verts[org[h]]
                sx += v.x
                sy += v.y
                n += 1
                h = nxt[h]
                if h == start:
                    break
            if line.a * (sx / n) + line.b * (sy / n) + line.c > 0:
                self._face_mask[f] |= bit
            else:
                self._face_mask[f] &= ~bit

    def _split_edge(self, h: int, x: float, y: float) -> int:
        """Insert a vertex on edge ``h`` (and its twin); returns the vertex id."""
        m = len(self.vertices)
        self.vertices.append(Vertex(x, y))
        t = self._twin[h]
        w = self._origin[t]
        # prev(t) is needed to hook the new twin-side half-edge in.
        p = t
        while self._next[p] != t:
            p = self._next[p]
        n1, n2 = len(self._origin), len(self._origin) + 1
        # n1: m -> w on h's side, n2: w -> m on t's side, t now starts at m.
        self._origin += [m, w]
        self._next += [self._next[h], t]
        self._twin += [n2, n1]
        self._face += [self._face[h], self._face[t]]
        self._next[h] = n1
        self._next[p] = n2
        self._origin[t] = m
        return m

    def _cut_face(self, f, line, values, side):
        hs = self.loop(f)
        org = self._origin
        signs = {side[org[h]] for h in hs}
        if 1 not in signs or -1 not in signs:
            return
        verts = self.vertices
        for h in hs:
            u = org[h]
            w = org[self._twin[h]]
            if side[u] * side[w] == -1:
                vu, vw = values[u], values[w]
                s = vu / (vu - vw)
                pu, pw = verts[u], verts[w]
                self._split_edge(h, pu.x + s * (pw.x - pu.x), pu.y + s * (pw.y - pu.y))
                values.append(0.0)
                side.append(0)

        hs = self.loop(f)
        n = len(hs)
        sg = [side[org[h]] for h in hs]
        start = next(i for i in range(n) if sg[i] != 0)
        prev_sign = sg[start]
        pending: list[int] = []
        separators: list[list[int]] = []
        for k in range(1, n + 1):
            i = (start + k) % n
            s = sg[i]
            if s == 0:
                pending.append(i)
            elif s != prev_sign:
                separators.append(pending)
                pending = []
                prev_sign = s
            else:
                pending = []
        if len(separators) != 2 or not all(separators):
            raise GeometryError(f"line {line} crosses face {f} inconsistently")
        iu, iv = (min(run, key=lambda i: abs(line.evaluate(*verts[org[hs[i]]]))) for run in separators)
        self._split_face(f, hs[iu - 1], hs[iu], hs[iv - 1], hs[iv])

    def _split_face(self, f, in_u, out_u, in_v, out_v):
        u, v = self._origin[out_u], self._origin[out_v]
        e1, e2 = len(self._origin), len(self._origin) + 1
        nf = len(self._face_edge)
        self._origin += [u, v]
        self._next += [out_v, out_u]
        self._twin += [e2, e1]
        self._face += [nf, f]
        self._next[in_u] = e1
        self._next[in_v] = e2
        self._face_edge[f] = e2
        self._face_edge.append(e1)
        self._face_mask.append(self._face_mask[f])
        h = out_v
        while h != e1:
            self._face[h] = nf
            h = self._next[h]

    # -- verification -----------------------------------------------------

    def audit(self) -> None:
        """Raise ``GeometryError`` if any structural invariant is broken."""
        nh = len(self._origin)
        if nh % 2:
            raise GeometryError("odd number of half-edges")
        for h in range(nh):
            t = self._twin[h]
            if self._twin[t] != h or t == h:
                raise GeometryError(f"twin involution fails at half-edge {h}")
            if self._origin[t] != self._origin[self._next[h]]:
                raise GeometryError(f"half-edge {h} destination mismatch")
            if self._face[self._next[h]] != self._face[h]:
                raise GeometryError(f"face pointer mismatch along half-edge {h}")
        seen = [False] * nh
        for f in range(len(self._face_edge)):
            for h in self.loop(f):
                if self._face[h] != f or seen[h]:
                    raise GeometryError(f"half-edge {h} misassigned to face {f}")
                seen[h] = True
        if not all(seen):
            raise GeometryError("half-edge not reachable from any face")
        v, e, fc = len(self.vertices), nh // 2, len(self._face_edge)
        if v - e + fc != 2:
            raise GeometryError(f"Euler characteristic {v - e + fc} != 2")
        for f in self.inner_face_ids():
            poly = self.face_polygon(f)
            if face_area(poly) < -EPS:
                raise GeometryError(f"face {f} is clockwise")
            c = polygon_centroid(poly)
            for i, ln in enumerate(self.lines):
                if ln.is_degenerate_line():
                    continue
                val = ln.evaluate(c.x, c.y)
                if abs(val) <= EPS * math.hypot(ln.a, ln.b):
                    continue
                bit = (self._face_mask[f] >> i) & 1
                if (val > 0) != bool(bit):
                    raise GeometryError(f"mask bit {i} wrong on face {f}")


def init_unit_square() -> Dcel:
    return Dcel().reset_to_polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


def init_with_face(face_polygon: Sequence[Sequence[float]]) -> Dcel:
    return Dcel().reset_to_polygon(face_polygon)


def add_line(dcel: Dcel, line_index: int, line: AffineFn2) -> Dcel:
    return dcel.add_line(line_index, line)


def face_polygon(dcel: Dcel, face_id: int) -> list[Vertex]:
    return dcel.face_polygon(face_id)


def _face_color(face_id: int) -> str:
    h = (face_id * 2654435761) & 0xFFFFFF
    return f"#{(h >> 16) & 0xFF | 0x40:02x}{(h >> 8) & 0xFF | 0x40:02x}{h & 0xFF | 0x40:02x}"


def polygons_to_svg(polygons: Sequence[Sequence[Sequence[float]]], size: int = 512,
                    fill: bool = True) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for i, poly in enumerate(polygons):
        # SVG y grows downward; flip so (0,0) is bottom-left.
        pts = " ".join(f"{x * size:.4f},{(1 - y) * size:.4f}" for x, y in poly)
        color = _face_color(i + 1) if fill else "none"
        parts.append(f'<polygon points="{pts}" fill="{color}" stroke="black" stroke-width="0.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def dump_svg(dcel: Dcel, path, size: int = 512, fill: bool = True) -> None:
    polys = [dcel.face_polygon(f) for f in dcel.inner_face_ids()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(polygons_to_svg(polys, size=size, fill=fill))
