"""Exact integration of a piecewise-affine network over the unit square.

The network's hidden layers are walked depth-first without a stack: one
arrangement workspace per hidden layer plus a cursor ("trail") per depth.
Each leaf face carries an affine output function, which is integrated in
closed form over a fan of triangles.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, LayerBudgetExceeded, MaskOverflow, TooFewVertices
from .geometry import MASK_CAPACITY, AffineFn2, Dcel, Vertex, face_area, polygons_to_svg
from .mlp import MAX_HIDDEN_LAYERS, ConditionedSlice, first_layer_lines


@dataclass
class FacePiece:
    polygon: list[Vertex]
    affine: list[AffineFn2]

    def area(self) -> float:
        return face_area(self.polygon)


@dataclass
class IntegralResult:
    G: np.ndarray
    piece_count: int
    per_layer_face_counts: list[int] = field(default_factory=list)


def _slopes(mask: int, n: int, negative_slope: float) -> np.ndarray:
    bits = np.array([(mask >> j) & 1 for j in range(n)], dtype=bool)
    return np.where(bits, 1.0, negative_slope)


def _combine(prev: np.ndarray, mask: int, weights: np.ndarray, biases: np.ndarray,
             negative_slope: float) -> np.ndarray:
    """Row i of the result is ``sum_j s_j w[i, j] prev[j] + (0, 0, b_i)``."""
    n = prev.shape[0]
    weights = np.asarray(weights, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64).reshape(-1)
    if weights.ndim != 2 or weights.shape[1] != n or weights.shape[0] != biases.shape[0]:
        raise DimensionMismatch(f"weights {weights.shape} / biases {biases.shape} vs {n} lines")
    out = (weights * _slopes(mask, n, negative_slope)) @ prev
    out[:, 2] += biases
    return out


def _as_array(lines: Sequence[AffineFn2]) -> np.ndarray:
    return np.array([ln.as_tuple() for ln in lines], dtype=np.float64).reshape(-1, 3)


def combine_lines(prev_lines: Sequence[AffineFn2], mask: int, weights, biases,
                  negative_slope: float = 0.0) -> list[AffineFn2]:
    """Pre-activations of the next layer as affine functions on one face.

    Inputs whose mask bit is clear are inactive and enter scaled by
    ``negative_slope`` (zero for ReLU).
    """
    rows = _combine(_as_array(prev_lines), mask, weights, biases, negative_slope)
    return [AffineFn2(*map(float, r)) for r in rows]


def output_affine(last_lines: Sequence[AffineFn2], mask: int, out_weights, out_biases,
                  negative_slope: float = 0.0) -> list[AffineFn2]:
    w = np.asarray(out_weights, dtype=np.float64)
    if w.ndim == 1:
        w = w.reshape(1, -1)
    return combine_lines(last_lines, mask, w, out_biases, negative_slope)


def integrate_affine_over_polygon(polygon: Sequence[Sequence[float]], f: AffineFn2) -> float:
    """Integral of ``f`` over a convex CCW polygon, fanned from vertex 0.

    Each fan triangle is pulled back to the reference triangle, where an
    affine integrand ``a'x' + b'y' + c'`` integrates to ``(a' + b' + 3c') / 6``;
    the Jacobian contributes ``2 * area``.
    """
    n = len(polygon)
    if n < 3:
        raise TooFewVertices(f"polygon needs >= 3 vertices, got {n}")
    a, b = f.a, f.b
    x1, y1 = polygon[0]
    c1 = f.evaluate(x1, y1)
    total = 0.0
    for k in range(1, n - 1):
        x2, y2 = polygon[k]
        x3, y3 = polygon[k + 1]
        area = 0.5 * ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))
        a_ref = a * (x2 - x1) + b * (y2 - y1)
        b_ref = a * (x3 - x1) + b * (y3 - y1)
        total += area / 3.0 * (a_ref + b_ref + 3.0 * c1)
    return total


def _insert(dcel: Dcel, rows: np.ndarray) -> None:
    for i, (a, b, c) in enumerate(rows):
        line = AffineFn2(float(a), float(b), float(c))
        if line.is_degenerate_line():
            dcel.add_constant_line(i, line)
        else:
            dcel.add_line(i, line)


class Traversal:
    """Workspaces and cursors for the depth-first walk over all leaf faces.

    Exactly one ``Dcel`` per hidden layer is allocated and reused.
    """

    def __init__(self, slice: ConditionedSlice):
        mlp = slice.mlp
        if mlp.depth > MAX_HIDDEN_LAYERS:
            raise LayerBudgetExceeded(f"{mlp.depth} hidden layers exceed {MAX_HIDDEN_LAYERS}")
        if mlp.width > MASK_CAPACITY:
            raise MaskOverflow(f"hidden width {mlp.width} exceeds mask capacity {MASK_CAPACITY}")
        self.slice = slice
        self.depth = 0
        self.trail = [0] * mlp.depth
        self.dcels = [Dcel() for _ in range(mlp.depth)]
        self.lines = [np.zeros((mlp.width, 3)) for _ in range(mlp.depth)]
        self.face_counts = [0] * mlp.depth

    def run(self) -> Iterator[FacePiece]:
        mlp = self.slice.mlp
        slope = mlp.activation.negative_slope
        m = mlp.depth
        root = self.dcels[0].reset_to_polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
        self.lines[0] = _as_array(first_layer_lines(self.slice))
        _insert(root, self.lines[0])
        self.face_counts[0] += root.n_inner_faces

        depth = 0
        while depth >= 0:
            self.depth = depth
            dcel = self.dcels[depth]
            if depth < m - 1:
                if self.trail[depth] == dcel.n_inner_faces:
                    self.trail[depth] = 0
                    depth -= 1
                    continue
                face = dcel.inner_face_ids()[self.trail[depth]]
                self.trail[depth] += 1
                depth += 1
                child = self.dcels[depth].reset_to_polygon(dcel.face_polygon(face), validate=False)
                layer = mlp.hidden[depth]
                self.lines[depth] = _combine(self.lines[depth - 1], dcel.face_mask(face),
                                             layer.weights, layer.biases, slope)
                _insert(child, self.lines[depth])
                self.face_counts[depth] += child.n_inner_faces
            else:
                for face in dcel.inner_face_ids():
                    rows = _combine(self.lines[depth], dcel.face_mask(face),
                                    mlp.output.weights, mlp.output.biases, slope)
                    yield FacePiece(dcel.face_polygon(face),
                                    [AffineFn2(*map(float, r)) for r in rows])
                depth -= 1


def enumerate_pieces(slice: ConditionedSlice) -> Iterator[FacePiece]:
    return Traversal(slice).run()


def integrate(slice: ConditionedSlice) -> IntegralResult:
    trav = Traversal(slice)
    G = np.zeros(slice.mlp.n_outputs)
    count = 0
    for piece in trav.run():
        for k, f in enumerate(piece.affine):
            G[k] += integrate_affine_over_polygon(piece.polygon, f)
        count += 1
    return IntegralResult(G, count, list(trav.face_counts))


def dump_pieces(slice: ConditionedSlice, path=None, svg_path=None) -> int:
    """Write one CSV row per piece and/or an SVG of the subdivision."""
    pieces = list(enumerate_pieces(slice))
    k = slice.mlp.n_outputs
    header = ["piece_id", "vertices"] + [f"{s}{j}" for j in range(k) for s in "abc"]
    if path is not None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, p in enumerate(pieces):
                verts = ";".join(f"{v.x!r} {v.y!r}" for v in p.polygon)
                w.writerow([i, verts] + [repr(c) for f in p.affine for c in f.as_tuple()])
    if svg_path is not None:
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(polygons_to_svg([p.polygon for p in pieces]))
    return len(pieces)
