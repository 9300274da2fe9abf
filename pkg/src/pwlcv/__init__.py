"""Exact integration of piecewise-linear MLPs over the unit square, and
Monte Carlo control variates built on it."""
from .geometry import AffineFn2, Dcel, Vertex, init_unit_square, init_with_face
from .integrator import FacePiece, IntegralResult, enumerate_pieces, integrate
from .mlp import ActivationSpec, ConditionedSlice, Mlp, TrainConfig, load_model, save_model, train

__all__ = [
    "AffineFn2", "ActivationSpec", "ConditionedSlice", "Dcel", "FacePiece", "IntegralResult",
    "Mlp", "TrainConfig", "Vertex", "enumerate_pieces", "init_unit_square", "init_with_face",
    "integrate", "load_model", "save_model", "train",
]
