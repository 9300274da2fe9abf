"""Exception types shared across the package."""


class PwlcvError(Exception):
    """Base class for all package errors."""


class GeometryError(PwlcvError):
    pass


class TooFewVertices(GeometryError):
    pass


class NonConvexInput(GeometryError):
    pass


class DegenerateLine(GeometryError):
    pass


class OuterFaceQuery(GeometryError):
    pass


class MaskOverflow(PwlcvError):
    """A layer needs more line-mask bits than a single 64-bit word provides."""


class DimensionMismatch(PwlcvError, ValueError):
    pass


class LayerBudgetExceeded(PwlcvError):
    pass


class SchemaError(PwlcvError, ValueError):
    pass


class UnsupportedActivation(SchemaError):
    pass


class NonFiniteLoss(PwlcvError, FloatingPointError):
    pass


class UnknownFunction(PwlcvError, KeyError):
    pass
