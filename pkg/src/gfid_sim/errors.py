"""Exception hierarchy shared by every module."""


class GfidError(Exception):
    """Base class for all simulator errors."""


class DimensionError(GfidError, ValueError):
    """Layer geometry violates the output-dimension rule."""


class ShapeError(GfidError, ValueError):
    """Tensor extents disagree with the layer they are used with."""


class ModeError(GfidError, ValueError):
    """A (w_f, s) pair the reconfigurable tile cannot run."""


class CapacityError(GfidError, ValueError):
    """A segment does not fit into the partial-sum memories."""


class PreconditionError(GfidError, ValueError):
    """An argument violates a documented precondition."""


class UnknownNetworkError(GfidError, LookupError):
    """No built-in network with the requested name."""
