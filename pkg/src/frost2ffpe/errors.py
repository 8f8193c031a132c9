"""Exception hierarchy shared across the toolkit."""


class Frost2FFPEError(Exception):
    """Base class for all toolkit errors."""


class SlideReadError(Frost2FFPEError):
    """A slide file is missing, unreadable, or malformed."""


class GeometryError(Frost2FFPEError):
    """Patch/manifest geometry is inconsistent (overlap, out of bounds, ...)."""


class ValueSpaceError(Frost2FFPEError):
    """Pixel data is not in the declared value space."""


class ConfigurationError(Frost2FFPEError):
    """A model or pipeline configuration is invalid."""


class LossInputError(Frost2FFPEError):
    """Loss inputs violate their contract (shape, norm, finiteness)."""


class EvaluationError(Frost2FFPEError):
    """Metric inputs are inconsistent or insufficient."""
