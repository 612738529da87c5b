"""Exception hierarchy shared by every module."""


class DepthMaskError(Exception):
    """Base class for all errors raised by depthmask."""


class DomainError(DepthMaskError, ValueError):
    """An argument lies outside the domain of the operation."""


class InputError(DepthMaskError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class ConfigurationError(DepthMaskError, ValueError):
    """Depth-bin configuration does not agree with the data it is applied to."""


class DegenerateGeometryError(DepthMaskError, ValueError):
    pass


class NonDifferentiableError(DepthMaskError, ValueError):
    """Gradient requested too close to a kink of an L1 term."""


class ParseError(DepthMaskError, ValueError):
    """Malformed text input. ``line`` is 1-based, or None for whole-file errors."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
