"""Exception types shared across the package."""


class CharmError(Exception):
    """Base class for all package errors."""


class ConfigError(CharmError, ValueError):
    """Malformed or geometrically invalid configuration."""


class PoleError(CharmError, ZeroDivisionError):
    """Evaluation requested at (or too close to) a pole."""


class InvalidGeneratorError(CharmError, KeyError):
    pass


class TruncationError(CharmError):
    """Enumeration hit the element cap; ``partial`` holds what was built."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class CriticalPointNotFound(CharmError):
    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples


class AutomorphyViolation(CharmError):
    pass


class InvariantViolation(CharmError):
    pass


class IdentityViolation(CharmError):
    """A boundary identity failed its dual-path cross-check."""


class QuadratureError(CharmError):
    pass


class PathError(CharmError):
    pass


class ConvergenceError(CharmError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
