"""Exception and warning types raised across the toolkit."""


class VlcLocError(Exception):
    """Base class for all toolkit errors."""


class DomainError(VlcLocError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class CoincidentEndpoints(DomainError):
    """TX and RX closer than 1 mm; the link geometry is degenerate."""


class AliasingError(DomainError):
    """Requested tone frequency violates the Nyquist limit of the sampler."""


class ToneCollision(DomainError):
    """Two tones are too close in frequency to separate over the window."""


class NoSignal(VlcLocError):
    """A link has zero channel gain (beam or field-of-view clipped)."""


class OutOfFov(DomainError):
    """Angle of arrival beyond the receiver field of view."""


class DegenerateMotion(VlcLocError):
    """Relative displacement too small to define a travel direction."""


class DegenerateGeometry(VlcLocError):
    """Observation model evaluated at a singular geometry."""


class DimensionMismatch(DomainError):
    """Jacobian rows and variance entries do not line up."""


class MethodInapplicable(VlcLocError):
    """A localization method's validity assumption is violated."""


class ConfigError(VlcLocError):
    """Invalid run configuration."""


class AmbiguityWarning(UserWarning):
    """A phase-derived range is close to its unambiguous limit."""
