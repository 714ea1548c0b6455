"""Exception types shared across the package."""


class AnisospecError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(AnisospecError):
    """Invalid, inconsistent, or unknown configuration input."""


class NumericalError(AnisospecError):
    """A numerical procedure failed to produce a usable result."""


class DegenerateVarianceError(NumericalError):
    """The estimated variance of the test statistic is zero (or negative
    after clamping), so the standardized statistic is undefined."""


class DataIOError(AnisospecError):
    """Reading or writing data files failed or produced malformed content."""
