"""Exception types raised across the package.

Everything derives from HsfuseError so callers can catch the package's
failures with a single except clause; the subclasses exist because several
call sites need to tell failure modes apart (a truncated file is not the
same problem as a band full of zeros).
"""


class HsfuseError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(HsfuseError):
    """Shapes or sizes that cannot be combined (zero dims, non-divisible grids)."""


class FormatError(HsfuseError):
    """A container header that is well-formed bytes but not a cube we accept."""


class CorruptionError(HsfuseError):
    """A container whose byte length or payload contradicts its header."""


class NonFiniteError(HsfuseError):
    """NaN or Inf where finite samples are required."""


class IllPosedError(HsfuseError):
    """A solve whose normal matrix is singular for the given regularization."""


class CapacityError(HsfuseError):
    """A dense-path request larger than the dense path is allowed to build."""


class ParameterError(HsfuseError):
    """Configuration values outside their documented domain."""


class DegenerateBandError(HsfuseError):
    """A metric that divides by a per-band statistic hit a zero band.

    The offending band indices are carried in ``bands``.
    """

    def __init__(self, message, bands):
        super().__init__(message)
        self.bands = list(bands)


class UndefinedMetricError(HsfuseError):
    """A metric whose value is undefined for the given inputs."""


class PriorShapeError(HsfuseError):
    """A prior cube whose dimensions do not match the fusion target."""


class SolverFailure(HsfuseError):
    """A solver error raised while scanning regularization values.

    Wraps the original exception and records the mu at which it happened.
    """

    def __init__(self, mu, cause):
        super().__init__(f"solver failed at mu={mu!r}: {cause}")
        self.mu = mu
        self.cause = cause
