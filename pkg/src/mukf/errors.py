"""Exception types raised across the package.

Everything raised on purpose derives from :class:`MukfError` so callers can
catch one base class at the CLI boundary and map it to an exit code.
"""


class MukfError(Exception):
    """Base class for all deliberate errors raised by this package."""


class DimensionMismatch(MukfError):
    """An array argument has the wrong shape for the operation."""


class NonPositiveDt(MukfError):
    """A time step was zero or negative where strictly positive is required."""


class CovarianceNotPSD(MukfError):
    """A covariance failed Cholesky factorization even after jitter repair."""


class InnovationCovarianceSingular(MukfError):
    """Innovation covariance could not be solved; R ill-conditioned or sigma spread collapsed."""


class SingularInertia(MukfError):
    """Vehicle mass matrix is not invertible."""


class CellOutOfRange(MukfError):
    """ADCP cell distance is outside (0, d_max]."""


class MalformedRecord(MukfError):
    """A sensor-log line could not be parsed; message carries the line number."""


class SchemaMismatch(MukfError):
    """File header/version or field set does not match what this reader expects."""


class NonMonotoneTimestamp(MukfError):
    """Record timestamps decreased; message carries the offending line number."""


class TimeBaseMismatch(MukfError):
    """Two time series could not be aligned within one sample period."""


class ConfigError(MukfError):
    """Experiment configuration is missing required keys or has bad values."""
