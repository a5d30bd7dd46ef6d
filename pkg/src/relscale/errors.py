"""Exception types shared across the toolkit.

Everything raised here is an *expected* failure (bad input data, degenerate
fits, infeasible plans). The CLI maps any RelscaleError to exit code 1.
"""


class RelscaleError(Exception):
    """Base class for all expected toolkit failures."""


class ValidationError(RelscaleError):
    """A record, spec, or parameter set violates an invariant.

    ``field`` names the offending field when one can be identified.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class IngestError(ValidationError):
    """A run-log file failed schema or invariant checks.

    ``line`` is the 1-based line number of the offending row when known.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, field=field)
        self.line = line


class PlanError(RelscaleError):
    """A sweep plan cannot be constructed under the given policy."""


class FrontierError(RelscaleError):
    """Compute-optimal frontier extraction failed."""


class FitError(RelscaleError):
    """A regression, bootstrap, or correlation could not be computed."""


class CalibrationError(RelscaleError):
    """Loss-to-accuracy calibration failed."""
