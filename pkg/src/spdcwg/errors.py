"""Exception types shared across the package."""


class SpdcError(Exception):
    """Base class for every error raised by :mod:`spdcwg`."""


class DispersionDomainError(SpdcError, ValueError):
    """Wavelength outside the validity interval of a dispersion model."""


class ModeCutoffError(SpdcError, ValueError):
    """The requested waveguide mode is not guided at this wavelength."""


class UnpolableError(SpdcError, ValueError):
    """No positive poling period can phase match the requested process."""


class ConstructionError(SpdcError, ValueError):
    """A spectral amplitude could not be built on the requested grid."""


class OptimizationError(SpdcError, RuntimeError):
    """An optimizer failed to bracket or locate its optimum."""


class FitError(SpdcError, ValueError):
    """Input data cannot be fitted by the requested model."""


class ConfigError(SpdcError, ValueError):
    """Aggregated configuration validation failure.

    ``problems`` holds one ``"location: message"`` string per violation.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


class StageError(SpdcError):
    """A failure inside a pipeline stage; ``cause`` keeps the original error."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
