"""Semantic exception hierarchy shared across the package."""


class EquicurveError(Exception):
    """Base class for all package errors."""


class ParameterError(EquicurveError, ValueError):
    """A parameter violates its contract (non-finite, wrong sign, bad shape)."""


class DomainError(EquicurveError, ValueError):
    """An evaluation point lies outside the support of a distribution."""


class DegenerateSampleError(EquicurveError, ValueError):
    """A sample statistic is undefined (e.g. zero variance where S appears)."""


class CalibrationError(EquicurveError, RuntimeError):
    """Root-finding for calibration constants failed to bracket or converge."""


class NumericError(EquicurveError, RuntimeError):
    """A quadrature or other numeric routine did not converge."""


class AmbiguousDecisionError(EquicurveError, RuntimeError):
    """No decision has a finite objective value."""


class ConfigError(EquicurveError, ValueError):
    """A run configuration file is missing, malformed, or inconsistent."""
