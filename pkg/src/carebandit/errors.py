"""Exception types shared across the toolkit."""


class CareBanditError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CareBanditError):
    """A configuration value is missing, malformed, or out of range."""


class CohortError(CareBanditError):
    """A cohort file failed schema or invariant validation."""

    def __init__(self, message, row=None, column=None):
        if row is not None:
            message = f"row {row}, column '{column}': {message}" if column else f"row {row}: {message}"
        super().__init__(message)
        self.row = row
        self.column = column


class GenerationError(CareBanditError):
    """Synthetic cohort generation could not satisfy its calibration contract."""


class NumericalError(CareBanditError):
    """A numerical routine lost the properties it relies on (e.g. positive definiteness)."""
