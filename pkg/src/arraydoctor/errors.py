"""Exception types shared across the package."""


class ArrayDoctorError(Exception):
    """Base class for all arraydoctor errors."""


class DimensionMismatchError(ArrayDoctorError, ValueError):
    """Operand shapes or lengths are inconsistent."""


class PlacementError(ArrayDoctorError, RuntimeError):
    """Requested fault groups could not be placed on the grid."""


class SingularSystemError(ArrayDoctorError, RuntimeError):
    """Least-squares system is rank deficient on the detected support."""


class UnderdeterminedError(ArrayDoctorError, ValueError):
    """Detected support is larger than the number of measurements."""


class SearchBudgetError(ArrayDoctorError, RuntimeError):
    """Exhaustive refinement search exceeds the configured budget."""


class DegenerateSupportError(ArrayDoctorError, RuntimeError):
    """All rows or all columns flagged faulty; averaging step impossible."""


class UndefinedMetricError(ArrayDoctorError, ValueError):
    """Metric is undefined for the given inputs (zero reference vector)."""


class ConfigError(ArrayDoctorError, ValueError):
    """Scenario configuration failed validation."""
