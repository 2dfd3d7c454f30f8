"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: validation-type errors exit with 2,
resource errors with 3.
"""


class NmrQSimError(Exception):
    """Base class for all package errors."""


class ValidationError(NmrQSimError, ValueError):
    """Input data violates an invariant (asymmetric J, NaN, bad operands)."""


class SchemaError(ValidationError):
    """Spin-system document does not follow the JSON schema."""


class ParameterError(ValidationError):
    """An argument is outside its supported range."""


class ResourceError(NmrQSimError):
    """Problem is too large for the requested engine or topology."""


class DecompositionError(NmrQSimError):
    """Gate kind cannot be rewritten into the requested native basis."""


class UndefinedMetricError(NmrQSimError, ValueError):
    """Metric is undefined for the inputs (e.g. zero-norm spectrum)."""
