"""Exception types shared across the package."""


class SubsketchError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SubsketchError):
    """A parameter is outside its legal domain."""


class InstanceFormatError(SubsketchError):
    """An instance file could not be parsed.

    When the failure is tied to a specific line of a text instance the
    1-based line number is carried in ``line``.
    """

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InsufficientSamplesError(SubsketchError):
    """A sample sequence is too short for the requested estimate."""


class SamplingBudgetExceededError(SubsketchError):
    """An adaptive run would exceed the configured draw budget."""


class OracleScaleError(SubsketchError):
    """An exact oracle was asked for an instance beyond its size cap."""


class QualityViolation(SubsketchError):
    """Measured sketch quality falls outside the admissible parameter range.

    The raw measured triple is attached so callers can still inspect it.
    """

    def __init__(self, alpha, beta1, beta2):
        super().__init__(
            "sketch quality out of range: "
            f"alpha={alpha:.6g} beta1={beta1:.6g} beta2={beta2:.6g}"
        )
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2


class PackingError(SubsketchError):
    """A schedule construction could not place every job under its deadline."""
