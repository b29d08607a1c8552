"""Exception types shared across the package."""


class AffdimError(Exception):
    """Base class for all package-specific errors."""


class InvalidMatrixError(AffdimError):
    """Singular or non-square matrix where a non-singular square one is required."""


class ShapeError(AffdimError):
    """Dimension mismatch between operands."""


class DomainError(AffdimError):
    """Scalar argument outside its mathematical domain."""


class ConfigError(AffdimError):
    """Invalid configuration input; carries one message per offence."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DepthError(AffdimError):
    """Request beyond the materialised depth of a tree."""


class EmptyShiftError(AffdimError):
    """Shift applied to a tree with a single block."""


class SchemeError(AffdimError):
    """Translation class assignment violating the identification rules."""


class ResolutionError(AffdimError):
    """Box-counting scales finer than the cloud's truncation error allows."""


class FeasibilityError(AffdimError):
    """Exact computation would exceed the configured enumeration budget."""
