"""Exception types shared across the package."""


class LdthermoError(Exception):
    """Base class for all package errors."""


class EmptySpectrum(LdthermoError):
    pass


class DuplicateEnergy(LdthermoError):
    pass


class NonPositiveDegeneracy(LdthermoError):
    pass


class Overflow(LdthermoError):
    pass


class NonThermalState(LdthermoError):
    """State blocks lack the energy labels an operation needs."""


class OutOfRange(LdthermoError):
    pass


class EmptyShell(LdthermoError):
    pass


class DimensionMismatch(LdthermoError):
    pass


class NotMajorized(LdthermoError):
    pass


class ZeroRungs(LdthermoError):
    pass


class EmptyWindow(LdthermoError):
    pass


class WindowTouchesGround(LdthermoError):
    pass


class WindowTouchesTop(LdthermoError):
    pass


class InfeasibleDeltaPrime(LdthermoError):
    pass


class DimOrderViolated(LdthermoError):
    pass


class LadderTooSmall(LdthermoError):
    pass


class LadderBoundaryHit(LdthermoError):
    pass


class NotAConverseCase(LdthermoError):
    pass


class InfeasibleAtThisM(LdthermoError):
    pass


class ParseError(LdthermoError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(LdthermoError):
    def __init__(self, message, field=None):
        if field is not None:
            message = f"field '{field}': {message}"
        super().__init__(message)
        self.field = field
