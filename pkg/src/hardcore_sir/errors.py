"""Exception hierarchy shared by every module of the package."""


class HardcoreSIRError(Exception):
    """Base class for all errors raised by hardcore_sir."""


class DomainError(HardcoreSIRError, ValueError):
    """An argument lies outside the domain where a function is defined."""


class ConvergenceError(HardcoreSIRError, ArithmeticError):
    """A series or continued fraction did not reach tolerance within budget."""


class QuadratureError(HardcoreSIRError, ArithmeticError):
    """An adaptive quadrature failed to meet its error tolerance."""


class InfeasibleMoments(HardcoreSIRError, ValueError):
    """Moments cannot belong to the requested distribution family on [0, 1]."""


class NoConvergence(HardcoreSIRError, ArithmeticError):
    """An iterative parameter fit exhausted its budget."""


class ParseError(HardcoreSIRError, ValueError):
    """A trace or configuration file is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(HardcoreSIRError, ValueError):
    """Parsed data violates a structural invariant."""


class InsufficientData(HardcoreSIRError, ValueError):
    """Too few observations to fit a model."""
