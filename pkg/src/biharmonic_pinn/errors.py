"""Exception types shared across the package."""


class SingularityError(ArithmeticError):
    """Raised when an operator is evaluated at (or too close to) a singular point."""


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a function or geometry."""


class NumericError(FloatingPointError):
    """Raised when a loss or residual becomes non-finite.

    ``term`` names the offending loss term (if known) and ``index`` the
    collocation point at which the first non-finite value was found.
    """

    def __init__(self, message, term=None, index=None):
        super().__init__(message)
        self.term = term
        self.index = index
