"""Exception types shared by all modules."""


class DomainError(ValueError):
    """Input outside the region where a model or formula is defined."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its requested accuracy.

    ``achieved`` carries whatever progress was made (an error estimate,
    the time reached by an integrator, ...).
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
