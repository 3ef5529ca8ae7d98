"""Exception hierarchy with the exit codes the command line reports."""


class MaassError(Exception):
    """Base class; ``exit_code`` is what the CLI returns."""

    exit_code = 1
    category = "error"


class UsageError(MaassError):
    exit_code = 64
    category = "usage"


class DomainError(MaassError, ValueError):
    exit_code = 65
    category = "domain"


class CapacityError(MaassError):
    exit_code = 69
    category = "capacity"


class NotFoundError(DomainError):
    """No eigenvalue inside the requested window."""


class NumericalError(MaassError, ArithmeticError):
    """Numerical failure; ``estimate`` holds the achieved accuracy or condition number."""

    exit_code = 70
    category = "numerical"

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
