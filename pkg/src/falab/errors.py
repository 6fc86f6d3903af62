"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument breaks a documented precondition (shape, symmetry, range)."""


class DivergenceError(RuntimeError):
    """Training blew up; carries the last finite step index."""

    def __init__(self, message, last_finite_step):
        super().__init__(message)
        self.last_finite_step = last_finite_step


class DatasetFormatError(ValueError):
    """Malformed dataset CSV; carries the offending line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
