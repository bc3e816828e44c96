class QuadSparseError(Exception):
    """Base class for library errors."""


class InvalidArgument(QuadSparseError, ValueError):
    pass


class ConvergenceError(QuadSparseError):
    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class DegenerateInstance(QuadSparseError):
    """No usable pivot: every diagonal correlation is non-positive."""


class DegenerateSupport(QuadSparseError):
    """The support threshold removed every coordinate."""


class DegenerateIterate(QuadSparseError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DivergenceError(QuadSparseError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BudgetExceeded(QuadSparseError):
    def __init__(self, required, budget):
        super().__init__(f"enumeration needs {required} candidates, budget is {budget}")
        self.required = required
        self.budget = budget


class FormatError(QuadSparseError):
    pass
