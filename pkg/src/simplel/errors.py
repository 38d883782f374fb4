"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class NumericalError(RuntimeError):
    """A numerical routine failed (non-convergence, degenerate input)."""


class SelectionError(NumericalError):
    """No admissible value to select from (all candidates undefined)."""
