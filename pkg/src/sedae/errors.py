"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition."""


class DimensionError(ContractViolation):
    """Tensor shapes do not line up."""


class NumericError(ArithmeticError):
    """A value went non-finite, or an iterative solver failed to converge."""
