from __future__ import annotations


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class ContractError(ValueError):
    """A precondition of a public operation was violated."""


class NumericError(ArithmeticError):
    """A NaN or Inf appeared where finite values are required."""


class TapeReuseError(RuntimeError):
    """A tape was asked for a second backward pass."""
