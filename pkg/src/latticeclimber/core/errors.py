"""
Exception hierarchy for latticeclimber.
"""


class LatticeClimberError(Exception):
    """Base class for every error raised by the package."""


class ContractViolation(LatticeClimberError, ValueError):
    """A caller broke an operation's precondition (shapes, kinds, ranges)."""


class NumericalError(LatticeClimberError, ArithmeticError):
    """An objective or gradient stopped being finite."""


class LatticeSizeError(LatticeClimberError):
    """The exhaustive oracle refuses instances above its size cap."""

    def __init__(self, m: int, max_m: int):
        self.m = m
        self.max_m = max_m
        super().__init__(
            f"mixture has m={m} classifiers, above the oracle cap max_m={max_m}; "
            f"exhaustive enumeration costs up to 2^{m} membership calls"
        )


class InstanceFormatError(LatticeClimberError, ValueError):
    """A mixture or lattice report file could not be parsed."""


class ConfigError(LatticeClimberError, ValueError):
    """An experiment configuration is invalid."""
