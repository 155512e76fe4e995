"""
Exceptions raised by the factoring pipeline.

Each exception carries the process exit code the CLI reports for it:
0 success, 1 internal failure, 2 invalid input, 3 budget exhausted.
"""


class FactoringError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class InvalidInputError(FactoringError, ValueError):
    """Input rejected before any work was done."""

    exit_code = 2


class PrimeInputError(InvalidInputError):
    """N is prime, so there is nothing to factor."""


class PerfectPowerError(InvalidInputError):
    """N is a perfect power; the congruence-of-squares method does not apply."""

    def __init__(self, n, root, exponent):
        super().__init__(f"input is a perfect power: {n} = {root}^{exponent}")
        self.root = root
        self.exponent = exponent


class DegenerateBasisError(FactoringError):
    """Gram-Schmidt found a linearly dependent vector."""


class NotInLatticeError(FactoringError):
    """A point failed exact reconstruction from its recovered coefficients."""


class EnumerationTooLargeError(InvalidInputError):
    """Full enumeration requested above the state-count cap."""


class BudgetExhaustedError(FactoringError):
    """The lattice budget ran out before the run finished."""

    exit_code = 3

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
