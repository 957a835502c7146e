"""Exception hierarchy shared by the library and the command line."""


class NykpcaError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class UsageError(NykpcaError, ValueError):
    """Bad arguments, violated preconditions, or invalid configuration."""

    exit_code = 2


class DataFormatError(NykpcaError, ValueError):
    """Malformed input files (CSV, IDX)."""

    exit_code = 3


class NumericError(NykpcaError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""

    exit_code = 4


class InfeasibleError(NumericError):
    """No parameter in the admissible range satisfies the requested condition.

    ``gap`` is how far the condition is from holding at the most favourable
    end of the range.
    """

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap
