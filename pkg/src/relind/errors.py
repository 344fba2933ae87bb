"""Exception hierarchy.

Each class carries the CLI exit code it maps to.
"""


class RelindError(Exception):
    exit_code = 1


class UsageError(RelindError, ValueError):
    """Invalid arguments or inconsistent configuration."""

    exit_code = 2


class DataError(RelindError, ValueError):
    """Malformed or non-numeric input data."""

    exit_code = 3


class ResourceCapError(RelindError, RuntimeError):
    """A computation would exceed the configured enumeration cap."""

    exit_code = 4


class NumericError(RelindError, ArithmeticError):
    exit_code = 5


class DegenerateVarianceError(NumericError):
    """Jackknife standard deviations below the floor for some pairs.

    Attributes
    ----------
    pairs : list of (int, int)
        1-based column pairs whose standard deviation fell below the floor.
    """

    def __init__(self, pairs, floor):
        self.pairs = list(pairs)
        self.floor = floor
        shown = ", ".join(f"({i},{j})" for i, j in self.pairs[:10])
        more = "" if len(self.pairs) <= 10 else f" and {len(self.pairs) - 10} more"
        super().__init__(
            f"jackknife standard deviation below {floor:g} for pairs {shown}{more}"
        )
