"""Exception hierarchy.

Library errors derive from :class:`GSDError`; input-file problems raised by
:mod:`gsdtest.io` derive from :class:`DataError` so the CLI can map them to
a dedicated exit code.
"""


class GSDError(Exception):
    """Base class for all errors raised by gsdtest."""


class SchemaMismatch(GSDError, ValueError):
    """A point does not conform to its :class:`~gsdtest.core.ScaleSchema`."""


class DegenerateBounds(GSDError, ValueError):
    """Lower and upper bound coincide, so no strict top/bottom pair exists."""


class InvalidBounds(GSDError, ValueError):
    """Supplied bounds do not enclose every data point."""


class NumericalError(GSDError, RuntimeError):
    """An LP could not be solved to optimality."""


class InconsistentSystem(NumericalError):
    """The observed preference system admits no strictly separating representation."""


class EmptyCredalSet(GSDError, ValueError):
    pass


class ResampleBudgetTooSmall(GSDError, ValueError):
    """Monte-Carlo budget too small for the p-value to ever reach alpha."""


class DataError(GSDError):
    """Problem with an input dataset (file, columns, or cell values)."""


class FileError(DataError, OSError):
    pass


class SchemaError(DataError, ValueError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class UnknownLevel(SchemaError):
    pass


class NonFiniteNumber(SchemaError):
    pass


class EmptyGroup(DataError, ValueError):
    pass
