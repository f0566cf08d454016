"""Exception types shared across the package.

DataError covers anything caused by bad input data or files (CLI exit 2);
NumericError covers non-finite numerics such as a divergent training run
(CLI exit 3). Library-internal contract violations raise plain ValueError.
"""


class DataError(ValueError):
    """Input data, file, or configuration is invalid."""


class PgmHeaderError(DataError):
    """PGM file has a malformed header."""


class PgmDataError(DataError):
    """PGM file declares more pixels than it contains."""


class PlacementError(DataError):
    """Synthetic lesion placement failed within the attempt budget."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values (e.g. divergent training)."""
