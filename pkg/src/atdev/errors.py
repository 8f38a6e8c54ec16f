"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors -> 1, data/model
errors -> 2, numerical failures -> 3.
"""


class AtdevError(Exception):
    """Base class for all package errors."""


class UsageError(AtdevError):
    """Bad invocation: unknown option, conflicting or missing arguments."""


class DataError(AtdevError):
    """Malformed or degenerate input data (parse failures, NaN cells,
    constant columns, ragged rows)."""


class ModelError(AtdevError):
    """Model backend failure: bad weights file, unknown catalog id,
    external-process spawn or protocol violation."""


class NumericalError(AtdevError):
    """Non-finite values produced where finite ones are required
    (diverging fits, NaN predictions or derivatives)."""


class NoOracleError(AtdevError):
    """Requested a closed-form reference curve outside the covered
    (model, kind, variable) combinations."""
