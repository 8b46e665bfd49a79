"""Shared exception types."""


class DataError(ValueError):
    """Raised when input data violates the documented formats or value ranges.

    Messages name the offending line and field where that information is
    available, so CLI users can locate the record. The CLI maps this
    exception to exit code 2.
    """
