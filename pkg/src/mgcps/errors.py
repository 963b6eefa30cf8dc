"""Common exception base for the mgcps package."""


class MgcpsError(Exception):
    """Base class for all errors raised by this package."""
