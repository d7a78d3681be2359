"""Error types shared across the package.

Bad bytes raise PoolFormatError, bad data raises PoolValidationError, and
plain bad arguments raise ValueError.
"""


class PoolFormatError(Exception):
    """The byte stream is not a well-formed SASE file (magic, version, truncation)."""


class PoolValidationError(Exception):
    """The data violates an embedding-pool invariant (norms, labels, ids, counts)."""
