"""Exception types shared across the library."""


class DomainError(ValueError):
    """Raised when a matrix function is requested on a spectrum it is not
    defined on (singularity or branch cut hit), or when no numerically
    trustworthy evaluation path exists for the given input."""


class MatrixMarketError(ValueError):
    """Raised for malformed or unsupported Matrix Market input."""


class OracleScaleError(ValueError):
    """Raised when a dense reference computation is requested beyond its
    hard size guard. The guards exist so tests cannot silently run at an
    unintended scale."""
