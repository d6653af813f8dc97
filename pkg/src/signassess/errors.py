"""Exception taxonomy.

Every error raised on purpose derives from AssessError and carries the
process exit code the CLI should use: 2 for configuration/validation
problems, 3 for numeric failures, 4 for I/O failures.
"""


class AssessError(Exception):
    """Base class for all deliberate failures."""

    exit_code = 1


class ConfigError(AssessError):
    """Bad run configuration: missing keys, unparseable overrides, etc."""

    exit_code = 2


class DataError(AssessError):
    """Invalid input data: malformed files, broken invariants, bad shapes."""

    exit_code = 2


class NumericError(AssessError):
    """Numeric failure: non-finite loss, Cholesky breakdown, degenerate stats."""

    exit_code = 3


class IoError(AssessError):
    """Filesystem failure while reading or writing artifacts."""

    exit_code = 4
