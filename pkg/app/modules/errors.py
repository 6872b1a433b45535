class AuditError(Exception):
    """Base class for every failure the toolkit reports to the user."""


class ConfigError(AuditError):
    """Bad flags, bad config file values, unknown vectorizer/metric names."""


class DataError(AuditError, ValueError):
    """Input data that does not satisfy the file schemas or model invariants."""


class DegenerateDataError(DataError):
    """Data is well-formed but carries no signal (zero variance, single class, ...)."""


class DimensionMismatchError(DataError):
    pass


class MissingVectorError(DataError, KeyError):
    """A precomputed embedding was requested for a key the file does not contain."""

    def __init__(self, key: str):
        super().__init__(f"No precomputed vector for key '{key}'")
        self.key = key

    def __str__(self) -> str:
        return self.args[0]
