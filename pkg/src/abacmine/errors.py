"""Exception types shared across the package."""


class AbacError(Exception):
    """Base class for all abacmine errors."""


class SchemaError(AbacError):
    """Invalid schema definition, or data that does not match the schema."""


class ContradictionError(SchemaError):
    """A filter contains both <a, v> and <a, !v>, which nothing can satisfy."""


class UnknownEntityError(AbacError):
    """A request references an entity id that is not in the policy."""


class EncodingError(AbacError):
    """A log value cannot be encoded against the schema."""


class BinningError(AbacError):
    """A numeric value falls outside every declared bin."""


class GenerationError(AbacError):
    """A generator spec is infeasible (e.g. more filters than attributes)."""


class LogSizeError(AbacError):
    """Brute-force enumeration would exceed the configured tuple cap."""


class EmptyLogError(AbacError):
    """An operation requires a non-empty (positive) log."""


class NoValidKError(AbacError):
    """No cluster count in the requested range is feasible for the data."""


class UndefinedMetricError(AbacError):
    """A metric is undefined because one side of the log is empty."""


class ConfigError(AbacError):
    """Invalid experiment or CLI configuration."""


class DataError(AbacError):
    """Malformed input file (CSV/JSON)."""
