"""Exception types shared across the package."""


class StigmergraphError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(StigmergraphError, ValueError):
    """A numeric or structural parameter is outside its allowed range."""


class InvalidDimensionError(StigmergraphError, ValueError):
    """Vector operands disagree in dimension or the dimension is not positive."""


class MissingEdgeError(StigmergraphError, KeyError):
    """An edge id (or endpoint pair) is not present in the graph."""


class MissingVertexError(StigmergraphError, KeyError):
    """A vertex id is not present in the graph."""


class SelfLoopError(StigmergraphError, ValueError):
    """An operation attempted to create an edge from a vertex to itself."""


class GraphFormatError(StigmergraphError, ValueError):
    """A serialized graph or sequence file is malformed.

    line/column are 1-based positions of the offending input when known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
            message = message + where
        super().__init__(message)


class OracleSizeError(StigmergraphError, ValueError):
    """An exhaustive oracle was asked to enumerate past its hard size bound."""


class ConfigError(StigmergraphError, ValueError):
    """A run configuration is invalid; the message names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class ReplayDivergenceError(StigmergraphError, RuntimeError):
    """A replayed run did not reproduce the stored artifacts byte-for-byte."""
