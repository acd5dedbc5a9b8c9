"""Exception hierarchy shared by all rcx modules."""


class RCXError(Exception):
    """Base class for every error raised by rcx."""


class ParameterError(RCXError, ValueError):
    """A numeric or structural parameter is outside its domain."""


class AlphabetMismatchError(RCXError, ValueError):
    pass


class InvalidSampleError(ParameterError):
    pass


class ContextExhausted(RCXError):
    """A query needed more past symbols than the buffer holds.

    ``depth`` is the buffer depth that was available and ``required`` a lower
    bound on the depth that would have been needed.
    """

    def __init__(self, depth: int, required: int, message: str | None = None):
        self.depth = depth
        self.required = required
        super().__init__(
            message
            or f"past of depth {depth} is too short; at least {required} symbols are needed"
        )


class ModelError(RCXError, ValueError):
    """A process model is malformed or does not support the request."""


class UnsupportedModelError(ModelError):
    pass


class ZeroProbabilityPastError(ModelError):
    pass


class DepthError(ModelError):
    pass


class InvalidRCRError(ModelError):
    pass


class SpecParseError(ParameterError):
    """A model spec or sample file could not be parsed."""

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None,
                 column: int | None = None):
        self.field = field
        self.line = line
        self.column = column
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        super().__init__(f"{message} ({'; '.join(where)})" if where else message)


class InvariantViolation(RCXError, AssertionError):
    """An internal invariant failed; this indicates a bug, not bad input."""
