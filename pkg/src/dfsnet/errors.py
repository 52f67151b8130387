"""Exception types shared across the package."""


class DfsNetError(Exception):
    """Base class for all errors raised by dfsnet."""


class ParseError(DfsNetError, ValueError):
    """Malformed input text (DIMACS, state files, target files)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapacityError(DfsNetError):
    """A dense or brute-force computation would exceed its size limit."""


class PromiseViolation(DfsNetError):
    """An input state does not satisfy the decoherence-free-subspace promise."""


class ZeroProbabilityError(DfsNetError):
    """Post-selection on an outcome that has probability zero."""
