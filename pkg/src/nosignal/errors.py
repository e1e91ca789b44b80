"""Exception types shared across the package."""


class NoSignalError(Exception):
    """Base class for every error raised by this package."""


class UsageError(NoSignalError, ValueError):
    """Arguments are inconsistent with each other (size mismatch, bad index)."""


class ValidationError(NoSignalError, ValueError):
    """An object fails a physical validity check (state, channel, config)."""


class StructureError(NoSignalError, ValueError):
    """A Hamiltonian does not have the nearest-neighbour structure an operation needs."""


class ResourceError(NoSignalError, RuntimeError):
    """A size cap (dense dimension, Pauli term count) would be exceeded."""

    def __init__(self, message, reached=None):
        super().__init__(message)
        self.reached = reached
