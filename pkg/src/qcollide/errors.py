class QcollideError(Exception):
    """Base class for errors raised by qcollide."""


class ConfigError(QcollideError, ValueError):
    """Bad user input: config files, curve files, scheme tokens."""


class ConvergenceError(QcollideError, RuntimeError):
    """A numerical procedure failed to reach its tolerance."""
