"""Exception types raised across the simulator."""


class EcoLifeError(Exception):
    """Base class for all simulator errors."""


class DomainError(EcoLifeError, ValueError):
    """An argument is outside the domain of the operation (e.g. negative time)."""


class CapacityError(EcoLifeError, ValueError):
    """A function's memory footprint exceeds the device it is attributed to."""


class ProfileError(EcoLifeError, KeyError):
    """A function profile lacks an entry for the requested hardware."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ConfigError(EcoLifeError, ValueError):
    """Invalid configuration or inconsistent inputs."""


class TraceParseError(EcoLifeError, ValueError):
    """A CSV/JSON input could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OrderingError(TraceParseError):
    """Trace timestamps decrease."""


class PreconditionError(EcoLifeError, ValueError):
    """An operation was called in a state it does not support."""


class OracleSizeError(EcoLifeError, ValueError):
    """The clairvoyant policies refuse inputs too large to brute force."""
