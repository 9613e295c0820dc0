"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so tests and callers
can match on the failure kind without parsing prose.
"""

from __future__ import annotations


class WsnError(Exception):
    """Base class: an error with a stable code string."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class TopologyError(WsnError):
    """Raised for invalid tree structures or lookups on missing nodes."""


class EnvError(WsnError):
    """Raised for unknown channels or invalid field/sensor parameters."""


class SimError(WsnError):
    """Raised for simulation misuse (bad round index, non-link, sink failure)."""

    def __init__(self, code: str, message: str, round_index: int | None = None):
        super().__init__(code, message)
        self.round_index = round_index


class TelemetryError(WsnError):
    """Raised by the telemetry log writer and parser."""

    def __init__(self, code: str, message: str, line_no: int | None = None):
        super().__init__(code, message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class GatewayError(WsnError):
    """Raised when the gateway service cannot start or is misused."""


class ConfigError(WsnError):
    """Raised for unreadable run configuration files; names the offending line."""

    def __init__(self, message: str, line_no: int | None = None):
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__("CONFIG", prefix + message)
        self.line_no = line_no
