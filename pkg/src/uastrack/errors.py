"""Shared exception types for the tracking stack."""


class UastrackError(Exception):
    """Base class for errors raised by this package."""


class PgmError(UastrackError, ValueError):
    """Malformed or unsupported PGM stream."""


class BoundsError(UastrackError, ValueError):
    """A rectangle or template placement falls outside its image."""


class ConfigError(UastrackError, ValueError):
    """Invalid configuration value or combination."""


class ProtocolError(UastrackError, ValueError):
    """Malformed datagram or protocol line."""


class ScenarioError(UastrackError, ValueError):
    """Scenario definition cannot produce valid frames."""
