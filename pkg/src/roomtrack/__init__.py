"""Room-level indoor localization: RSSI fingerprinting and floor-plan multilateration."""

__version__ = "0.1.0"
