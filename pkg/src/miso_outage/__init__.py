"""Outage analysis for MISO fading channels with delayed feedback."""

__version__ = "0.1.0"
