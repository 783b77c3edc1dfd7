"""Cooperative multi-satellite OFDM downlink simulation."""

__version__ = "0.1.0"
