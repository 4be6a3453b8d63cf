"""Capacity and coding experiments for the half-duplex relay channel."""
__version__ = "0.1.0"
