"""Behavioral similarity analysis of WLAN session traces and mobility models."""

__version__ = "0.1.0"
