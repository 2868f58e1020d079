"""Auxiliary-factor ISI cancellation for paired Nyquist FIR filters."""

__version__ = "0.1.0"
