"""Truncated-Fock-space simulator and pulse compiler for the driven quantum Rabi model."""

__version__ = "0.1.0"
