"""Simulation of CSI phase fingerprinting, keyed phase obfuscation and the averaging attack."""

__version__ = "0.1.0"
