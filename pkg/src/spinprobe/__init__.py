"""Spin-qubit decoherence probe of the XXZ chain."""
__version__ = "0.1.0"
