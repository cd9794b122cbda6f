"""Termination and non-termination proofs for fixed-width integer loops."""

__version__ = "0.1.0"
