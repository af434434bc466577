"""Projective metrizability of sprays: invariants, compatibility conditions and Spencer checks."""

__version__ = "0.1.0"
