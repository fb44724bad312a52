"""Exact and numeric checks for theta cocycles in the Fock model and their fiber asymptotics."""

from .fock import DualPairCase

__all__ = ["DualPairCase"]
__version__ = "0.1.0"
