"""Distributionally robust contextual optimization with intersected Wasserstein balls."""

__version__ = "0.1.0"
