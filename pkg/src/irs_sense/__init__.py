"""Fully-passive versus semi-passive IRS sensing: metrics, optimizers and experiments."""

__version__ = "0.1.0"
