"""Exact verification of revenue monotonicity on small Bayesian auctions."""

__version__ = "0.1.0"
