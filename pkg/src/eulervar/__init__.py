"""Euler VaR contributions by Monte Carlo with Malliavin-weight ratio estimators."""

__version__ = "0.1.0"
