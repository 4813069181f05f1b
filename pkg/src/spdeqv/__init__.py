"""Moment-based parameter estimation for the linear stochastic heat equation."""
__version__ = "0.1.0"
