"""Variational principle for domino tilings: exact torus partition
functions, local entropy and edge probabilities, a limit-shape solver,
and exact uniform sampling, cross-checked by brute-force enumeration."""

__version__ = "0.1.0"
