"""Numerical laboratory for the moment machinery of the critical 2d
stochastic heat flow: renewal-density quadrature, collision-pattern
combinatorics, Gaussian free fields on Feynman graphs via the matrix-tree
theorem, truncated moment Monte Carlo, inequality verification, tail-bound
envelopes, and a discrete directed-polymer simulator."""

__version__ = "0.1.0"
