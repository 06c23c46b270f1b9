"""Exact-rational machinery for LP relaxations of boolean max-CSPs.

Everything proof-relevant is computed in arbitrary-precision rational
arithmetic; the only floating-point quantities are entropy readings and
the asymptotic error estimate of the restriction experiment.
"""

__version__ = "0.1.0"
