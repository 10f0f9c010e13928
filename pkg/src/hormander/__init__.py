"""Numerical toolkit for Hörmander-type conditions of vector-valued kernels.

Orlicz maximal functions, the dyadic square operator and its commutators,
their fractional variants, and empirical checks of Coifman-type estimates on
sampled one-dimensional data.
"""

__version__ = "0.1.0"
