"""Polynomially preconditioned Krylov methods for A^{-1/2}b, A^{1/2}b and sign(A)b."""

__version__ = "0.1.0"
