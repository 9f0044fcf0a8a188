"""Chebyshev approximations of ``z^{-1/2}`` on a positive interval."""

import numpy as np
import scipy.fft

from ..errors import InvalidInterval
from .base import PrecondPoly

__all__ = ["ChebyshevPoly", "chebyshev_invsqrt", "clenshaw_apply"]


class ChebyshevPoly(PrecondPoly):
    """``q(z) = sum_i c_i T_i((2z - a - b) / (b - a))`` on ``[a, b]``.

    Attributes
    ----------
    interval : tuple of float
    coeffs : ndarray
        Real coefficients ``c_0 .. c_k``.
    """

    kind = "chebyshev"

    def __init__(self, interval, coeffs):
        a, b = (float(t) for t in interval)
        if not (0.0 < a < b):
            raise InvalidInterval(f"need 0 < a < b, got [{a}, {b}]")
        self.interval = (a, b)
        self.coeffs = np.asarray(coeffs, dtype=float).copy()
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("coeffs must be a nonempty vector")

    @property
    def degree(self):
        return self.coeffs.size - 1

    @property
    def is_real(self):
        return True

    def _recur(self, mul, v):
        # Clenshaw: b_j = c_j v + 2 X b_{j+1} - b_{j+2}, X the mapped argument
        a, b = self.interval
        alpha, shift = 2.0 / (b - a), (a + b) / (b - a)
        c = self.coeffs
        k = c.size - 1
        if k == 0:
            return c[0] * v
        X = lambda x: alpha * mul(x) - shift * x
        b2 = np.zeros_like(v)
        b1 = c[k] * v
        for j in range(k - 1, 0, -1):
            b1, b2 = c[j] * v + 2.0 * X(b1) - b2, b1
        return c[0] * v + X(b1) - b2

    def __repr__(self):
        return f"ChebyshevPoly(interval={self.interval}, degree={self.degree})"


def chebyshev_invsqrt(a, b, degree, rule="interpolant", nodes=None):
    """Chebyshev approximation of ``z^{-1/2}`` on ``[a, b]``.

    The coefficient integrals are evaluated with Chebyshev-Gauss quadrature
    on ``M`` nodes. ``rule="interpolant"`` (default) uses ``M = degree + 1``,
    which yields the polynomial interpolating ``z^{-1/2}`` at the Chebyshev
    points. ``rule="series"`` uses ``M = max(4 (degree + 1), 128)``, which
    resolves the truncated Chebyshev series to rounding level. ``nodes``
    overrides ``M`` directly.

    Raises
    ------
    InvalidInterval
        If ``a <= 0`` or ``b <= a``.
    """
    a, b = float(a), float(b)
    if not (0.0 < a < b):
        raise InvalidInterval(f"need 0 < a < b, got [{a}, {b}]")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if nodes is None:
        if rule == "interpolant":
            nodes = degree + 1
        elif rule == "series":
            nodes = max(4 * (degree + 1), 128)
        else:
            raise ValueError(f"unknown rule {rule!r}")
    M = int(nodes)
    if M < degree + 1:
        raise ValueError("need at least degree + 1 quadrature nodes")
    t = np.cos(np.pi * (np.arange(M) + 0.5) / M)
    z = 0.5 * (b - a) * t + 0.5 * (a + b)
    c = scipy.fft.dct(z ** -0.5, type=2) / M
    c[0] *= 0.5
    return ChebyshevPoly((a, b), c[:degree + 1])


def clenshaw_apply(q, A, v):
    """Return ``q(A) v`` by the Clenshaw recurrence (``degree`` mvms)."""
    return q.apply(A, v)
