"""Preconditioning polynomials ``q(z) ~ z^{-1/2}`` in three representations.

All representations share the interface of :class:`PrecondPoly`:
``q(z)`` evaluates pointwise, ``q.apply(op, v)`` returns ``q(A) v`` with
exactly ``q.degree`` operator applications, and ``dense_eval(q, A)`` returns
the dense matrix ``q(A)``.
"""

from .base import PrecondPoly, dense_eval
from .certify import BranchCertificate, certify_branch, interval_grid
from .chebyshev import ChebyshevPoly, chebyshev_invsqrt, clenshaw_apply
from .contour import ContourLSPoly, contour_ls_apply, contour_ls_poly, contour_nodes
from .newton import (NewtonPoly, divided_differences, leja_order, newton_apply,
                     ritz_interp_poly)
from .serialize import dumps, load_poly, loads, save_poly

__all__ = [
    "PrecondPoly", "dense_eval", "BranchCertificate", "certify_branch",
    "interval_grid", "ChebyshevPoly", "chebyshev_invsqrt", "clenshaw_apply",
    "ContourLSPoly", "contour_ls_apply", "contour_ls_poly", "contour_nodes",
    "NewtonPoly", "divided_differences", "leja_order", "newton_apply",
    "ritz_interp_poly", "dumps", "loads", "save_poly", "load_poly",
    "constant_poly",
]


def constant_poly(c=1.0):
    """The degree-0 polynomial ``q = c``."""
    return ChebyshevPoly((1.0, 2.0), [float(c)])
