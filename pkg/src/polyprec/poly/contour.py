"""Least-squares approximation of ``z^{-1/2}`` on a contour around the Ritz values.

The contour is the convex hull of the Ritz values with the part inside the
disk ``|z| < min_abs`` pushed radially onto the circle ``|z| = min_abs``. It is
sampled at uniform arclength and the discrete inner product weights all nodes
equally. An Arnoldi process on ``diag(z_1, ..., z_N)`` started from the
all-ones vector yields the orthonormal basis polynomials; only its Hessenberg
matrix is kept, which is enough to rebuild the basis at a matrix argument.
"""

import numpy as np
import scipy.sparse as sp
from scipy.spatial import ConvexHull, QhullError

from ..errors import DegenerateContour, NodeOnBranchCut, RecurrenceBreakdown
from ..krylov import arnoldi
from ..operators import MatrixOperator
from .base import PrecondPoly

__all__ = ["ContourLSPoly", "contour_nodes", "contour_ls_poly", "contour_ls_apply"]

RECURRENCE_TOL = 1e-14


def _hull_vertices(z):
    """Counter-clockwise hull vertices; a segment for collinear input."""
    z = np.unique(np.round(np.asarray(z, dtype=complex), 15))
    if z.size < 2:
        raise DegenerateContour("need at least two distinct values to build a contour")
    pts = np.column_stack([z.real, z.imag])
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if z.size >= 3 and sv[1] > 1e-10 * sv[0]:
        try:
            hull = ConvexHull(pts)
        except QhullError as exc:
            raise DegenerateContour(str(exc)) from exc
        return z[hull.vertices]
    # collinear: the contour is the segment, traversed out and back
    t = centered @ np.linalg.svd(centered)[2][0]
    lo, hi = z[np.argmin(t)], z[np.argmax(t)]
    return np.array([lo, hi])


def contour_nodes(values, min_abs=0.1, step=0.005, min_count=None):
    """Discretize the clamped hull boundary of ``values`` at arclength ``step``.

    If fewer than ``min_count`` nodes would result, the step is refined to
    reach exactly that many.

    Returns
    -------
    nodes : ndarray of complex
    step : float
        The step actually used.
    """
    verts = _hull_vertices(values)
    closed = np.append(verts, verts[0])
    # fine polyline, clamped radially into |z| >= min_abs
    seg = np.abs(np.diff(closed))
    fine = max(step, 1e-300) / 8
    pieces = []
    for p, q, ln in zip(closed[:-1], closed[1:], seg):
        k = max(2, int(np.ceil(ln / fine)) + 1)
        pieces.append(p + (q - p) * np.linspace(0.0, 1.0, k)[:-1])
    poly = np.concatenate(pieces + [closed[-1:]])
    r = np.abs(poly)
    if min_abs > 0:
        if np.any(r == 0):
            raise NodeOnBranchCut("contour passes through the origin")
        inside = r < min_abs
        poly[inside] *= min_abs / r[inside]
    _check_crossing(poly)

    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(poly)))])
    L = s[-1]
    if L == 0:
        raise DegenerateContour("contour has zero length")
    if min_count is not None and L / step < min_count:
        step = L / min_count
    t = np.arange(0.0, L - 0.5 * step, step) if L > step else np.array([0.0])
    nodes = np.interp(t, s, poly.real) + 1j * np.interp(t, s, poly.imag)
    if min_abs > 0:
        r = np.abs(nodes)
        inside = r < min_abs
        nodes[inside] *= min_abs / r[inside]
    return nodes, step


def _check_crossing(poly):
    # a contour touching (-inf, 0] would put the branch point inside
    re, im = poly.real, poly.imag
    tol = 1e-13 * max(1.0, float(np.max(np.abs(poly))))
    if np.any((np.abs(im) <= tol) & (re <= tol)):
        raise NodeOnBranchCut("contour touches the branch cut (-inf, 0]")
    flip = np.nonzero(np.sign(im[:-1]) * np.sign(im[1:]) < 0)[0]
    for i in flip:
        x = re[i] - im[i] * (re[i + 1] - re[i]) / (im[i + 1] - im[i])
        if x <= 0:
            raise NodeOnBranchCut(f"contour crosses the branch cut at {x:.3e}")


def _symmetrize(nodes):
    """Keep the upper half and mirror it, so the node set is conjugate-closed."""
    upper = nodes[nodes.imag > 0]
    real = nodes[nodes.imag == 0]
    return np.concatenate([real.real.astype(complex), upper, upper.conj()])


class ContourLSPoly(PrecondPoly):
    """Discrete least-squares polynomial in an orthonormal Arnoldi basis.

    Attributes
    ----------
    nodes : ndarray
        Contour nodes ``z_1 .. z_N``.
    H_small : ndarray
        ``(d+1) x d`` Hessenberg matrix of the node-space Arnoldi process.
    alpha : ndarray
        Least-squares coefficients in the orthonormal basis.
    """

    kind = "contour_ls"

    def __init__(self, nodes, H_small, alpha, real=None):
        self.nodes = np.asarray(nodes, dtype=complex)
        self.H_small = np.asarray(H_small, dtype=complex)
        self.alpha = np.asarray(alpha, dtype=complex)
        d = self.alpha.size
        if self.H_small.shape != (d + 1, d):
            raise ValueError("H_small must be (d+1) x d for d coefficients")
        if self.nodes.size <= d:
            raise ValueError("need more nodes than basis polynomials")
        self._real = _conj_closed(self.nodes) if real is None else bool(real)

    @property
    def degree(self):
        return self.alpha.size - 1

    @property
    def N(self):
        return self.nodes.size

    @property
    def is_real(self):
        return self._real

    @property
    def _cdtype(self):
        return np.dtype(complex)

    def _recur(self, mul, v):
        H = self.H_small
        d = self.alpha.size
        w = [v / np.sqrt(self.N)]
        out = self.alpha[0] * w[0]
        for k in range(d - 1):
            h = H[k + 1, k]
            if abs(h) < RECURRENCE_TOL:
                raise RecurrenceBreakdown(f"H[{k + 1},{k}] = {abs(h):.3e}")
            u = mul(w[k])
            for i in range(k + 1):
                u = u - H[i, k] * w[i]
            w.append(u / h)
            out = out + self.alpha[k + 1] * w[k + 1]
        return out

    def basis(self):
        """Orthonormal basis ``P_d`` evaluated at the nodes (``N x d``)."""
        d = self.alpha.size
        z = self.nodes
        P = np.zeros((self.N, d), dtype=complex)
        P[:, 0] = 1.0 / np.sqrt(self.N)
        for k in range(d - 1):
            u = z * P[:, k] - P[:, :k + 1] @ self.H_small[:k + 1, k]
            P[:, k + 1] = u / self.H_small[k + 1, k]
        return P

    def __repr__(self):
        return f"ContourLSPoly(degree={self.degree}, N={self.N})"


def _conj_closed(z, tol=1e-12):
    scale = max(1.0, float(np.max(np.abs(z))))
    zs = np.sort_complex(z)
    zc = np.sort_complex(z.conj())
    return zs.shape == zc.shape and bool(np.all(np.abs(zs - zc) <= tol * scale))


def contour_ls_poly(ritz, degree, min_abs=0.1, step=0.005, symmetric=None):
    """Least-squares approximation of ``z^{-1/2}`` on the contour of ``ritz``.

    Parameters
    ----------
    ritz : RitzSet or array_like
        Values the contour must enclose.
    degree : int
        Polynomial degree ``d - 1``.
    min_abs, step : float
        Clamp radius around the origin and arclength spacing of the nodes.
    symmetric : bool, optional
        Force a conjugate-symmetric node set (real coefficients). Defaults to
        True when the input values are closed under conjugation.
    """
    vals = np.asarray(getattr(ritz, "values", ritz)).astype(complex)
    if degree < 0:
        raise ValueError("degree must be >= 0")
    d = degree + 1
    if symmetric is None:
        symmetric = _conj_closed(vals, tol=1e-10)
    nodes, _ = contour_nodes(vals, min_abs=min_abs, step=step, min_count=4 * d)
    if symmetric:
        nodes = _symmetrize(nodes)
    if nodes.size <= d:
        raise DegenerateContour(f"only {nodes.size} contour nodes for {d} basis polynomials")
    if np.any((nodes.real <= 0) & (np.abs(nodes.imag) <= 1e-13 * np.max(np.abs(nodes)))):
        raise NodeOnBranchCut("a contour node lies on (-inf, 0]")
    N = nodes.size
    op = MatrixOperator(sp.diags(nodes), hermitian=False)
    dec = arnoldi(op, np.ones(N, dtype=complex), d, reorth=True)
    if dec.m < d:
        raise DegenerateContour("node-space Arnoldi broke down; too few distinct nodes")
    H_small = np.zeros((d + 1, d), dtype=complex)
    H_small[:d, :] = dec.H
    H_small[d, d - 1] = dec.h_next
    alpha = dec.V.conj().T @ (1.0 / np.sqrt(nodes))
    return ContourLSPoly(nodes, H_small, alpha, real=bool(symmetric))


def contour_ls_apply(q, A, v):
    """Return ``q(A) v``; ``degree`` mvms and no inner products."""
    return q.apply(A, v)
