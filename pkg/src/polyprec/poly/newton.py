"""Interpolation of ``z^{-1/2}`` at (harmonic) Ritz values in Newton form."""

import numpy as np

from ..errors import BranchCutNode, NearCoincidentNodes
from .base import PrecondPoly

__all__ = ["NewtonPoly", "leja_order", "divided_differences", "ritz_interp_poly",
           "newton_apply"]

BRANCH_TOL = 1e-13
COINCIDE_TOL = 1e-12


def _conj_closed(z, tol=1e-10):
    z = np.asarray(z)
    if not np.iscomplexobj(z):
        return True
    scale = max(1.0, float(np.max(np.abs(z)))) if z.size else 1.0
    zc = np.conj(z)
    return all(np.min(np.abs(z - w)) <= tol * scale for w in zc)


def leja_order(nodes):
    """Lejà ordering of ``nodes``.

    Start at the node of largest modulus, then repeatedly take the node that
    maximizes the sum of log-distances to the nodes already chosen. Nodes are
    pre-sorted by ``(Re, Im)`` so ties go to the lower index.
    """
    z = np.asarray(nodes)
    z = z[np.lexsort((z.imag, z.real))] if np.iscomplexobj(z) else np.sort(z)
    n = z.size
    if n == 0:
        return z
    order = [int(np.argmax(np.abs(z)))]
    score = np.zeros(n)
    taken = np.zeros(n, dtype=bool)
    taken[order[0]] = True
    for _ in range(n - 1):
        with np.errstate(divide="ignore"):
            score += np.log(np.abs(z - z[order[-1]]))
        cand = np.where(taken, -np.inf, score)
        j = int(np.argmax(cand))
        order.append(j)
        taken[j] = True
    return z[order]


def divided_differences(nodes, values):
    """Newton divided differences ``f[z_0], f[z_0,z_1], ...``."""
    z = np.asarray(nodes)
    dd = np.array(values, dtype=np.result_type(z.dtype, np.asarray(values).dtype, float))
    for j in range(1, z.size):
        dd[j:] = (dd[j:] - dd[j - 1:-1]) / (z[j:] - z[:-j])
    return dd


class NewtonPoly(PrecondPoly):
    """``q(z) = sum_j dd_j prod_{i<j} (z - node_i)``.

    Evaluation is the nested scheme ``w <- dd_k v``;
    ``w <- (A - node_j I) w + dd_j v`` for ``j = k-1, ..., 0``.
    """

    kind = "ritz_newton"

    def __init__(self, nodes, divided_diffs):
        self.nodes = np.atleast_1d(np.asarray(nodes))
        self.divided_diffs = np.atleast_1d(np.asarray(divided_diffs))
        if self.nodes.shape != self.divided_diffs.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and divided_diffs must be vectors of equal length")
        if self.nodes.size == 0:
            raise ValueError("need at least one node")
        self._real = self._has_real_coefficients()

    @classmethod
    def from_nodes(cls, nodes, order=True):
        """Interpolant of ``z^{-1/2}`` (principal branch) at ``nodes``."""
        z = np.asarray(nodes)
        z = leja_order(z) if order else z
        zc = z.astype(complex)
        vals = 1.0 / np.sqrt(zc)
        if not np.iscomplexobj(z) and np.all(z > 0):
            vals, zc = vals.real, z.astype(float)
        return cls(zc, divided_differences(zc, vals))

    def _has_real_coefficients(self):
        if not np.iscomplexobj(self.nodes) or np.all(self.nodes.imag == 0):
            return not np.iscomplexobj(self.divided_diffs) or np.all(self.divided_diffs.imag == 0)
        if not _conj_closed(self.nodes):
            return False
        # q(conj z) == conj q(z) at deg+1 points pins down real coefficients
        z = self.nodes.astype(complex)
        qz = self._recur(lambda x: z * x, np.ones_like(z))
        qc = self._recur(lambda x: z.conj() * x, np.ones_like(z))
        return bool(np.all(np.abs(qc - qz.conj()) <= 1e-8 * np.maximum(np.abs(qz), 1e-300)))

    @property
    def degree(self):
        return self.nodes.size - 1

    @property
    def is_real(self):
        return self._real

    @property
    def _cdtype(self):
        return np.result_type(self.nodes.dtype, self.divided_diffs.dtype, float)

    def _recur(self, mul, v):
        dd, z = self.divided_diffs, self.nodes
        w = dd[-1] * v
        for j in range(z.size - 2, -1, -1):
            w = mul(w) - z[j] * w + dd[j] * v
        return w

    def __repr__(self):
        return f"NewtonPoly(degree={self.degree}, real={self.is_real})"


def ritz_interp_poly(ritz):
    """Newton-form interpolant of ``z^{-1/2}`` at a set of Ritz values.

    Parameters
    ----------
    ritz : RitzSet or array_like

    Raises
    ------
    BranchCutNode
        If a node lies on ``(-inf, 0]``.
    NearCoincidentNodes
        If two nodes are closer than ``1e-12 max|node|``.
    """
    z = np.asarray(getattr(ritz, "values", ritz))
    if z.size == 0:
        raise ValueError("empty node set")
    scale = float(np.max(np.abs(z)))
    tol = BRANCH_TOL * max(scale, np.finfo(float).tiny)
    zc = z.astype(complex)
    on_cut = (np.abs(zc.imag) <= tol) & (zc.real <= tol)
    if np.any(on_cut):
        raise BranchCutNode(f"node {zc[on_cut][0]} lies on the branch cut (-inf, 0]")
    if z.size > 1:
        diff = np.abs(zc[:, None] - zc[None, :])
        diff[np.diag_indices(z.size)] = np.inf
        if diff.min() < COINCIDE_TOL * scale:
            raise NearCoincidentNodes(
                f"nodes {diff.min():.3e} apart; reduce the polynomial degree")
    if np.iscomplexobj(z) and np.all(z.imag == 0):
        z = z.real
    return NewtonPoly.from_nodes(z)


def newton_apply(q, A, v):
    """Return ``q(A) v`` by the nested Newton scheme (``degree`` mvms)."""
    return q.apply(A, v)
