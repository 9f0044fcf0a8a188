"""Shared evaluation plumbing for the polynomial representations.

Every representation implements one recurrence, ``_recur(mul, v)``, where
``mul`` multiplies by the argument. The same code then serves scalar
evaluation (``mul = z * x``), operator application (``mul = op.apply``) and
dense matrix evaluation (``mul = A @ X`` on ``X = I``), so the three can never
drift apart.
"""

import numpy as np
import scipy.sparse as sp

from ..operators import as_operator


class PrecondPoly:
    """Abstract preconditioning polynomial ``q(z) ~ z^{-1/2}``."""

    kind = "abstract"

    @property
    def degree(self):
        raise NotImplementedError

    @property
    def is_real(self):
        """True if ``q`` has real coefficients (real in, real out)."""
        raise NotImplementedError

    @property
    def dtype(self):
        return np.dtype(float) if self.is_real else np.dtype(complex)

    def _recur(self, mul, v):
        raise NotImplementedError

    def __call__(self, z):
        z = np.asarray(z)
        scalar = z.ndim == 0
        z = np.atleast_1d(z).astype(np.result_type(z.dtype, float))
        out = self._recur(lambda x: z * x, np.ones_like(z, dtype=np.result_type(z, self._cdtype)))
        if self.is_real and np.isrealobj(z):
            out = out.real
        return out[0] if scalar else out

    @property
    def _cdtype(self):
        """Working dtype of the recurrence coefficients."""
        return self.dtype

    def apply(self, op, v):
        """Return ``q(A) v`` with exactly ``degree`` applications of ``op``."""
        op = as_operator(op)
        v = np.asarray(v)
        out = self._recur(op.apply, v.astype(np.result_type(v.dtype, self._cdtype), copy=False))
        if self.is_real and np.isrealobj(v) and op.dtype.kind != "c" and np.iscomplexobj(out):
            out = out.real
        return out

    def dense(self, A):
        """Dense ``q(A)`` for a small matrix ``A`` (sparse input stays sparse in products)."""
        if not sp.issparse(A):
            A = np.asarray(A)
        X = np.eye(A.shape[0], dtype=np.result_type(A.dtype, self._cdtype))
        out = self._recur(lambda Y: A @ Y, X)
        if self.is_real and np.isrealobj(A) and np.iscomplexobj(out):
            out = out.real
        return out


def dense_eval(q, A):
    """Dense matrix ``q(A)``."""
    return q.dense(A)
