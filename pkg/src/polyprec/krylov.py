"""Arnoldi and Lanczos processes, Ritz extraction and two-pass Lanczos.

Both processes are incremental: the drivers call :meth:`step` until they want
to stop and read the projected matrix at checkpoints. Orthogonalization is
modified Gram-Schmidt, optionally with one full second sweep.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SingularH, ZeroStartVector
from .linalg import is_hermitian
from .operators import as_operator

__all__ = [
    "ArnoldiDecomposition", "LanczosDecomposition", "ArnoldiProcess",
    "LanczosProcess", "RitzSet", "arnoldi", "lanczos",
    "two_pass_lanczos_combine", "ritz_values",
]

BREAKDOWN_TOL = 1e-14


@dataclass
class ArnoldiDecomposition:
    """``Op V = V H + h_next v_next e_m^*`` with orthonormal ``V``."""

    V: np.ndarray
    H: np.ndarray
    h_next: float
    v_next: np.ndarray | None
    beta: float

    @property
    def m(self):
        return self.H.shape[0]

    @property
    def breakdown(self):
        return self.v_next is None


@dataclass
class LanczosDecomposition:
    alpha: np.ndarray
    beta_off: np.ndarray
    h_next: float
    beta: float
    V: np.ndarray | None = None
    v_next: np.ndarray | None = None

    @property
    def m(self):
        return self.alpha.shape[0]

    @property
    def H(self):
        return (np.diag(self.alpha) + np.diag(self.beta_off, 1)
                + np.diag(self.beta_off, -1))


def _start(op, start):
    start = np.asarray(start)
    if start.shape != (op.dim,):
        raise ValueError(f"start vector must have shape ({op.dim},)")
    beta = float(np.linalg.norm(start))
    if beta == 0.0 or not np.isfinite(beta):
        raise ZeroStartVector("start vector is zero")
    dtype = np.result_type(op.dtype, start.dtype, float)
    return (start / beta).astype(dtype, copy=False), beta


class ArnoldiProcess:
    """Incremental Arnoldi process on an instrumented operator.

    Breakdown is declared when ``h_{j+1,j} <= 1e-14 * ||Op v_j||`` or when the
    Krylov dimension reaches ``n``.
    """

    def __init__(self, op, start, reorth=False, max_dim=None):
        self.op = as_operator(op)
        v, self.beta = _start(self.op, start)
        self.reorth = bool(reorth)
        self.n = self.op.dim
        self._cap = self.n if max_dim is None else max(1, min(self.n, int(max_dim)))
        self._basis = [v]
        self._H = np.zeros((33, 32), dtype=v.dtype)
        self.m = 0
        self.breakdown = False

    def _ensure(self, j):
        r, c = self._H.shape
        if j + 1 < c:
            return
        H = np.zeros((2 * c + 1, 2 * c), dtype=self._H.dtype)
        H[:r, :c] = self._H
        self._H = H

    def step(self):
        """Perform one step; return False once the process has broken down."""
        if self.breakdown:
            return False
        j = self.m
        self._ensure(j)
        w = self.op.apply(self._basis[j])
        dtype = np.result_type(w.dtype, self._H.dtype)
        if dtype != self._H.dtype:
            self._H = self._H.astype(dtype)
        w = w.astype(dtype, copy=True)
        wnorm0 = np.linalg.norm(w)
        sweeps = 2 if self.reorth else 1
        for _ in range(sweeps):
            for i in range(j + 1):
                vi = self._basis[i]
                h = self.op.dot(w, vi)
                self._H[i, j] += h
                w -= h * vi
        h = float(np.linalg.norm(w))
        self._H[j + 1, j] = h
        self.m = j + 1
        if h <= BREAKDOWN_TOL * wnorm0 or h == 0.0 or self.m >= self._cap:
            self.breakdown = True
            self._H[j + 1, j] = 0.0
            return False
        self._basis.append(w / h)
        return True

    @property
    def V(self):
        return np.column_stack(self._basis[:self.m])

    def basis_vector(self, i):
        return self._basis[i]

    @property
    def H(self):
        return self._H[:self.m, :self.m]

    @property
    def h_next(self):
        return 0.0 if self.breakdown else float(self._H[self.m, self.m - 1].real)

    @property
    def v_next(self):
        return None if self.breakdown else self._basis[self.m]

    def decomposition(self):
        return ArnoldiDecomposition(V=self.V.copy(), H=self.H.copy(), h_next=self.h_next,
                                    v_next=None if self.breakdown else self.v_next.copy(),
                                    beta=self.beta)


class LanczosProcess:
    """Three-term recurrence for Hermitian operators (caller-asserted).

    Two inner products per step. The basis is kept only if ``store_basis``.
    """

    def __init__(self, op, start, store_basis=True, max_dim=None):
        self.op = as_operator(op)
        v, self.beta = _start(self.op, start)
        self.store_basis = store_basis
        self.n = self.op.dim
        self._cap = self.n if max_dim is None else min(self.n, int(max_dim))
        self._v = v
        self._v_prev = np.zeros_like(v)
        self._basis = [v] if store_basis else None
        self.alpha = []
        self.beta_off = []
        self._b_last = 0.0
        self.m = 0
        self.breakdown = False

    def step(self):
        if self.breakdown:
            return False
        w = self.op.apply(self._v)
        wnorm0 = np.linalg.norm(w)
        if self.m:
            w = w - self._b_last * self._v_prev
        a = self.op.dot(w, self._v).real
        w = w - a * self._v
        b = float(np.sqrt(self.op.dot(w, w).real))
        self.alpha.append(float(a))
        self.m += 1
        if b <= BREAKDOWN_TOL * wnorm0 or b == 0.0 or self.m >= self._cap:
            self.breakdown = True
            self._b_last = 0.0
            return False
        self.beta_off.append(b)
        self._b_last = b
        self._v_prev, self._v = self._v, w / b
        if self.store_basis:
            self._basis.append(self._v)
        return True

    @property
    def H(self):
        m = self.m
        a = np.asarray(self.alpha[:m])
        b = np.asarray(self.beta_off[:m - 1])
        return np.diag(a) + np.diag(b, 1) + np.diag(b, -1)

    @property
    def h_next(self):
        return 0.0 if self.breakdown else self._b_last

    @property
    def V(self):
        if not self.store_basis:
            raise RuntimeError("basis was not stored")
        return np.column_stack(self._basis[:self.m])

    def decomposition(self):
        m = self.m
        return LanczosDecomposition(
            alpha=np.asarray(self.alpha[:m]), beta_off=np.asarray(self.beta_off[:m - 1]),
            h_next=self.h_next, beta=self.beta,
            V=self.V if self.store_basis else None,
            v_next=None if (self.breakdown or not self.store_basis) else self._basis[m])


def arnoldi(op, start, m, reorth=False):
    """Run ``m`` Arnoldi steps (fewer on lucky breakdown)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    proc = ArnoldiProcess(op, start, reorth=reorth)
    while proc.m < m and proc.step():
        pass
    return proc.decomposition()


def lanczos(op, start, m, store_basis=True):
    """Run ``m`` Lanczos steps (fewer on lucky breakdown)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    proc = LanczosProcess(op, start, store_basis=store_basis)
    while proc.m < m and proc.step():
        pass
    return proc.decomposition()


def two_pass_lanczos_combine(op, start, m, coeffs):
    """Second Lanczos pass: regenerate ``v_1..v_m`` and return ``sum c_j v_j``.

    The recurrence of the first pass is replayed step for step, so the
    regenerated vectors are identical and the mvm count equals the first
    pass's.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] != m:
        raise ValueError("coeffs must have length m")
    proc = LanczosProcess(op, start, store_basis=False)
    dtype = np.result_type(proc._v.dtype, coeffs.dtype)
    acc = np.zeros(op.dim, dtype=dtype)
    for j in range(m):
        acc += coeffs[j] * proc._v
        if not proc.step() and j < m - 1:
            raise RuntimeError("second pass broke down before the first pass did")
    return acc


@dataclass(frozen=True)
class RitzSet:
    values: np.ndarray
    kind: str
    source_dim: int


def ritz_values(dec, kind="standard"):
    """Ritz or harmonic Ritz values of an Arnoldi/Lanczos decomposition.

    Harmonic Ritz values are eigenvalues of ``H + h^2 H^{-*} e_d e_d^*``.
    """
    if kind not in ("standard", "harmonic"):
        raise ValueError("kind must be 'standard' or 'harmonic'")
    H = np.asarray(dec.H)
    d = H.shape[0]
    if kind == "harmonic":
        h = dec.h_next
        if h != 0.0:
            ed = np.zeros(d, dtype=H.dtype)
            ed[-1] = 1.0
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", sla.LinAlgWarning)
                    lu = sla.lu_factor(H.conj().T, check_finite=True)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise SingularH(str(exc)) from exc
            if np.min(np.abs(np.diag(lu[0]))) <= 1e-14 * np.abs(H).max():
                raise SingularH("H_d is singular; harmonic Ritz values undefined")
            x = sla.lu_solve(lu, ed)
            H = H.astype(np.result_type(H.dtype, x.dtype), copy=True)
            H[:, -1] += h * h * x
        elif np.linalg.matrix_rank(H) < d:
            raise SingularH("H_d is singular; harmonic Ritz values undefined")
    if is_hermitian(H):
        vals = np.linalg.eigvalsh(0.5 * (H + H.conj().T)).astype(float)
    else:
        vals = sla.eigvals(H)
        if np.isrealobj(H):
            # conjugate pairs come out exactly paired; real ones exactly real
            vals = np.where(np.abs(vals.imag) == 0, vals.real, vals)
    return RitzSet(values=np.asarray(vals), kind=kind, source_dim=d)
