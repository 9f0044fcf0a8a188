"""Dense kernels for the small projected matrices.

Everything here works on plain ``numpy`` arrays of modest size (Hessenberg
matrices from Arnoldi, node matrices, least-squares systems). The complex Schur
form and the symmetric tridiagonal eigensolver come from LAPACK through
``scipy.linalg``; the principal square root is assembled on top of the Schur
form with the point Schur-Parlett recurrence.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (BranchCutViolation, NonConvergence, RankDeficient,
                     SingularMatrix, ZeroDiagonalPair)

__all__ = [
    "SchurForm", "hessenberg_schur", "dense_sqrtm", "dense_inv_sqrtm_times",
    "symmetric_tridiag_eigen", "lstsq", "is_hermitian", "inv_sqrt_e1",
]

BRANCH_TOL = 1e-13
PAIR_TOL = 1e-14
PIVOT_TOL = 1e-14
HERMITIAN_TOL = 1e-13


@dataclass(frozen=True)
class SchurForm:
    """Complex Schur form ``A = Q T Q^*``."""

    Q: np.ndarray
    T: np.ndarray

    @property
    def size(self):
        return self.T.shape[0]

    @property
    def eigenvalues(self):
        return np.diag(self.T).copy()


def _square(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def is_hermitian(H, tol=HERMITIAN_TOL):
    """True if ``max|H - H^*| <= tol * max(1, max|H|)``."""
    H = _square(H)
    if H.size == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(H))))
    return float(np.max(np.abs(H - H.conj().T))) <= tol * scale


def hessenberg_schur(H):
    """Complex Schur decomposition of an upper Hessenberg matrix.

    Parameters
    ----------
    H : (m, m) array_like
        Upper Hessenberg matrix (entries below the first subdiagonal zero).

    Returns
    -------
    SchurForm
        Unitary ``Q`` and upper triangular ``T`` with ``H = Q T Q^*``.

    Raises
    ------
    NonConvergence
        If the QR iteration fails to converge.
    """
    H = _square(H)
    if H.shape[0] > 2 and np.any(np.tril(H, -2)):
        raise ValueError("matrix is not upper Hessenberg")
    try:
        T, Q = sla.schur(H.astype(complex), output="complex", check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"Schur QR iteration failed: {exc}") from exc
    return SchurForm(Q=Q, T=np.triu(T))


def _schur_any(A):
    A = _square(A)
    try:
        T, Q = sla.schur(A.astype(complex), output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"Schur QR iteration failed: {exc}") from exc
    return SchurForm(Q=Q, T=np.triu(T))


def _check_branch(eigs, scale):
    tol = BRANCH_TOL * max(scale, np.finfo(float).tiny)
    bad = (np.abs(eigs.imag) <= tol) & (eigs.real <= tol)
    if np.any(bad):
        raise BranchCutViolation(
            f"eigenvalue {eigs[bad][0]} on the closed negative real axis; "
            "principal square root undefined")


def _sqrt_upper_triangular(T):
    """Point Schur-Parlett recurrence for the principal root of triangular ``T``.

    Column ``j`` of ``R`` solves ``(R[:j,:j] + r_jj I) R[:j,j] = T[:j,j]``,
    which is the usual recurrence ordered by columns.
    """
    n = T.shape[0]
    R = np.zeros_like(T, dtype=complex)
    d = np.sqrt(np.diag(T).astype(complex))
    R[np.diag_indices(n)] = d
    scale = max(float(np.max(np.abs(d))), np.finfo(float).tiny) if n else 1.0
    for j in range(1, n):
        sums = d[:j] + d[j]
        if np.min(np.abs(sums)) < PAIR_TOL * scale:
            raise ZeroDiagonalPair(
                "sum of square-rooted eigenvalues vanishes; "
                "the matrix is (nearly) defective at a zero/negative pair")
        M = R[:j, :j].copy()
        M[np.diag_indices(j)] += d[j]
        R[:j, j] = sla.solve_triangular(M, T[:j, j], lower=False)
    return R


def _sqrt_schur(A):
    S = _schur_any(A)
    _check_branch(S.eigenvalues, np.linalg.norm(A, "fro"))
    return S.Q, _sqrt_upper_triangular(S.T)


def _maybe_real(A, X):
    if np.isrealobj(A) and np.iscomplexobj(X):
        scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
        if np.max(np.abs(X.imag), initial=0.0) <= 1e3 * np.finfo(float).eps * scale:
            return X.real.copy()
    return X


def dense_sqrtm(A):
    """Principal square root of a dense matrix.

    Raises
    ------
    BranchCutViolation
        If an eigenvalue lies on ``(-inf, 0]``.
    ZeroDiagonalPair
        If the Parlett recurrence divides by a vanishing pair sum.
    """
    A = _square(A)
    Q, R = _sqrt_schur(A)
    return _maybe_real(A, Q @ R @ Q.conj().T)


def dense_inv_sqrtm_times(A, v):
    """Return ``A^{-1/2} v`` via the Schur square root and a triangular solve."""
    A = _square(A)
    v = np.asarray(v)
    if v.shape[0] != A.shape[0]:
        raise ValueError("dimension mismatch between matrix and vector")
    Q, R = _sqrt_schur(A)
    piv = np.min(np.abs(np.diag(R))) if R.size else 1.0
    if piv < PIVOT_TOL * np.linalg.norm(A, "fro"):
        raise SingularMatrix(f"square-root pivot {piv:.3e} is numerically zero")
    y = Q @ sla.solve_triangular(R, Q.conj().T @ v, lower=False)
    if np.isrealobj(A) and np.isrealobj(v):
        return _maybe_real(A, y)
    return y


def symmetric_tridiag_eigen(diag, offdiag):
    """Eigen-decomposition of a real symmetric tridiagonal matrix.

    Returns ascending eigenvalues and the matrix of eigenvectors (columns).
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    if offdiag.shape[0] != max(diag.shape[0] - 1, 0):
        raise ValueError("offdiag must have length len(diag) - 1")
    if diag.shape[0] == 1:
        return diag.copy(), np.ones((1, 1))
    try:
        w, V = sla.eigh_tridiagonal(diag, offdiag)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"tridiagonal eigensolver failed: {exc}") from exc
    return w, V


def lstsq(B, rhs):
    """Least-squares solution of ``min ||rhs - B x||`` via a thin QR factorization."""
    B = np.asarray(B)
    rhs = np.asarray(rhs)
    if B.ndim != 2 or B.shape[0] < B.shape[1]:
        raise ValueError("B must have at least as many rows as columns")
    Q, R = np.linalg.qr(B, mode="reduced")
    piv = np.abs(np.diag(R))
    if B.shape[1] and np.min(piv) < 1e-13 * np.linalg.norm(B, "fro"):
        raise RankDeficient(f"triangular pivot {np.min(piv):.3e} too small")
    return sla.solve_triangular(R, Q.conj().T @ rhs, lower=False)


def inv_sqrt_e1(H, beta=1.0, null_tol=None):
    """Coefficient vector ``H^{-1/2} e_1 beta`` for an Arnoldi/Lanczos matrix.

    Hermitian ``H`` goes through the tridiagonal (or dense symmetric)
    eigensolver; everything else through the Schur square root.

    With ``null_tol`` set, eigenvalues with ``|theta| <= null_tol * ||H||``
    are treated as exact zeros whose eigencomponents vanish: the result is
    computed on the complementary invariant subspace only. This is the
    projected form of implicit desingularization, for Krylov spaces started
    in the range of a singular matrix.
    """
    H = _square(H)
    m = H.shape[0]
    e1 = np.zeros(m, dtype=H.dtype)
    e1[0] = 1.0
    scale = max(float(np.max(np.abs(H))), np.finfo(float).tiny) if m else 1.0
    thr = None if null_tol is None else null_tol * scale
    if is_hermitian(H):
        Hs = 0.5 * (H + H.conj().T)
        if np.isrealobj(Hs) and not np.any(np.triu(Hs, 2)):
            w, U = symmetric_tridiag_eigen(np.diag(Hs), np.diag(Hs, -1))
        else:
            w, U = np.linalg.eigh(Hs)
        keep = np.ones(w.shape, dtype=bool) if thr is None else np.abs(w) > thr
        if np.any(w[keep] <= BRANCH_TOL * max(1.0, float(np.max(np.abs(w))))):
            raise BranchCutViolation(
                f"projected matrix has eigenvalue {w[keep].min():.3e} <= 0")
        return beta * (U[:, keep] @ (w[keep] ** -0.5 * U[0, keep].conj()))
    if thr is None:
        return beta * dense_inv_sqrtm_times(H, e1)
    return beta * _deflated_inv_sqrt_e1(H, thr)


def _deflated_inv_sqrt_e1(H, thr):
    # order the Schur form so the numerically zero eigenvalues come last,
    # decouple the blocks with a Sylvester solve and drop the null block
    try:
        T, Z, s = sla.schur(H.astype(complex), output="complex", sort=lambda x: abs(x) > thr)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"Schur QR iteration failed: {exc}") from exc
    y = Z.conj().T[:, 0]
    m = T.shape[0]
    T11 = T[:s, :s]
    _check_branch(np.diag(T11), np.linalg.norm(H, "fro"))
    y1 = y[:s]
    if s < m:
        X = sla.solve_sylvester(T11, -T[s:, s:], -T[:s, s:])
        y1 = y1 - X @ y[s:]
    R = _sqrt_upper_triangular(np.triu(T11))
    x1 = sla.solve_triangular(R, y1, lower=False)
    x = Z[:, :s] @ x1
    if np.isrealobj(H):
        return _maybe_real(H, x)
    return x
