"""Sparse matrices, instrumented linear operators and model problems.

Sparse matrices are ``scipy.sparse.csr_matrix`` objects with sorted column
indices. All operator applications go through :class:`LinearOperator`
subclasses, which tally matrix-vector products (mvms) and inner products on a
:class:`Counters` object shared by an operator and everything built on top of
it. One counter-bearing operator must not be shared between threads.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, SpectrumLeak

__all__ = [
    "Counters", "LinearOperator", "MatrixOperator", "SquaredOperator",
    "ShiftedOperator", "PreconditionedOperator", "as_operator", "as_csr",
    "make_laplace", "laplace_spectral_interval", "make_graph_laplacian",
    "make_random_digraph", "make_cycle_digraph", "make_synthetic_nonhermitian", "ModelProblemSpec",
    "build_model_problem", "random_unit_vector",
]


@dataclass
class Counters:
    """Monotone tallies of the expensive operations."""

    mvm_count: int = 0
    inner_product_count: int = 0

    def snapshot(self):
        return self.mvm_count, self.inner_product_count


class LinearOperator:
    """Apply-to-vector capability with cost accounting.

    ``mvm_count`` counts products with the underlying sparse matrix, so a
    squared operator adds 2 per application and a preconditioned one adds
    ``cost * (2*deg(q) + 1)``.
    """

    kind = "abstract"

    def __init__(self, dim, dtype, counters=None, hermitian=False):
        self.dim = int(dim)
        self.dtype = np.dtype(dtype)
        self.counters = counters if counters is not None else Counters()
        self.hermitian = bool(hermitian)

    @property
    def mvm_count(self):
        return self.counters.mvm_count

    @property
    def inner_product_count(self):
        return self.counters.inner_product_count

    @property
    def cost(self):
        """Matrix-vector products with the base matrix per application."""
        raise NotImplementedError

    def apply(self, x):
        x = np.asarray(x)
        if x.ndim != 1 or x.shape[0] != self.dim:
            raise DimensionMismatch(
                f"operator of dimension {self.dim} applied to vector of shape {x.shape}")
        return self._apply(x)

    __matmul__ = apply

    def _apply(self, x):
        raise NotImplementedError

    def dot(self, x, y):
        """Counted inner product ``<x, y> = y^* x``."""
        self.counters.inner_product_count += 1
        return np.vdot(y, x)

    def to_dense(self):
        raise NotImplementedError


class MatrixOperator(LinearOperator):
    """Plain operator ``A``: one mvm per application."""

    kind = "plain"

    def __init__(self, A, hermitian=None, counters=None):
        A = as_csr(A)
        if hermitian is None:
            hermitian = _is_hermitian_sparse(A)
        super().__init__(A.shape[0], A.dtype, counters, hermitian)
        self.A = A

    @property
    def cost(self):
        return 1

    def _apply(self, x):
        self.counters.mvm_count += 1
        return self.A @ x

    def to_dense(self):
        return self.A.toarray()


class SquaredOperator(LinearOperator):
    """``A^2`` applied as two consecutive products with ``A``."""

    kind = "squared"

    def __init__(self, base):
        base = as_operator(base)
        super().__init__(base.dim, base.dtype, base.counters, base.hermitian)
        self.base = base

    @property
    def cost(self):
        return 2 * self.base.cost

    def _apply(self, x):
        return self.base.apply(self.base.apply(x))

    def to_dense(self):
        B = self.base.to_dense()
        return B @ B


class ShiftedOperator(LinearOperator):
    """``A - sigma I``."""

    kind = "shifted"

    def __init__(self, base, sigma):
        base = as_operator(base)
        sigma = complex(sigma) if np.iscomplexobj(sigma) else float(sigma)
        dtype = np.result_type(base.dtype, np.asarray(sigma).dtype)
        herm = base.hermitian and np.isreal(sigma)
        super().__init__(base.dim, dtype, base.counters, herm)
        self.base = base
        self.sigma = sigma

    @property
    def cost(self):
        return self.base.cost

    def _apply(self, x):
        return self.base.apply(x) - self.sigma * x

    def to_dense(self):
        return self.base.to_dense() - self.sigma * np.eye(self.dim)


class PreconditionedOperator(LinearOperator):
    """``A q(A)^2`` applied in three stages, never through ``q^2``.

    ``order="left"`` computes ``u = A v, y = q(A) u, w = q(A) y``;
    ``order="right"`` computes ``y = q(A) v, u = q(A) y, w = A u`` and keeps
    ``y`` in :attr:`last_intermediate` so the caller can store it.
    """

    kind = "preconditioned"

    def __init__(self, base, q, order="left"):
        base = as_operator(base)
        if order not in ("left", "right"):
            raise ValueError("order must be 'left' or 'right'")
        dtype = np.result_type(base.dtype, q.dtype)
        herm = base.hermitian and q.dtype.kind != "c" and getattr(q, "is_real", True)
        super().__init__(base.dim, dtype, base.counters, herm)
        self.base = base
        self.q = q
        self.order = order
        self.last_intermediate = None

    @property
    def cost(self):
        return self.base.cost * (2 * self.q.degree + 1)

    def _apply(self, x):
        if self.order == "left":
            return self.q.apply(self.base, self.q.apply(self.base, self.base.apply(x)))
        y = self.q.apply(self.base, x)
        self.last_intermediate = y
        return self.base.apply(self.q.apply(self.base, y))

    def to_dense(self):
        from .poly import dense_eval
        A = self.base.to_dense()
        Q = dense_eval(self.q, A)
        return A @ Q @ Q


def as_csr(A):
    """Return ``A`` as a CSR matrix with sorted, duplicate-free indices."""
    if isinstance(A, LinearOperator):
        raise TypeError("expected a matrix, got an operator")
    if sp.issparse(A):
        A = sp.csr_matrix(A)
    else:
        A = np.asarray(A)
        if A.ndim != 2:
            raise ValueError("expected a 2-D matrix")
        A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    A.sum_duplicates()
    A.sort_indices()
    return A


def as_operator(A):
    if isinstance(A, LinearOperator):
        return A
    return MatrixOperator(A)


def _is_hermitian_sparse(A, tol=1e-13):
    D = A - A.conj().T
    if D.nnz == 0:
        return True
    scale = max(1.0, float(abs(A).max()))
    return float(abs(D).max()) <= tol * scale


def _laplace1d(N):
    e = np.ones(N)
    return sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1], format="csr")


def make_laplace(family, N):
    """Second-order finite-difference negative Laplacian with Dirichlet boundary.

    ``family`` is ``"laplace1d"``, ``"laplace2d"`` or ``"laplace3d"`` (or the
    dimension 1, 2, 3); ``N`` is the number of interior points per direction.
    """
    dim = _laplace_dim(family)
    if N < 1:
        raise ValueError("N must be >= 1")
    T = _laplace1d(N)
    I = sp.identity(N, format="csr")
    if dim == 1:
        L = T
    elif dim == 2:
        L = sp.kron(I, T) + sp.kron(T, I)
    else:
        L = sp.kron(sp.kron(I, I), T) + sp.kron(sp.kron(I, T), I) + sp.kron(sp.kron(T, I), I)
    return as_csr(L.astype(float))


def _laplace_dim(family):
    if isinstance(family, (int, np.integer)):
        dim = int(family)
    else:
        dims = {"laplace1d": 1, "laplace2d": 2, "laplace3d": 3}
        if family not in dims:
            raise ValueError(f"unknown Laplace family {family!r}")
        dim = dims[family]
    if dim not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2 or 3")
    return dim


def laplace_spectral_interval(family, N):
    """Closed-form ``(lambda_min, lambda_max)`` of :func:`make_laplace`."""
    dim = _laplace_dim(family)
    c = np.cos(np.pi / (N + 1))
    return 2.0 * dim * (1.0 - c), 2.0 * dim * (1.0 + c)


def make_graph_laplacian(adjacency):
    """In-degree Laplacian ``L = D_in - A`` (every column sums to zero).

    ``adjacency[i, j]`` is the weight of the edge ``i -> j``; the in-degree of
    node ``j`` is the ``j``-th column sum.
    """
    A = as_csr(adjacency)
    if A.nnz and A.data.min() < 0:
        raise ValueError("adjacency must have nonnegative entries")
    indeg = np.asarray(A.sum(axis=0)).ravel()
    return as_csr(sp.diags(indeg, format="csr") - A)


def make_random_digraph(n, avg_degree=4.0, seed=0, weighted=True):
    """Random directed graph (no self loops) as an adjacency matrix.

    With ``weighted`` the edge weights are uniform in ``[0.5, 1.5]``, which
    makes the Laplacian diagonalizable with probability one.
    """
    rng = np.random.default_rng(seed)
    p = min(1.0, avg_degree / max(n - 1, 1))
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    rows, cols = np.nonzero(mask)
    w = rng.uniform(0.5, 1.5, rows.size) if weighted else np.ones(rows.size)
    return as_csr(sp.csr_matrix((w, (rows, cols)), shape=(n, n)))


def make_cycle_digraph(n, cycles=3, seed=0):
    """Union of ``cycles`` random weighted directed Hamiltonian cycles.

    Each cycle gets one weight from ``[0.5, 1.5]``, so every node has equal
    in- and out-degree. The in-degree Laplacian of such a balanced digraph
    has the undirected Laplacian as its symmetric part; its field of values
    therefore lies in the closed right half-plane and 0 is a simple
    eigenvalue (the graph is strongly connected).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    rows, cols, vals = [], [], []
    for _ in range(cycles):
        perm = rng.permutation(n)
        rows.append(perm)
        cols.append(np.roll(perm, -1))
        vals.append(np.full(n, rng.uniform(0.5, 1.5)))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    # repeated edges were summed; no self loops can occur for n >= 2
    return as_csr(A)


def make_synthetic_nonhermitian(n, seed=0, skew=1.0, shift=0.5, indefinite=False,
                                verify=True):
    """Sparse non-Hermitian test matrix with controlled spectrum.

    The matrix is ``L + s S`` where ``L = tridiag(-1, 2, -1) + shift I`` is SPD
    and ``S`` is a random sparse skew-symmetric matrix scaled to spectral norm
    ``skew`` (``s = 0`` when ``skew == 0``). A skew-symmetric perturbation
    leaves the real part of the field of values unchanged, so it stays right
    of ``Re z = lambda_min(L) > 0.05 lambda_min(L)``.

    With ``indefinite=True`` the trailing half of the unknowns is negated,
    ``blockdiag(M1, -M2)`` plus a weak random coupling, which puts eigenvalues
    in both half-planes (a desk-scale analogue of a sign-function argument).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)

    def block(m):
        L = _laplace1d(m) + shift * sp.identity(m, format="csr")
        if skew == 0 or m < 2:
            return L
        R = sp.random(m, m, density=min(1.0, 3.0 / m), random_state=rng,
                      data_rvs=rng.standard_normal, format="csr")
        S = R - R.T
        nrm = np.linalg.norm(S.toarray(), 2) if m <= 500 else _power_norm(S, rng)
        if nrm == 0:
            return L
        return L + (skew / nrm) * S

    if not indefinite:
        A = as_csr(block(n))
    else:
        m1 = n // 2
        B = sp.block_diag([block(m1), -block(n - m1)], format="csr")
        C = sp.random(n, n, density=min(1.0, 1.0 / n), random_state=rng,
                      data_rvs=rng.standard_normal, format="csr")
        coupling = 0.05 * shift / max(1.0, float(abs(C).max())) if C.nnz else 0.0
        A = as_csr(B + coupling * C)

    if verify and n <= 500:
        eigs = np.linalg.eigvals(A.toarray())
        if indefinite:
            if np.min(np.abs(eigs.real)) <= 0:
                raise SpectrumLeak("eigenvalue on the imaginary axis")
        elif np.min(eigs.real) <= 0:
            raise SpectrumLeak(f"eigenvalue with real part {np.min(eigs.real):.3e} <= 0")
    return A


def _power_norm(S, rng, iters=60):
    x = rng.standard_normal(S.shape[0])
    x /= np.linalg.norm(x)
    nrm = 0.0
    for _ in range(iters):
        y = S.T @ (S @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        nrm = np.sqrt(ny)
        x = y / ny
    return nrm


@dataclass
class ModelProblemSpec:
    """Family name, size parameters and seed of a generated test matrix."""

    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    FAMILIES = ("laplace1d", "laplace2d", "laplace3d",
                "graph_in_degree_laplacian", "synthetic_nonhermitian")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")


def build_model_problem(spec):
    """Build the sparse matrix described by a :class:`ModelProblemSpec`."""
    p = dict(spec.params)
    if spec.family.startswith("laplace"):
        return make_laplace(spec.family, int(p["N"]))
    if spec.family == "graph_in_degree_laplacian":
        structure = p.get("structure", "random")
        if structure == "cycles":
            adj = make_cycle_digraph(int(p["n"]), int(p.get("cycles", 3)), seed=spec.seed)
        elif structure == "random":
            adj = make_random_digraph(int(p["n"]), float(p.get("avg_degree", 4.0)),
                                      seed=spec.seed, weighted=bool(p.get("weighted", True)))
        else:
            raise ValueError(f"unknown graph structure {structure!r}")
        return make_graph_laplacian(adj)
    return make_synthetic_nonhermitian(
        int(p["n"]), seed=spec.seed, skew=float(p.get("skew", 1.0)),
        shift=float(p.get("shift", 0.5)), indefinite=bool(p.get("indefinite", False)))


def random_unit_vector(n, seed, dtype=float):
    """I.i.d. standard normal entries, normalized to unit 2-norm."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    if np.dtype(dtype).kind == "c":
        x = x + 1j * rng.standard_normal(n)
    return x / np.linalg.norm(x)
