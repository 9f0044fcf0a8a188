"""Krylov drivers for ``A^{-1/2} b``, ``A^{1/2} b`` and ``sign(A) b``.

The inverse square root is the workhorse. With a preconditioning polynomial
``q ~ z^{-1/2}`` the identity ``A^{-1/2} = (A q(A)^2)^{-1/2} q(A)`` (valid
when ``Re(lambda^{1/2} q(lambda)) > 0`` at every eigenvalue) turns the
problem into one for the well-conditioned operator ``A q(A)^2``. A
polynomial that violates this at an eigenvalue the Ritz values missed gives
a converged but wrong result; the branch certificate can only check sample
points.

* left: run Arnoldi on ``A q(A)^2`` from ``c = q(A) b``;
  ``f_m = V_m H_m^{-1/2} e_1 ||c||``.
* right: run Arnoldi on ``A q(A)^2`` from ``b`` and keep ``y_j = q(A) v_j``;
  ``f_m = Y_m H_m^{-1/2} e_1 ||b||``.

Every iteration costs ``2d - 1`` products with the base operator, where
``d - 1`` is the degree of ``q``. Iteration stops when the relative change of
the iterate over ``k`` steps drops below ``tol``; see :class:`RunConfig`.
"""

import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (BranchCutNode, BranchCutRitz, BranchWarning, ConfigError,
                     EpsilonTooLarge)
from .krylov import ArnoldiProcess, LanczosProcess, ritz_values, two_pass_lanczos_combine
from .linalg import dense_inv_sqrtm_times, dense_sqrtm, inv_sqrt_e1
from .operators import (LinearOperator, MatrixOperator, PreconditionedOperator,
                        SquaredOperator, as_operator, random_unit_vector)
from .poly import (ChebyshevPoly, certify_branch,
                   chebyshev_invsqrt, contour_ls_poly, interval_grid, ritz_interp_poly)

__all__ = [
    "RunConfig", "Checkpoint", "ConvergenceReport", "ConditionEstimate",
    "build_polynomial", "estimate_interval", "invsqrt_plain", "invsqrt_left_prec",
    "invsqrt_right_prec", "invsqrt", "sqrt_action", "sign_action",
    "condition_analysis", "reference_solution", "kappa_bound",
]

METHODS = ("plain", "left_prec", "right_prec")
POLY_KINDS = ("chebyshev", "ritz_newton", "contour_ls", "none")
STAGNATION_FACTOR = 0.99
STAGNATION_COUNT = 3
STAGNATION_GATE = 100.0
# projected eigenvalues this small (relative) are null-space leakage in sqrt runs
NULL_TOL = 1e-10


@dataclass
class RunConfig:
    """Parameters of one driver run.

    ``d`` is the polynomial degree plus one; ``method == "plain"`` if and only
    if ``poly_kind == "none"`` if and only if ``d == 1``. ``check_every``
    defaults to ``max(1, 64 // d)``.
    """

    method: str = "left_prec"
    poly_kind: str = "chebyshev"
    d: int = 8
    max_iter: int = 1000
    tol: float = 1e-10
    check_every: int | None = None
    reorth: bool = False
    seed: int = 0
    krylov: str = "auto"
    two_pass: bool = False
    store_y: bool = True
    harmonic: bool = False
    random_start: bool = False
    min_abs: float = 0.1
    step: float = 0.005
    cheb_rule: str = "interpolant"
    interval: tuple | None = None

    def __post_init__(self):
        self.validate()

    @classmethod
    def plain(cls, **kw):
        kw.setdefault("method", "plain")
        kw.setdefault("poly_kind", "none")
        kw.setdefault("d", 1)
        return cls(**kw)

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.poly_kind not in POLY_KINDS:
            raise ConfigError(f"poly_kind must be one of {POLY_KINDS}, got {self.poly_kind!r}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ConfigError("d must be an integer >= 1")
        if (self.method == "plain") != (self.poly_kind == "none"):
            raise ConfigError("method 'plain' and poly_kind 'none' go together")
        if self.method == "plain" and self.d != 1:
            raise ConfigError("method 'plain' requires d = 1")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not self.tol >= 0:
            raise ConfigError("tol must be >= 0")
        if self.check_every is not None and self.check_every < 1:
            raise ConfigError("check_every must be >= 1")
        if self.krylov not in ("auto", "arnoldi", "lanczos"):
            raise ConfigError("krylov must be 'auto', 'arnoldi' or 'lanczos'")
        if self.two_pass and self.krylov == "arnoldi":
            raise ConfigError("two_pass requires the Lanczos process")
        if self.two_pass and self.method == "right_prec":
            raise ConfigError("two_pass is available for plain and left_prec only")
        if self.cheb_rule not in ("interpolant", "series"):
            raise ConfigError("cheb_rule must be 'interpolant' or 'series'")
        if self.interval is not None:
            a, b = self.interval
            if not 0 < a < b:
                raise ConfigError("interval must satisfy 0 < a < b")
            self.interval = (float(a), float(b))

    @property
    def k(self):
        return self.check_every if self.check_every is not None else max(1, 64 // self.d)


@dataclass
class Checkpoint:
    m: int
    mvms: int
    est_rel_diff: float
    true_rel_err: float | None = None


@dataclass
class ConvergenceReport:
    """Per-run history and operation counts.

    The mvm total decomposes exactly as
    ``mvms_setup + iterations * mvms_per_iteration * passes + mvms_final``,
    where ``mvms_setup = mvms_poly + mvms_start``.
    """

    method: str
    poly_kind: str
    d: int
    tol: float
    check_every: int
    krylov: str
    orthogonalization: str
    seed: int
    checkpoints: list = field(default_factory=list)
    iterations: int = 0
    mvms: int = 0
    inner_products: int = 0
    termination: str = "max_iter"
    branch_certificate: object = None
    wall_time: float = 0.0
    mvms_poly: int = 0
    mvms_start: int = 0
    mvms_per_iteration: int = 1
    passes: int = 1
    mvms_final: int = 0
    inner_products_setup: int = 0
    function: str = "invsqrt"

    @property
    def mvms_setup(self):
        return self.mvms_poly + self.mvms_start

    @property
    def mvms_iteration(self):
        return self.iterations * self.mvms_per_iteration * self.passes

    @property
    def converged(self):
        return self.termination in ("converged", "breakdown")

    @property
    def final_est(self):
        return self.checkpoints[-1].est_rel_diff if self.checkpoints else float("nan")

    @property
    def final_true_err(self):
        return self.checkpoints[-1].true_rel_err if self.checkpoints else None

    def reconcile(self):
        """True if the itemized mvm terms add up to the counter total."""
        return self.mvms == self.mvms_setup + self.mvms_iteration + self.mvms_final

    def to_dict(self):
        out = asdict(self)
        out["branch_certificate"] = (None if self.branch_certificate is None
                                     else self.branch_certificate.summary())
        out["mvms_setup"] = self.mvms_setup
        out["mvms_iteration"] = self.mvms_iteration
        return out


@dataclass(frozen=True)
class ConditionEstimate:
    lambda_min: float
    lambda_max: float
    epsilon: float
    kappa_pre_bound: float
    kappa_pre_actual: float | None = None
    bound_defined: bool = True

    @property
    def kappa(self):
        return self.lambda_max / self.lambda_min


# polynomial construction

def estimate_interval(op, start=None, steps=30, seed=0, margin=0.05):
    """Enclosing interval for a Hermitian positive definite operator.

    Runs a short Lanczos process and widens the extreme Ritz values by
    ``margin`` (relative). The mvms are charged to ``op``.
    """
    op = as_operator(op)
    start = random_unit_vector(op.dim, seed) if start is None else start
    proc = LanczosProcess(op, start, store_basis=False, max_dim=steps)
    while proc.m < steps and proc.step():
        pass
    w = np.linalg.eigvalsh(proc.H)
    lo, hi = w[0] * (1 - margin), w[-1] * (1 + margin)
    if lo <= 0:
        raise BranchCutRitz(f"operator does not look positive definite (Ritz value {w[0]:.3e})")
    return float(lo), float(hi)


def build_polynomial(op, start, cfg, interval=None):
    """Construct the preconditioning polynomial requested by ``cfg``.

    Ritz-based kinds run ``d`` Arnoldi steps on ``op`` from ``start`` (or a
    seeded random vector when ``cfg.random_start``). Those products are
    charged to ``op``'s counters, which is how they enter the setup cost.

    Returns ``None`` for ``poly_kind == "none"``.
    """
    op = as_operator(op)
    if cfg.poly_kind == "none":
        return None
    deg = cfg.d - 1
    if cfg.poly_kind == "chebyshev":
        iv = interval if interval is not None else cfg.interval
        if iv is None:
            if not op.hermitian:
                raise ConfigError("chebyshev needs a Hermitian operator or an explicit interval")
            iv = estimate_interval(op, start, seed=cfg.seed)
        return chebyshev_invsqrt(iv[0], iv[1], deg, rule=cfg.cheb_rule)
    s = random_unit_vector(op.dim, cfg.seed, op.dtype) if cfg.random_start else start
    proc = ArnoldiProcess(op, s, reorth=True, max_dim=cfg.d)
    while proc.m < cfg.d and proc.step():
        pass
    ritz = ritz_values(proc.decomposition(), "harmonic" if cfg.harmonic else "standard")
    try:
        if cfg.poly_kind == "ritz_newton":
            return ritz_interp_poly(ritz)
        return contour_ls_poly(ritz, len(ritz.values) - 1, min_abs=cfg.min_abs, step=cfg.step)
    except BranchCutNode as exc:
        if isinstance(exc, BranchCutRitz):
            raise
        raise BranchCutRitz(str(exc)) from exc


def _certify(q):
    if q is None:
        return None
    if isinstance(q, ChebyshevPoly):
        sample = interval_grid(*q.interval, 1000)
    else:
        sample = q.nodes
    cert = certify_branch(q, sample)
    if not cert.satisfied:
        warnings.warn(f"preconditioning polynomial fails the branch check "
                      f"(min Re q = {cert.min_real_part:.3e})", BranchWarning, stacklevel=3)
    return cert


# the core iteration

def _process(op, start, cfg, store_basis):
    use_lanczos = cfg.krylov == "lanczos" or (
        cfg.krylov == "auto" and op.hermitian and not cfg.reorth)
    if cfg.two_pass and not use_lanczos:
        raise ConfigError("two_pass requires a Hermitian operator and the Lanczos process")
    # max_iter is enforced by the caller so that it is not mistaken for breakdown
    cap = op.dim
    if use_lanczos:
        return LanczosProcess(op, start, store_basis=store_basis, max_dim=cap), "lanczos"
    return ArnoldiProcess(op, start, reorth=cfg.reorth, max_dim=cap), "arnoldi"


def _pad_diff(new, old):
    diff = new.astype(np.result_type(new, old))
    diff[:old.size] -= old
    return diff


class _Monitor:
    """Checkpoint bookkeeping: convergence, stagnation, true errors."""

    def __init__(self, report, cfg, reference):
        self.report = report
        self.tol = cfg.tol
        self.reference = reference
        self.ref_norm = None if reference is None else np.linalg.norm(reference)
        self.gate = False
        self.flat = 0

    def record(self, m, mvms, est, iterate=None):
        true = None
        if self.reference is not None and iterate is not None:
            true = float(np.linalg.norm(iterate - self.reference) / self.ref_norm)
        cps = self.report.checkpoints
        prev = cps[-1].est_rel_diff if cps else None
        cps.append(Checkpoint(m=m, mvms=mvms, est_rel_diff=float(est), true_rel_err=true))
        if est <= self.tol:
            return "converged"
        if est <= STAGNATION_GATE * self.tol:
            self.gate = True
        if self.gate and prev is not None:
            self.flat = self.flat + 1 if est > STAGNATION_FACTOR * prev else 0
            if self.flat >= STAGNATION_COUNT:
                return "stagnation"
        return None


def _run(base, b, q, cfg, order, reference=None, function="invsqrt", origin=(0, 0),
         mvms_poly=0, mvms_start=0, inner_setup=0, t0=None):
    """Shared loop for plain, left and right preconditioned Arnoldi/Lanczos.

    ``origin`` is the counter snapshot taken when the driver started; all
    reported counts are relative to it.
    """
    t0 = time.perf_counter() if t0 is None else t0
    cnt = base.counters
    m0, i0 = origin
    b = np.asarray(b)
    if q is None:
        op, start = base, b
        order = "left"
    elif order == "left":
        start = q.apply(base, b)
        mvms_start += q.degree * base.cost
        op = PreconditionedOperator(base, q, "left")
    else:
        start = b
        op = PreconditionedOperator(base, q, "right")

    proc, kind = _process(op, start, cfg, store_basis=not cfg.two_pass)
    beta = proc.beta
    report = ConvergenceReport(
        method=cfg.method, poly_kind=cfg.poly_kind if q is not None else "none",
        d=(q.degree + 1) if q is not None else 1, tol=cfg.tol, check_every=cfg.k,
        krylov=kind, orthogonalization="mgs2" if (cfg.reorth and kind == "arnoldi") else "mgs",
        seed=cfg.seed, mvms_poly=mvms_poly, mvms_start=mvms_start,
        mvms_per_iteration=op.cost, inner_products_setup=inner_setup, function=function)
    report.branch_certificate = _certify(q)
    mon = _Monitor(report, cfg, reference)
    explicit = order == "right" and cfg.store_y
    track = reference is not None and order == "left" and not cfg.two_pass
    null_tol = NULL_TOL if function == "sqrt" else None

    Y = []
    prev_coeff = np.zeros(0)
    prev_f = None
    termination = "max_iter"
    coeff = None
    k = cfg.k
    while True:
        alive = proc.step()
        m = proc.m
        if explicit:
            Y.append(op.last_intermediate)
        if m % k and alive and m < cfg.max_iter:
            continue
        coeff = inv_sqrt_e1(proc.H, beta, null_tol)
        f = None
        if explicit:
            f = np.column_stack(Y) @ coeff
            est = np.linalg.norm(f - prev_f) / np.linalg.norm(f) if prev_f is not None else 1.0
            prev_f = f
        else:
            est = np.linalg.norm(_pad_diff(coeff, prev_coeff)) / np.linalg.norm(coeff)
            prev_coeff = coeff
            if track:
                f = proc.V @ coeff
        status = mon.record(m, cnt.mvm_count - m0, est, f)
        if status is not None:
            termination = status
            break
        if not alive:
            termination = "breakdown" if proc.breakdown else "max_iter"
            break
        if m >= cfg.max_iter:
            break
    report.iterations = proc.m

    if cfg.two_pass:
        report.passes = 2
        x = two_pass_lanczos_combine(op, start, proc.m, coeff)
    elif explicit:
        x = np.column_stack(Y) @ coeff
    else:
        x = proc.V @ coeff
    if order == "right" and not explicit:
        before = cnt.mvm_count
        x = q.apply(base, x)
        report.mvms_final += cnt.mvm_count - before
    if np.isrealobj(b) and base.dtype.kind != "c" and np.iscomplexobj(x):
        x = x.real
    if reference is not None and report.checkpoints and report.checkpoints[-1].true_rel_err is None:
        report.checkpoints[-1].true_rel_err = float(
            np.linalg.norm(x - reference) / np.linalg.norm(reference))
    report.termination = termination
    _finish(report, cnt, origin, t0)
    return x, report


def _finish(report, cnt, origin, t0):
    report.mvms = cnt.mvm_count - origin[0]
    report.inner_products = cnt.inner_product_count - origin[1]
    report.wall_time = time.perf_counter() - t0


def _fresh(A):
    """Wrap a matrix in a counting operator; operators are used as given."""
    if isinstance(A, LinearOperator):
        return A
    return MatrixOperator(A)


def _with_poly(base, start, q, cfg, interval):
    """Build ``q`` if needed and return it with the setup counts it cost."""
    m1, i1 = base.counters.snapshot()
    if q is None:
        q = build_polynomial(base, start, cfg, interval)
    m2, i2 = base.counters.snapshot()
    return q, m2 - m1, i2 - i1


def _order(cfg):
    return "left" if cfg.method == "left_prec" else "right"


def invsqrt(A, b, q=None, cfg=None, interval=None, reference=None):
    """``A^{-1/2} b`` with the method selected by ``cfg.method``.

    Parameters
    ----------
    A : sparse matrix, ndarray or LinearOperator
    b : ndarray
    q : PrecondPoly, optional
        Built from ``cfg`` when omitted.
    cfg : RunConfig, optional
    interval : (float, float), optional
        Spectral interval for Chebyshev construction.
    reference : ndarray, optional
        Exact solution; fills the ``true_rel_err`` column.

    Returns
    -------
    x : ndarray
    report : ConvergenceReport
    """
    cfg = cfg or RunConfig()
    t0 = time.perf_counter()
    base = _fresh(A)
    origin = base.counters.snapshot()
    if cfg.method == "plain":
        return _run(base, b, None, cfg, "left", reference, origin=origin, t0=t0)
    q, mp, ip = _with_poly(base, b, q, cfg, interval)
    return _run(base, b, q, cfg, _order(cfg), reference, origin=origin,
                mvms_poly=mp, inner_setup=ip, t0=t0)


def _as_method(cfg, method):
    if cfg.method == method:
        return cfg
    extra = {"poly_kind": "none", "d": 1} if method == "plain" else {}
    return RunConfig(**{**asdict(cfg), "method": method, **extra})


def invsqrt_left_prec(A, b, q=None, cfg=None, interval=None, reference=None):
    """Left polynomially preconditioned Arnoldi for ``A^{-1/2} b``.

    The stopping estimate needs only coefficient vectors because the basis
    is orthonormal.
    """
    return invsqrt(A, b, q, _as_method(cfg or RunConfig(), "left_prec"), interval, reference)


def invsqrt_right_prec(A, b, q=None, cfg=None, interval=None, reference=None):
    """Right polynomially preconditioned Arnoldi for ``A^{-1/2} b``.

    With ``cfg.store_y`` the vectors ``y_j = q(A) v_j`` are kept and the
    stopping estimate uses explicit iterate differences. Without it only
    ``V`` is stored, the estimate falls back to coefficient differences and
    the final iterate costs one more application of ``q(A)``.
    """
    return invsqrt(A, b, q, _as_method(cfg or RunConfig(), "right_prec"), interval, reference)


def invsqrt_plain(A, b, cfg=None, reference=None):
    """Unpreconditioned Arnoldi (or Lanczos) approximation of ``A^{-1/2} b``."""
    return invsqrt(A, b, None, _as_method(cfg or RunConfig.plain(), "plain"),
                   reference=reference)


def sqrt_action(A, b, q=None, cfg=None, interval=None, reference=None):
    """``A^{1/2} b`` computed as ``A^{-1/2} (A b)``.

    For singular ``A`` with a semi-simple zero eigenvalue, ``A b`` has no
    component in the null space and the iteration never sees the zero
    eigenvalue. Ritz values for the polynomial are harvested from ``A b`` for
    the same reason.
    """
    cfg = cfg or RunConfig()
    t0 = time.perf_counter()
    base = _fresh(A)
    origin = base.counters.snapshot()
    y = base.apply(np.asarray(b))
    if cfg.method == "plain":
        return _run(base, y, None, cfg, "left", reference, function="sqrt", origin=origin,
                    mvms_start=base.cost, t0=t0)
    q, mp, ip = _with_poly(base, y, q, cfg, interval)
    return _run(base, y, q, cfg, _order(cfg), reference, function="sqrt", origin=origin,
                mvms_poly=mp, mvms_start=base.cost, inner_setup=ip, t0=t0)


def sign_action(A, b, q=None, cfg=None, interval=None, reference=None):
    """``sign(A) b = A (A^2)^{-1/2} b`` with ``A^2`` applied as two products.

    ``q`` (and ``interval``) refer to ``A^2``. Products are counted in units
    of ``A``, so one iteration costs ``2 (2d - 1)``. ``true_rel_err`` is only
    filled at the final checkpoint.
    """
    cfg = cfg or RunConfig()
    t0 = time.perf_counter()
    base = _fresh(A)
    origin = base.counters.snapshot()
    S = SquaredOperator(base)
    if cfg.method == "plain":
        w, rep = _run(S, b, None, cfg, "left", None, function="sign", origin=origin, t0=t0)
    else:
        q, mp, ip = _with_poly(S, b, q, cfg, interval)
        w, rep = _run(S, b, q, cfg, _order(cfg), None, function="sign", origin=origin,
                      mvms_poly=mp, inner_setup=ip, t0=t0)
    x = base.apply(w)
    rep.mvms_final += base.cost
    if reference is not None and rep.checkpoints:
        rep.checkpoints[-1].true_rel_err = float(
            np.linalg.norm(x - reference) / np.linalg.norm(reference))
    _finish(rep, base.counters, origin, t0)
    return x, rep


# condition analysis and dense oracles

def kappa_bound(eps):
    """``(1 + 2 eps + eps^2) / (1 - 2 eps - eps^2)``; ``inf`` if ``eps >= sqrt(2) - 1``."""
    lo = 1 - 2 * eps - eps * eps
    if lo <= 0:
        return float("inf")
    return (1 + 2 * eps + eps * eps) / lo


def condition_analysis(A, q, interval=None, dense_limit=3000, grid=10000, eigenvalues=None):
    """Uniform relative error of ``q`` and the implied condition of ``A q(A)^2``.

    Parameters
    ----------
    A : matrix or None
        Hermitian positive definite. Only used for the dense check.
    q : PrecondPoly
    interval : (float, float), optional
        ``[lambda_min, lambda_max]``; defaults to ``q.interval``.
    dense_limit : int
        Dense eigenvalues of ``A`` are computed when ``n <= dense_limit``.
    eigenvalues : array_like, optional
        Known eigenvalues of ``A``; skips the dense eigensolver.
    """
    if interval is None:
        interval = q.interval
    lo, hi = (float(t) for t in interval)
    z = np.linspace(lo, hi, grid)
    eps = float(np.max(np.abs(1 - np.sqrt(z) * q(z))))
    bound = kappa_bound(eps)
    defined = np.isfinite(bound)
    if not defined:
        warnings.warn(f"epsilon = {eps:.4g} >= sqrt(2) - 1; condition bound does not apply",
                      EpsilonTooLarge, stacklevel=2)
        bound = float("nan")
    actual = None
    lam = None
    if eigenvalues is not None:
        lam = np.asarray(eigenvalues, dtype=float)
    elif A is not None:
        n = A.shape[0]
        if n <= dense_limit:
            Ad = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
            lam = np.linalg.eigvalsh(Ad)
    if lam is not None:
        # q(A) shares the eigenvectors of Hermitian A
        mu = lam * np.real(q(lam)) ** 2
        actual = float(mu.max() / mu.min())
    return ConditionEstimate(lambda_min=lo, lambda_max=hi, epsilon=eps,
                             kappa_pre_bound=bound, kappa_pre_actual=actual,
                             bound_defined=bool(defined))


def _dense(A):
    if isinstance(A, LinearOperator):
        return A.to_dense()
    return A.toarray() if hasattr(A, "toarray") else np.asarray(A)


def _scalar_fun(f, lam):
    lam = np.asarray(lam, dtype=complex)
    if f == "invsqrt":
        return 1.0 / np.sqrt(lam)
    if f == "sqrt":
        out = np.sqrt(lam)
        out[np.abs(lam) <= 1e-12 * max(1.0, np.max(np.abs(lam)))] = 0.0
        return out
    return np.where(lam.real >= 0, 1.0, -1.0)


def reference_solution(A, b, f="invsqrt", method="auto", max_n=2000):
    """Dense oracle for ``f(A) b`` with ``f`` in ``{"invsqrt", "sqrt", "sign"}``.

    ``method="eig"`` uses an eigendecomposition (``eigh`` for Hermitian A);
    ``"schur"`` uses the Schur-based square root. ``"auto"`` picks ``eig`` for
    Hermitian or singular matrices and ``schur`` otherwise. In the
    eigendecomposition route, eigenvalues below ``1e-12 max|lambda|`` count as
    zero for ``sqrt``. Matrices larger than ``max_n`` are refused.
    """
    if f not in ("invsqrt", "sqrt", "sign"):
        raise ValueError(f"unknown function {f!r}")
    Ad = _dense(A)
    b = np.asarray(b)
    n = Ad.shape[0]
    if n > max_n:
        raise ValueError(f"dense oracle refused: n = {n} > max_n = {max_n}")
    herm = np.allclose(Ad, Ad.conj().T, rtol=0, atol=1e-13 * max(1.0, np.abs(Ad).max()))
    if method == "auto":
        method = "eig" if herm else "schur"
        if not herm and f == "sqrt":
            lam = np.linalg.eigvals(Ad)
            if np.min(np.abs(lam)) <= 1e-10 * np.max(np.abs(lam)):
                method = "eig"
    if method == "eig":
        if herm:
            lam, U = np.linalg.eigh(Ad)
            x = U @ (_scalar_fun(f, lam) * (U.conj().T @ b))
        else:
            lam, U = np.linalg.eig(Ad)
            x = U @ (_scalar_fun(f, lam) * np.linalg.solve(U, b))
    elif method == "schur":
        if f == "invsqrt":
            x = dense_inv_sqrtm_times(Ad, b)
        elif f == "sqrt":
            x = dense_sqrtm(Ad) @ b
        else:
            x = Ad @ dense_inv_sqrtm_times(Ad @ Ad, b)
    else:
        raise ValueError("method must be 'auto', 'eig' or 'schur'")
    if np.isrealobj(Ad) and np.isrealobj(b) and np.iscomplexobj(x):
        if np.max(np.abs(x.imag)) <= 1e-8 * max(np.max(np.abs(x.real)), 1e-300):
            x = x.real
    return x
