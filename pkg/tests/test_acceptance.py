"""The ten acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the same condition.
"""

import time
import warnings

import numpy as np
import scipy.linalg as sla

from conftest import record_criterion
from polyprec.funm import (RunConfig, condition_analysis, invsqrt, reference_solution,
                           sign_action, sqrt_action)
from polyprec.linalg import dense_sqrtm
from polyprec.operators import (MatrixOperator, laplace_spectral_interval, make_cycle_digraph,
                                make_graph_laplacian, make_laplace,
                                make_synthetic_nonhermitian, random_unit_vector)
from polyprec.poly import (certify_branch, chebyshev_invsqrt, dense_eval,
                           ritz_interp_poly)

SQRT2M1 = np.sqrt(2.0) - 1.0

# every report produced below is re-checked by criterion 4
REPORTS = []


class TallyOperator(MatrixOperator):
    """Counts products with the matrix on its own, next to the shared counters."""

    def __init__(self, A):
        super().__init__(A)
        self.tally = 0

    def _apply(self, x):
        self.tally += 1
        return super()._apply(x)


def relerr(x, y):
    return float(np.linalg.norm(x - y) / np.linalg.norm(y))


def tracked(driver, A, b, **kw):
    op = TallyOperator(A)
    x, rep = driver(op, b, **kw)
    REPORTS.append((rep, op.tally))
    return x, rep


def random_spd(n, rng, cond):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n)
    rng.shuffle(lam)
    return (Q * lam) @ Q.T, np.sort(lam)


# 1 ---------------------------------------------------------------------------

def test_criterion_01_golden_reproduction():
    A = make_laplace("laplace2d", 50)
    lo, hi = laplace_spectral_interval("laplace2d", 50)
    q = chebyshev_invsqrt(lo, hi, 31)
    est = condition_analysis(A, q, interval=(lo, hi))
    kappa = est.kappa
    # fully dense κ_pre from the matrix A q(A)^2 itself
    Q = dense_eval(q, A)
    P = A.toarray() @ Q @ Q
    mu = np.linalg.eigvalsh(0.5 * (P + P.T))
    kappa_pre_dense = mu[-1] / mu[0]
    checks = {
        "kappa": abs(kappa / 1054 - 1) <= 0.01,
        "eps": abs(est.epsilon / 0.1263 - 1) <= 0.02,
        "bound": abs(est.kappa_pre_bound / 1.7345 - 1) <= 0.005,
        "kappa_pre": abs(kappa_pre_dense / 1.5153 - 1) <= 0.01,
    }
    ok = all(checks.values())
    record_criterion(1, ok, f"kappa={kappa:.2f} eps={est.epsilon:.5f} "
                            f"bound={est.kappa_pre_bound:.5f} kappa_pre={kappa_pre_dense:.5f}")
    assert ok, checks
    assert abs(est.kappa_pre_actual - kappa_pre_dense) <= 1e-8 * kappa_pre_dense


# 2 ---------------------------------------------------------------------------

def test_criterion_02_condition_bound_property():
    rng = np.random.default_rng(20240)
    applicable = violations = 0
    for _ in range(50):
        n = int(rng.integers(10, 201))
        cond = 10 ** rng.uniform(0.3, 3.0)
        A, lam = random_spd(n, rng, cond)
        for deg in (7, 15, 31):
            q = chebyshev_invsqrt(lam[0], lam[-1], deg)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                est = condition_analysis(None, q, interval=(lam[0], lam[-1]))
            if est.epsilon >= SQRT2M1:
                continue
            applicable += 1
            Qd = dense_eval(q, A)
            P = A @ Qd @ Qd
            mu = np.linalg.eigvalsh(0.5 * (P + P.T))
            if mu[-1] / mu[0] > est.kappa_pre_bound * (1 + 1e-12):
                violations += 1
    ok = violations == 0 and applicable > 0
    record_criterion(2, ok, f"{applicable} applicable (matrix, degree) pairs, "
                            f"{violations} violations")
    assert ok


# 3 ---------------------------------------------------------------------------

def _oracle_cases():
    lap = make_laplace("laplace2d", 15)
    syn = make_synthetic_nonhermitian(300, seed=7)
    graph = make_graph_laplacian(make_cycle_digraph(200, 3, seed=4))
    b_unit = np.zeros(200)
    b_unit[17] = 1.0
    return [
        ("spd", lap, random_unit_vector(lap.shape[0], 1), "invsqrt", 1e-10,
         ("chebyshev", "ritz_newton", "contour_ls"), False),
        ("nonhermitian", syn, random_unit_vector(300, 2), "invsqrt", 1e-10,
         ("ritz_newton", "contour_ls"), True),
        ("singular_graph", graph, b_unit, "sqrt", 1e-7,
         ("ritz_newton", "contour_ls"), True),
    ]


def test_criterion_03_oracle_equivalence():
    t0 = time.perf_counter()
    worst = {}
    failures = []
    for name, A, b, f, tol, kinds, reorth in _oracle_cases():
        ref = reference_solution(A, b, f)
        driver = sqrt_action if f == "sqrt" else invsqrt
        combos = [("plain", "none", 1)] + [(m, k, 8) for m in ("left_prec", "right_prec")
                                            for k in kinds]
        for method, kind, d in combos:
            cfg = RunConfig(method=method, poly_kind=kind, d=d, tol=tol, reorth=reorth)
            x, rep = tracked(driver, A, b, cfg=cfg)
            err = relerr(x, ref)
            worst[name] = max(worst.get(name, 0.0), err)
            if not (rep.converged and err <= 10 * tol):
                failures.append((name, method, kind, err, rep.termination))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    record_criterion(3, ok, f"worst relative errors {detail}; {elapsed:.1f} s")
    assert not failures, failures
    assert elapsed < 60


# 5 ---------------------------------------------------------------------------

def test_criterion_05_two_pass():
    A = make_laplace("laplace3d", 10)
    b = random_unit_vector(A.shape[0], 0)
    iv = laplace_spectral_interval("laplace3d", 10)
    results = []
    for method, kind, d in [("plain", "none", 1), ("left_prec", "chebyshev", 8)]:
        common = dict(method=method, poly_kind=kind, d=d, tol=1e-12, interval=iv)
        x1, r1 = tracked(invsqrt, A, b, cfg=RunConfig(**common))
        x2, r2 = tracked(invsqrt, A, b, cfg=RunConfig(**common, two_pass=True))
        results.append((method, relerr(x2, x1), r1.mvms_iteration, r2.mvms_iteration))
    ok = all(diff <= 1e-12 and m2 == 2 * m1 for _, diff, m1, m2 in results)
    record_criterion(5, ok, "; ".join(f"{m}: diff {diff:.1e}, iteration mvms {m1} -> {m2}"
                                      for m, diff, m1, m2 in results))
    assert ok, results


# 6 ---------------------------------------------------------------------------

def test_criterion_06_iteration_reduction():
    A = make_laplace("laplace3d", 10)
    b = random_unit_vector(A.shape[0], 0)
    iv = laplace_spectral_interval("laplace3d", 10)
    its = {}
    for d in (1, 2, 4, 8, 16):
        cfg = (RunConfig.plain(tol=1e-12) if d == 1 else
               RunConfig(poly_kind="chebyshev", d=d, tol=1e-12, interval=iv))
        _, rep = tracked(invsqrt, A, b, cfg=cfg)
        assert rep.converged
        its[d] = rep.iterations
    seq = [its[d] for d in (1, 2, 4, 8, 16)]
    ok = all(a > b for a, b in zip(seq, seq[1:])) and its[8] <= its[1] / 4
    record_criterion(6, ok, "iterations for d = 1,2,4,8,16: " + ", ".join(map(str, seq)))
    assert ok


# 7 ---------------------------------------------------------------------------

def test_criterion_07_certified_branch():
    rng = np.random.default_rng(51)
    checked = violations = 0
    worst = 0.0
    while checked < 20:
        n = int(rng.integers(8, 51))
        lam = rng.uniform(0.2, 5.0, n) + 1j * rng.uniform(-2.0, 2.0, n)
        X = np.eye(n) + 0.2 * rng.standard_normal((n, n)) / np.sqrt(n)
        A = X @ np.diag(lam) @ np.linalg.inv(X)
        if rng.random() < 0.5:
            A = A.real  # real matrices with a non-real spectrum in C+
            lam = np.linalg.eigvals(A)
            if lam.real.min() <= 0:
                continue
        k = int(rng.integers(2, 9))
        nodes = lam[rng.choice(n, size=k, replace=False)]
        if np.isrealobj(A):
            nodes = np.concatenate([nodes, nodes.conj()])
        q = ritz_interp_poly(np.unique(np.round(nodes, 12)))
        if not certify_branch(q, lam).relative_ok:
            continue
        checked += 1
        Q = dense_eval(q, A)
        r = np.linalg.norm(dense_sqrtm(Q @ Q) - Q) / np.linalg.norm(Q)
        r_scipy = np.linalg.norm(sla.sqrtm(Q @ Q) - Q) / np.linalg.norm(Q)
        worst = max(worst, r, r_scipy)
        violations += r > 1e-9 or r_scipy > 1e-9
    ok = violations == 0
    record_criterion(7, ok, f"{checked} matrices, worst relative deviation {worst:.1e}, "
                            f"{violations} violations")
    assert ok


# 8 ---------------------------------------------------------------------------

def _indefinite_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.concatenate([np.linspace(0.5, 3.0, n // 2), -np.linspace(0.7, 4.0, n - n // 2)])
    return (Q * lam) @ Q.T


def test_criterion_08_sign_involution():
    cases = [
        ("hermitian_indefinite", _indefinite_hermitian(150, 3),
         RunConfig(poly_kind="chebyshev", d=8, tol=1e-12, interval=(0.2, 17.0))),
        ("hermitian_indefinite_ritz", _indefinite_hermitian(150, 4),
         RunConfig(poly_kind="ritz_newton", d=8, tol=1e-12)),
        ("synthetic", make_synthetic_nonhermitian(200, seed=7, indefinite=True),
         RunConfig(poly_kind="ritz_newton", d=16, tol=1e-12, reorth=True)),
    ]
    worst = 0.0
    for _, A, cfg in cases:
        b = random_unit_vector(A.shape[0], 5)
        x, _ = tracked(sign_action, A, b, cfg=cfg)
        y, _ = tracked(sign_action, A, x, cfg=cfg)
        worst = max(worst, relerr(y, b))
    ok = worst <= 1e-8
    record_criterion(8, ok, f"worst |sign(sign(b)) - b|/|b| = {worst:.1e} over {len(cases)} cases")
    assert ok


# 9 ---------------------------------------------------------------------------

def test_criterion_09_singular_desingularization():
    worst_err = worst_null = 0.0
    count = 0
    failures = []
    for n in (40, 70, 100):
        for seed in range(3):
            L = make_graph_laplacian(make_cycle_digraph(n, 3, seed=seed))
            Ld = L.toarray()
            lam, V = np.linalg.eig(Ld)
            zero = np.abs(lam) <= 1e-10 * np.abs(lam).max()
            # diagonalizable (well-conditioned eigenvectors) with semi-simple 0
            assert np.linalg.cond(V) < 1e8
            assert np.linalg.matrix_rank(Ld, tol=1e-10 * np.abs(lam).max()) == n - zero.sum()
            left_null = sla.null_space(Ld.T, rcond=1e-10)
            b = np.zeros(n)
            b[(7 * seed) % n] = 1.0
            ref = reference_solution(L, b, "sqrt")
            for method, kind, d in [("plain", "none", 1), ("left_prec", "ritz_newton", 8),
                                    ("right_prec", "ritz_newton", 8),
                                    ("left_prec", "contour_ls", 8),
                                    ("right_prec", "contour_ls", 16)]:
                cfg = RunConfig(method=method, poly_kind=kind, d=d, tol=1e-7, reorth=True)
                x, rep = tracked(sqrt_action, L, b, cfg=cfg)
                err = relerr(x, ref)
                null = float(np.linalg.norm(left_null.T @ x) / np.linalg.norm(x))
                worst_err, worst_null = max(worst_err, err), max(worst_null, null)
                count += 1
                if err > 1e-7 or null > 1e-8:
                    failures.append((n, seed, method, kind, err, null))
    ok = not failures
    record_criterion(9, ok, f"{count} runs, worst error {worst_err:.1e}, "
                            f"worst left-null component {worst_null:.1e}")
    assert ok, failures


# 10 --------------------------------------------------------------------------

def test_criterion_10_no_timing_acceptance():
    # Timings of the large-scale experiments are not reproducible at desk
    # scale. Wall time is reported for information only and nothing here
    # depends on it.
    ok = all(rep.wall_time >= 0 for rep, _ in REPORTS) and len(REPORTS) > 0
    record_criterion(10, ok, "documented: timing tables and the full-scale run are "
                             "out of scope; wall_time is informational only")
    assert ok


# 4 (last in the file: it re-checks every report collected above) ------------

def _own_counter_runs():
    # covers the finalization terms too: right memory mode and sign
    A = make_synthetic_nonhermitian(120, seed=3)
    b = random_unit_vector(120, 0)
    for cfg in (RunConfig(method="right_prec", poly_kind="ritz_newton", d=6, reorth=True,
                          store_y=False),
                RunConfig(method="right_prec", poly_kind="contour_ls", d=4, reorth=True),
                RunConfig(method="left_prec", poly_kind="ritz_newton", d=5, reorth=True,
                          max_iter=7)):
        tracked(invsqrt, A, b, cfg=cfg)
    tracked(sign_action, A, b, cfg=RunConfig(poly_kind="ritz_newton", d=4, reorth=True))
    tracked(sqrt_action, A, b, cfg=RunConfig(method="right_prec", poly_kind="ritz_newton",
                                             d=4, reorth=True, store_y=False))


def test_criterion_04_counter_exactness():
    _own_counter_runs()
    bad = []
    for rep, tally in REPORTS:
        base_cost = 2 if rep.function == "sign" else 1
        per_iter = base_cost * (2 * rep.d - 1)
        expected = (rep.mvms_poly + rep.mvms_start
                    + rep.iterations * per_iter * rep.passes + rep.mvms_final)
        if not (rep.mvms == expected == tally and rep.mvms_per_iteration == per_iter
                and rep.reconcile()):
            bad.append((rep.method, rep.poly_kind, rep.d, rep.mvms, expected, tally))
    ok = not bad
    record_criterion(4, ok, f"{len(REPORTS)} reports: mvms = setup + iterations*(2d-1) "
                            f"+ finalization, equal to an independent tally")
    assert ok, bad[:5]
