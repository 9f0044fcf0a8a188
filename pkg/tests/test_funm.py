import warnings

import numpy as np
import pytest
import scipy.linalg as sla

from polyprec.errors import ConfigError, EpsilonTooLarge
from polyprec.funm import (RunConfig, condition_analysis, invsqrt, invsqrt_left_prec,
                           invsqrt_plain, invsqrt_right_prec, kappa_bound,
                           reference_solution, sign_action, sqrt_action)
from polyprec.operators import (laplace_spectral_interval, make_cycle_digraph,
                                make_graph_laplacian, make_laplace,
                                make_synthetic_nonhermitian, random_unit_vector)
from polyprec.poly import ChebyshevPoly, chebyshev_invsqrt, constant_poly


def relerr(x, y):
    return np.linalg.norm(x - y) / np.linalg.norm(y)


def random_spd(n, seed, cond=100.0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n)
    return (Q * lam) @ Q.T


@pytest.fixture(scope="module")
def lap3():
    return make_laplace("laplace3d", 6)


# ---------------------------------------------------------------- config

def test_config_plain_consistency():
    with pytest.raises(ConfigError):
        RunConfig(method="plain", poly_kind="chebyshev", d=4)
    with pytest.raises(ConfigError):
        RunConfig(method="left_prec", poly_kind="none", d=4)
    with pytest.raises(ConfigError):
        RunConfig(method="plain", poly_kind="none", d=4)
    with pytest.raises(ConfigError):
        RunConfig(d=0)
    assert RunConfig.plain().k == 64


@pytest.mark.parametrize("d, k", [(1, 64), (8, 8), (16, 4), (32, 2), (100, 1)])
def test_default_check_every(d, k):
    kind = "none" if d == 1 else "chebyshev"
    method = "plain" if d == 1 else "left_prec"
    assert RunConfig(method=method, poly_kind=kind, d=d).k == k


def test_chebyshev_needs_hermitian_or_interval():
    A = make_synthetic_nonhermitian(40, seed=1)
    b = random_unit_vector(40, 0)
    with pytest.raises(ConfigError):
        invsqrt(A, b, cfg=RunConfig(poly_kind="chebyshev", d=4))


# ------------------------------------------------------- trivial examples

@pytest.mark.parametrize("method", ["left_prec", "right_prec"])
def test_identity_with_constant_poly(method):
    b = random_unit_vector(10, 3)
    cfg = RunConfig(method=method, poly_kind="chebyshev", d=1, check_every=1)
    x, rep = invsqrt(np.eye(10), b, q=constant_poly(), cfg=cfg)
    assert np.allclose(x, b, atol=1e-15)
    assert rep.iterations == 1 and rep.converged


def test_plain_identity_exact_at_one():
    b = random_unit_vector(7, 1)
    x, rep = invsqrt_plain(np.eye(7), b, cfg=RunConfig.plain(check_every=1))
    assert np.allclose(x, b, atol=1e-15)
    assert rep.iterations == 1


def test_plain_diag_full_dimension():
    b = np.array([1.0, 1.0]) / np.sqrt(2)
    x, rep = invsqrt_plain(np.diag([1.0, 4.0]), b, cfg=RunConfig.plain(check_every=1))
    assert np.allclose(x, np.array([1.0, 0.5]) / np.sqrt(2), atol=1e-14)
    assert rep.iterations == 2


def test_sqrt_semisimple_diag():
    x, rep = sqrt_action(np.diag([4.0, 9.0, 0.0]), np.ones(3), cfg=RunConfig.plain(check_every=1))
    assert np.allclose(x, [2.0, 3.0, 0.0], atol=1e-13)
    assert rep.mvms_start == 1


def test_sign_diag():
    b = np.array([0.3, -1.2])
    x, rep = sign_action(np.diag([2.0, -3.0]), b, cfg=RunConfig.plain(check_every=1))
    assert np.allclose(x, [0.3, 1.2], atol=1e-14)
    assert rep.reconcile()


# --------------------------------------------------------- oracle checks

def test_random_spd_chebyshev_d8():
    A = random_spd(200, 0)
    b = random_unit_vector(200, 1)
    ref = reference_solution(A, b, "invsqrt")
    cfg = RunConfig(poly_kind="chebyshev", d=8, tol=1e-12, interval=(0.95, 105.0))
    x, rep = invsqrt_left_prec(A, b, cfg=cfg, reference=ref)
    assert relerr(x, ref) <= 1e-10
    assert rep.converged and rep.reconcile()
    assert rep.checkpoints[-1].true_rel_err <= 1e-10


@pytest.mark.parametrize("kind", ["chebyshev", "ritz_newton", "contour_ls"])
def test_left_right_agree(lap3, kind):
    b = random_unit_vector(lap3.shape[0], 5)
    cfg = RunConfig(poly_kind=kind, d=6, tol=1e-11)
    xl, rl = invsqrt_left_prec(lap3, b, cfg=cfg)
    q = None
    if kind == "chebyshev":
        q = chebyshev_invsqrt(*laplace_spectral_interval("laplace3d", 6), 5)
    xr, rr = invsqrt_right_prec(lap3, b, q=q, cfg=cfg)
    assert rl.converged and rr.converged
    assert relerr(xl, xr) <= 1e-9


def test_memory_mode_matches_stored_y(lap3):
    b = random_unit_vector(lap3.shape[0], 2)
    q = chebyshev_invsqrt(*laplace_spectral_interval("laplace3d", 6), 7)
    stored, rs = invsqrt_right_prec(lap3, b, q=q, cfg=RunConfig(d=8, tol=1e-11))
    memory, rm = invsqrt_right_prec(lap3, b, q=q, cfg=RunConfig(d=8, tol=1e-11, store_y=False))
    assert relerr(memory, stored) <= 1e-12
    assert rm.mvms_final - rs.mvms_final == q.degree
    assert rm.reconcile() and rs.reconcile()


@pytest.mark.parametrize("method, kind", [("plain", "none"), ("left_prec", "chebyshev")])
def test_two_pass_matches_one_pass(lap3, method, kind):
    b = random_unit_vector(lap3.shape[0], 4)
    d = 1 if method == "plain" else 4
    iv = laplace_spectral_interval("laplace3d", 6)
    one, r1 = invsqrt(lap3, b, cfg=RunConfig(method=method, poly_kind=kind, d=d, interval=iv))
    two, r2 = invsqrt(lap3, b, cfg=RunConfig(method=method, poly_kind=kind, d=d, interval=iv,
                                             two_pass=True))
    assert r1.krylov == "lanczos" and r2.passes == 2
    assert relerr(two, one) <= 1e-12
    assert r2.mvms_iteration == 2 * r1.mvms_iteration
    assert r2.reconcile()


def test_two_pass_rejected_for_arnoldi():
    with pytest.raises(ConfigError):
        RunConfig(two_pass=True, krylov="arnoldi")


@pytest.mark.parametrize("method, kind, d", [
    ("plain", "none", 1),
    ("left_prec", "ritz_newton", 8),
    ("left_prec", "contour_ls", 8),
    ("right_prec", "ritz_newton", 16),
    ("right_prec", "contour_ls", 16),
])
def test_nonhermitian_oracle(method, kind, d):
    A = make_synthetic_nonhermitian(200, seed=7)
    b = random_unit_vector(200, 0)
    ref = reference_solution(A, b, "invsqrt")
    cfg = RunConfig(method=method, poly_kind=kind, d=d, tol=1e-10, reorth=True)
    x, rep = invsqrt(A, b, cfg=cfg, reference=ref)
    assert rep.converged
    assert relerr(x, ref) <= 1e-9
    assert rep.checkpoints[-1].true_rel_err <= 50 * max(rep.final_est, 1e-15)
    assert rep.reconcile()


def test_preconditioning_reduces_iterations(lap3):
    b = random_unit_vector(lap3.shape[0], 9)
    _, plain = invsqrt_plain(lap3, b, cfg=RunConfig.plain(tol=1e-10, check_every=4))
    for d in (4, 8, 16):
        _, rep = invsqrt_left_prec(lap3, b, cfg=RunConfig(poly_kind="chebyshev", d=d,
                                                           tol=1e-10, check_every=2))
        assert rep.iterations < plain.iterations


# -------------------------------------------------------------- singular

@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("method, kind", [
    ("plain", "none"), ("left_prec", "ritz_newton"), ("right_prec", "contour_ls")])
def test_sqrt_digraph_laplacian(seed, method, kind):
    L = make_graph_laplacian(make_cycle_digraph(50, 3, seed=seed))
    b = np.zeros(50)
    b[seed] = 1.0
    ref = reference_solution(L, b, "sqrt")
    d = 1 if method == "plain" else 8
    cfg = RunConfig(method=method, poly_kind=kind, d=d, tol=1e-7, reorth=True)
    x, rep = sqrt_action(L, b, cfg=cfg)
    assert relerr(x, ref) <= 1e-7
    # the left null vector of an in-degree Laplacian is the all-ones vector
    assert abs(np.ones(50) @ x) / np.sqrt(50) <= 1e-8 * np.linalg.norm(x)
    assert rep.reconcile()


# ------------------------------------------------------------------- sign

def test_sign_hermitian_indefinite_involution():
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((100, 100)))
    lam = np.concatenate([np.linspace(1, 4, 50), -np.linspace(1, 5, 50)])
    A = (Q * lam) @ Q.T
    b = random_unit_vector(100, 1)
    cfg = RunConfig(poly_kind="chebyshev", d=8, tol=1e-12, interval=(0.9, 26.0))
    x, r1 = sign_action(A, b, cfg=cfg)
    y, _ = sign_action(A, x, cfg=cfg)
    assert relerr(y, b) <= 1e-8
    assert relerr(x, reference_solution(A, b, "sign")) <= 1e-9
    assert r1.reconcile()


def test_sign_synthetic_ritz_newton():
    A = make_synthetic_nonhermitian(200, seed=7)
    b = random_unit_vector(200, 2)
    ref = reference_solution(A, b, "sign", method="schur")
    cfg = RunConfig(poly_kind="ritz_newton", d=16, tol=1e-11, reorth=True)
    x, rep = sign_action(A, b, cfg=cfg, reference=ref)
    assert relerr(x, ref) <= 1e-8
    assert rep.mvms_per_iteration == 2 * (2 * 16 - 1)
    assert rep.reconcile()


# --------------------------------------------------- termination and counts

def test_max_iter_termination(lap3):
    b = random_unit_vector(lap3.shape[0], 0)
    x, rep = invsqrt_plain(lap3, b, cfg=RunConfig.plain(max_iter=3, check_every=1))
    assert rep.termination == "max_iter" and not rep.converged
    assert rep.iterations == 3
    assert rep.reconcile()


def test_stagnation_detected():
    # tol below attainable accuracy: the estimate flattens at roundoff
    A = random_spd(60, 1, cond=1e4)
    b = random_unit_vector(60, 0)
    cfg = RunConfig.plain(tol=1e-30, check_every=1, krylov="lanczos", max_iter=60)
    _, rep = invsqrt_plain(A, b, cfg=cfg)
    assert rep.termination in ("stagnation", "breakdown", "max_iter")
    assert not np.isnan(rep.final_est)


def test_report_itemization(lap3):
    b = random_unit_vector(lap3.shape[0], 1)
    _, rep = invsqrt_left_prec(lap3, b, cfg=RunConfig(poly_kind="ritz_newton", d=4, reorth=True))
    assert rep.mvms_poly == 4
    assert rep.mvms_per_iteration == 7
    assert rep.mvms == (rep.mvms_poly + rep.mvms_start
                        + rep.iterations * rep.mvms_per_iteration * rep.passes
                        + rep.mvms_final)
    d = rep.to_dict()
    assert d["mvms"] == rep.mvms and d["termination"] == rep.termination


def test_checkpoints_monotone(lap3):
    b = random_unit_vector(lap3.shape[0], 1)
    _, rep = invsqrt_left_prec(lap3, b, cfg=RunConfig(poly_kind="chebyshev", d=4))
    ms = [c.m for c in rep.checkpoints]
    mv = [c.mvms for c in rep.checkpoints]
    assert ms == sorted(ms) and mv == sorted(mv)
    assert all(m % rep.check_every == 0 for m in ms[:-1])


# -------------------------------------------------------------- analysis

def test_kappa_bound_values():
    assert kappa_bound(0.0) == 1.0
    assert kappa_bound(0.5) == np.inf
    assert np.isclose(kappa_bound(0.1), 1.21 / 0.79)


def test_condition_analysis_one_point():
    A = np.eye(5) * 4.0
    q = ChebyshevPoly((3.0, 5.0), [0.5])
    est = condition_analysis(A, q, interval=(4.0, 4.0))
    assert est.epsilon == pytest.approx(0.0, abs=1e-15)
    assert est.kappa_pre_bound == pytest.approx(1.0)


def test_condition_analysis_bound_holds():
    A = random_spd(100, 4, cond=50.0)
    lam = np.linalg.eigvalsh(A)
    q = chebyshev_invsqrt(lam[0], lam[-1], 7)
    est = condition_analysis(A, q, interval=(lam[0], lam[-1]))
    assert est.bound_defined
    assert est.kappa_pre_actual <= est.kappa_pre_bound * (1 + 1e-12)


def test_condition_analysis_warns_large_epsilon():
    A = random_spd(40, 2, cond=1e4)
    lam = np.linalg.eigvalsh(A)
    q = chebyshev_invsqrt(lam[0], lam[-1], 1)
    with pytest.warns(EpsilonTooLarge):
        est = condition_analysis(A, q, interval=(lam[0], lam[-1]))
    assert not est.bound_defined


# ---------------------------------------------------------------- oracle

@pytest.mark.parametrize("f, expect", [("invsqrt", 0.5), ("sqrt", 2.0), ("sign", 1.0)])
def test_reference_scalar(f, expect):
    b = np.arange(1.0, 4.0)
    assert np.allclose(reference_solution(np.eye(3) * 4.0, b, f), expect * b)
    assert np.allclose(reference_solution(np.eye(3), b, f), b)


def test_reference_paths_agree_on_normal_matrix():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30)))
    lam = rng.uniform(0.5, 3, 30) + 1j * rng.uniform(-1, 1, 30)
    A = (Q * lam) @ Q.conj().T
    b = rng.standard_normal(30)
    for f in ("invsqrt", "sqrt", "sign"):
        e = reference_solution(A, b, f, method="eig")
        s = reference_solution(A, b, f, method="schur")
        assert relerr(e, s) <= 1e-11


def test_reference_matches_scipy_sqrtm():
    A = make_synthetic_nonhermitian(60, seed=3).toarray()
    b = random_unit_vector(60, 1)
    assert relerr(reference_solution(A, b, "sqrt"), sla.sqrtm(A) @ b) <= 1e-11


def test_ritz_poly_from_driver_is_certified(lap3):
    b = random_unit_vector(lap3.shape[0], 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        _, rep = invsqrt_left_prec(lap3, b, cfg=RunConfig(poly_kind="ritz_newton", d=8))
    assert rep.branch_certificate.satisfied
