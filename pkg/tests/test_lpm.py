import numpy as np
import pytest

from ncmd import (LossParams, SolverOptions, bilinear_lower_bound, bilinear_term,
                  closed_form_minimizer, construct_nc_config, jensen_lower_bound,
                  regularized_objective, solve_lpm, verify_theorem1)
from ncmd._kernels import HAS_NUMBA
from conftest import random_model

# frozen from tests/oracles/closed_form_oracle.py (full-matrix L-BFGS-B,
# multi-start, objective and gradient coded independently of this package)
# (n, k, lam, alpha, w_norm, h_norm, objective)
ORACLE = [
    (2, 1, 0.0025, 0.0, 2.6443879623, 2.6443879636, 0.042060124706),
    (2, 1, 0.0025, 0.1, 1.9915912618, 1.9915912643, 0.218831222576),
    (2, 1, 0.00025, 0.0, 3.2028377903, 3.2028377878, 0.005836441859),
    (2, 1, 0.00025, 0.1, 2.0354735526, 2.0354735725, 0.200592036297),
    (3, 1, 0.0025, 0.0, 3.5286537804, 3.5286537813, 0.074580054297),
    (3, 1, 0.0025, 0.1, 2.7778996376, 2.7778996288, 0.330808317451),
    (3, 1, 0.00025, 0.0, 4.2566112401, 4.2566113570, 0.010284865214),
    (3, 1, 0.00025, 0.1, 2.8485773572, 2.8485772766, 0.295208953559),
    (2, 5, 0.0025, 0.0, 2.6443879598, 5.9130312385, 0.042060124706),
    (2, 5, 0.0025, 0.1, 1.9915912674, 4.4533334355, 0.218831222576),
    (2, 5, 0.00025, 0.0, 3.2028378079, 7.1617631054, 0.005836441859),
    (2, 5, 0.00025, 0.1, 2.0354735742, 4.5514572258, 0.200592036297),
    (4, 2, 0.0025, 0.0, 4.2184243598, 5.9657529465, 0.106447783377),
    (4, 2, 0.0025, 0.1, 3.4239365924, 4.8421776336, 0.409298453648),
    (4, 2, 0.00025, 0.0, 5.0819301008, 7.1869344133, 0.014646559201),
    (4, 2, 0.00025, 0.1, 3.5246282314, 4.9845768981, 0.355013207777),
]


@pytest.mark.parametrize("n,k,lam,alpha,w,h,obj", ORACLE)
def test_closed_form_matches_reference_minimizer(n, k, lam, alpha, w, h, obj):
    cf = closed_form_minimizer(n, k, LossParams(alpha=alpha, lambda_w=lam, lambda_h=lam))
    assert cf.condition_ok
    assert cf.w_norm == pytest.approx(w, rel=1e-6)
    assert cf.h_norm == pytest.approx(h, rel=1e-6)
    assert cf.objective_at_min == pytest.approx(obj, rel=1e-8)


def test_closed_form_balance_and_symmetry(rng):
    for _ in range(30):
        n = int(rng.integers(2, 8))
        k = int(rng.integers(1, 5))
        lp = LossParams(alpha=float(rng.uniform(0, 0.3)),
                        lambda_w=float(10 ** rng.uniform(-4, -2.2)),
                        lambda_h=float(10 ** rng.uniform(-4, -2.2)))
        cf = closed_form_minimizer(n, k, lp, strict=False)
        if not cf.condition_ok:
            continue
        # the two ridge terms are equal at the minimizer
        assert lp.lambda_w * cf.w_norm ** 2 == pytest.approx(
            (lp.lambda_h / k) * cf.h_norm ** 2, rel=1e-12)
        if lp.lambda_w == lp.lambda_h:
            assert cf.h_norm == pytest.approx(np.sqrt(k) * cf.w_norm, rel=1e-12)


def test_closed_form_t0():
    lp = LossParams(alpha=0.1, lambda_w=1e-3, lambda_h=1e-3)
    cf = closed_form_minimizer(4, 1, lp)
    beta = lp.beta(4)
    assert cf.beta == pytest.approx(beta, abs=1e-15)
    assert cf.t0 == pytest.approx(np.log(beta / (3 * (1 - beta))), rel=1e-14)
    cf0 = closed_form_minimizer(4, 1, LossParams(alpha=0.0, lambda_w=1e-3, lambda_h=1e-3))
    assert cf0.t0 == -np.inf


def test_closed_form_degenerate_regime():
    # ridge heavy enough that the zero configuration wins
    lp = LossParams(alpha=0.0, lambda_w=0.3, lambda_h=0.3)
    with pytest.raises(ValueError, match="q"):
        closed_form_minimizer(2, 1, lp)
    cf = closed_form_minimizer(2, 1, lp, strict=False)
    assert not cf.condition_ok
    assert cf.w_norm == 0.0 and cf.h_norm == 0.0
    assert cf.objective_at_min == pytest.approx(np.log(2.0), rel=1e-14)


def test_closed_form_ridge_rescaling():
    # scaling (lambda_w, lambda_h) -> (s*lambda_w, lambda_h/s) keeps q, the
    # objective and the norm product; the norms trade a factor sqrt(s)
    lp = LossParams(alpha=0.1, lambda_w=2e-3, lambda_h=2e-3)
    cf = closed_form_minimizer(3, 2, lp)
    for s in (0.25, 4.0):
        lps = LossParams(alpha=0.1, lambda_w=2e-3 * s, lambda_h=2e-3 / s)
        cfs = closed_form_minimizer(3, 2, lps)
        assert cfs.q == pytest.approx(cf.q, rel=1e-14)
        assert cfs.objective_at_min == pytest.approx(cf.objective_at_min, rel=1e-13)
        assert cfs.w_norm ** 2 * s == pytest.approx(cf.w_norm ** 2, rel=1e-12)
        assert cfs.h_norm ** 2 / s == pytest.approx(cf.h_norm ** 2, rel=1e-12)


def test_objective_value_at_construct_matches_closed_form():
    for n, k, lam, alpha, w, h, obj in ORACLE[:4] + ORACLE[12:]:
        lp = LossParams(alpha=alpha, lambda_w=lam, lambda_h=lam)
        cf = closed_form_minimizer(n, k, lp)
        params = construct_nc_config(n, k, n, cf.w_norm, cf.h_norm)
        assert regularized_objective(params, lp) == pytest.approx(
            cf.objective_at_min, rel=1e-12)


def test_closed_form_objective_equals_jensen_floor():
    # the attained minimum sits exactly on the jensen floor at the
    # bilinear value of the constructed configuration
    lp = LossParams(alpha=0.1, lambda_w=2.5e-3, lambda_h=2.5e-3)
    cf = closed_form_minimizer(3, 2, lp)
    params = construct_nc_config(3, 2, 3, cf.w_norm, cf.h_norm)
    P = bilinear_term(params)
    floor = (jensen_lower_bound(P, lp.beta(3), 3)
             + lp.lambda_w * cf.w_norm ** 2 + (lp.lambda_h / 2) * cf.h_norm ** 2)
    assert cf.objective_at_min == pytest.approx(floor, rel=1e-12)


@pytest.mark.parametrize("n,k,m", [(2, 1, 2), (3, 2, 3), (4, 1, 7), (2, 3, 5)])
def test_construct_geometry(n, k, m):
    params = construct_nc_config(n, k, m, 1.3, 2.7)
    assert np.linalg.norm(params.W) == pytest.approx(1.3, rel=1e-12)
    assert np.linalg.norm(params.H) == pytest.approx(2.7, rel=1e-12)
    assert params.H.min() >= 0.0
    assert np.linalg.norm(params.W.sum(axis=0)) <= 1e-12  # rows sum to zero
    mu = params.class_means()
    for cls in range(1, n + 1):
        cols = params.class_columns(cls)
        assert np.abs(cols - cols[:, :1]).max() == 0.0  # K identical copies
    G = mu @ mu.T
    off = ~np.eye(n, dtype=bool)
    assert np.abs(G[off]).max() <= 1e-12  # orthogonal class means
    norms = np.linalg.norm(mu, axis=1)
    assert np.ptp(norms) <= 1e-12
    if m > n:
        assert np.abs(params.H[n:, :]).max() == 0.0  # padding coordinates unused


def test_construct_attains_bilinear_bound():
    params = construct_nc_config(5, 2, 6, 1.1, 3.3)
    assert bilinear_term(params) == pytest.approx(bilinear_lower_bound(params), abs=1e-12)


def test_construct_input_validation():
    with pytest.raises(ValueError):
        construct_nc_config(3, 1, 2, 1.0, 1.0)  # m < n cannot hold the frame
    with pytest.raises(ValueError):
        construct_nc_config(3, 1, 3, -1.0, 1.0)


@pytest.mark.parametrize("backend", ["numpy"] + (["numba"] if HAS_NUMBA else []))
def test_solver_reaches_closed_form_small(backend):
    lp = LossParams(alpha=0.1, lambda_w=2.5e-3, lambda_h=2.5e-3)
    cf = closed_form_minimizer(3, 1, lp)
    sol = solve_lpm(3, 1, 3, lp, SolverOptions(restarts=3, seed=1, backend=backend))
    assert sol.converged
    assert sol.backend == backend
    assert np.linalg.norm(sol.params.W) == pytest.approx(cf.w_norm, rel=1e-5)
    assert np.linalg.norm(sol.params.H) == pytest.approx(cf.h_norm, rel=1e-5)
    assert sol.objective == pytest.approx(cf.objective_at_min, rel=1e-9)
    assert sol.params.H.min() >= 0.0


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
def test_backends_agree_bitwise_tolerance():
    lp = LossParams(alpha=0.1, lambda_w=2.5e-3, lambda_h=2.5e-3)
    a = solve_lpm(3, 2, 4, lp, SolverOptions(restarts=2, seed=3, backend="numba"))
    b = solve_lpm(3, 2, 4, lp, SolverOptions(restarts=2, seed=3, backend="numpy"))
    assert a.iterations == b.iterations
    assert a.objective == pytest.approx(b.objective, abs=1e-13)
    assert np.abs(a.params.W - b.params.W).max() <= 1e-12
    assert np.abs(a.params.H - b.params.H).max() <= 1e-12


def test_solver_wide_feature_dimension():
    # m > n changes nothing: the minimizer lives in an n-dimensional slice
    lp = LossParams(alpha=0.0, lambda_w=2.5e-3, lambda_h=2.5e-3)
    cf = closed_form_minimizer(2, 1, lp)
    sol = solve_lpm(2, 1, 6, lp, SolverOptions(restarts=3, seed=0))
    assert sol.objective == pytest.approx(cf.objective_at_min, rel=1e-8)
    assert verify_theorem1(sol, cf)["ok"]


def test_solver_deterministic():
    lp = LossParams(alpha=0.1, lambda_w=2.5e-3, lambda_h=2.5e-3)
    a = solve_lpm(2, 1, 2, lp, SolverOptions(restarts=2, seed=5))
    b = solve_lpm(2, 1, 2, lp, SolverOptions(restarts=2, seed=5))
    assert a.objective == b.objective
    assert np.array_equal(a.params.W, b.params.W)


def test_verify_theorem1_reports_failure():
    lp = LossParams(alpha=0.0, lambda_w=2.5e-3, lambda_h=2.5e-3)
    cf = closed_form_minimizer(2, 1, lp)
    sol = solve_lpm(2, 1, 2, lp, SolverOptions(restarts=1, seed=0, max_iter=3))
    v = verify_theorem1(sol, cf)
    assert not v["ok"]
    assert v["w_rel_err"] > 1e-2


def test_case_b_floor_below_minimum(rng):
    # for beta > 0 the objective never goes below
    # g(t0) - 2 t0 sqrt((N-1) lw lh), a valid relaxation of the minimum
    for _ in range(20):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, 4))
        lp = LossParams(alpha=float(rng.uniform(0.02, 0.3)),
                        lambda_w=float(10 ** rng.uniform(-4, -2.2)),
                        lambda_h=float(10 ** rng.uniform(-4, -2.2)))
        cf = closed_form_minimizer(n, k, lp, strict=False)
        if not cf.condition_ok:
            continue
        beta = lp.beta(n)
        t0 = np.log(beta / ((n - 1) * (1 - beta)))
        floor = (jensen_lower_bound(t0, beta, n)
                 - 2.0 * t0 * np.sqrt((n - 1) * lp.lambda_w * lp.lambda_h))
        assert cf.objective_at_min >= floor - 1e-12


def test_no_random_configuration_beats_the_closed_form(rng):
    lp = LossParams(alpha=0.1, lambda_w=2.5e-3, lambda_h=2.5e-3)
    for n, k in [(2, 1), (3, 2)]:
        cf = closed_form_minimizer(n, k, lp)
        best = np.inf
        for _ in range(10_000):
            scale = float(10 ** rng.uniform(-1, 0.7))
            params = random_model(rng, n, k, n, scale=scale)
            best = min(best, regularized_objective(params, lp))
        assert best >= cf.objective_at_min - 1e-12
