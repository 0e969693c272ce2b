import numpy as np
import pytest

from ncmd import (LossParams, MdProblem, closed_form_minimizer, compare_ce_ls,
                  construct_nc_config, f_eval, g_eval, make_md_problem,
                  md_memorization, md_risk, r_max, solve_r, solve_u1)

LAM = 2.5e-4
CE = LossParams(alpha=0.0, lambda_w=LAM, lambda_h=LAM)
LS = LossParams(alpha=0.1, lambda_w=LAM, lambda_h=LAM)


def _geometry(p):
    h1, h2 = p.nc.H[:, 0], p.nc.H[:, 1]
    w21 = p.nc.W[1] - p.nc.W[0]
    return h1, h2, w21, float(np.linalg.norm(h1 - h2))


def _phi_val(t, alpha):
    return np.logaddexp(0.0, t) - (alpha / 2.0) * t


def test_problem_config_is_the_halved_ridge_minimizer():
    p = make_md_problem(CE, 0.005, 1.0)
    half = LossParams(alpha=0.0, lambda_w=LAM / 2, lambda_h=LAM / 2)
    cf = closed_form_minimizer(2, 1, half)
    assert np.linalg.norm(p.nc.W) == pytest.approx(cf.w_norm, rel=1e-12)
    assert np.linalg.norm(p.nc.H) == pytest.approx(cf.h_norm, rel=1e-12)
    assert p.lam == LAM
    h1, h2, _, hd = _geometry(p)
    assert hd == pytest.approx(np.sqrt(2.0) * np.linalg.norm(h1), rel=1e-12)


def test_problem_validation():
    with pytest.raises(ValueError, match="eta"):
        make_md_problem(CE, 0.0, 1.0)
    with pytest.raises(ValueError, match="eta"):
        make_md_problem(CE, 1.0, 1.0)
    with pytest.raises(ValueError, match="positive"):
        make_md_problem(CE, 0.1, -1.0)
    with pytest.raises(ValueError, match="noise_dist"):
        make_md_problem(CE, 0.1, 1.0, noise_dist="gaussian")
    three = construct_nc_config(3, 1, 3, 1.0, 1.0)
    with pytest.raises(ValueError, match="two-class"):
        MdProblem(nc=three, eta=0.1, alpha=0.0, lam=LAM, c_md=1.0)


def test_r_max_formula():
    p = make_md_problem(CE, 0.02, 1.7)
    _, _, _, hd = _geometry(p)
    assert r_max(p) == pytest.approx(0.02 * hd * hd / 1.7, rel=1e-14)


def test_u1_endpoints():
    p = make_md_problem(CE, 0.005, 1.0)
    h1, h2, w21, _ = _geometry(p)
    rm = r_max(p)
    u0, g0 = solve_u1(p, 0.0)
    assert np.abs(u0 - h2).max() <= 1e-15  # no budget: stay at the wrong mean
    assert g0 == pytest.approx(_phi_val(w21 @ h2, 0.0) + LAM * (h2 @ h2), rel=1e-14)
    for r in (rm, 1.5 * rm):
        u, g = solve_u1(p, r)
        assert np.array_equal(u, h1)  # budget covers the own mean exactly
        assert g == pytest.approx(_phi_val(w21 @ h1, 0.0) + LAM * (h1 @ h1), rel=1e-14)
    with pytest.raises(ValueError):
        solve_u1(p, -0.1)


def test_u1_stationary_at_own_mean():
    # h1 minimizes phi(<w2-w1, u>) + lam|u|^2 over the nonnegative orthant:
    # zero gradient on its support, inward push on the face it sits on.
    # That is why r >= r_max ends the motion.
    for lp in (CE, LS):
        p = make_md_problem(lp, 0.01, 1.0)
        h1, _, w21, _ = _geometry(p)
        s0 = float(w21 @ h1)
        grad = (1.0 / (1.0 + np.exp(-s0)) - lp.alpha / 2.0) * w21 + 2.0 * LAM * h1
        assert np.abs(grad[h1 > 0]).max() <= 1e-12
        assert grad[h1 == 0].min() >= 1e-6


@pytest.mark.parametrize("frac", [0.3, 0.5, 0.75, 0.9, 0.99])
def test_u1_budget_tight_below_r_max(frac):
    p = make_md_problem(CE, 0.005, 1.0)
    _, h2, _, hd = _geometry(p)
    r = frac * r_max(p)
    u, _ = solve_u1(p, r)
    budget = p.c_md * r / hd
    assert p.eta * np.linalg.norm(h2 - u) == pytest.approx(budget, rel=1e-8)
    assert u.min() >= -1e-15


def _grid_search_half(p, r, grid=160):
    """Dense search over the budget disc inside span{h1, h2}."""
    h1, h2, w21, hd = _geometry(p)
    R = p.c_md * r / (p.eta * hd)
    d = (h1 - h2) / hd
    n_hat = (h1 + h2) / np.linalg.norm(h1 + h2)
    xs = np.linspace(-R, R, grid)
    X, Y = np.meshgrid(xs, xs)
    mask = X ** 2 + Y ** 2 <= R ** 2
    U = h2[None, :] + X[mask][:, None] * d[None, :] + Y[mask][:, None] * n_hat[None, :]
    U = U[U.min(axis=1) >= 0.0]
    t = U @ w21
    vals = np.logaddexp(0.0, t) - (p.alpha / 2.0) * t + p.lam * (U * U).sum(axis=1)
    return float(vals.min())


@pytest.mark.parametrize("alpha,frac", [(0.0, 0.3), (0.0, 0.9), (0.1, 0.5), (0.1, 0.99)])
def test_u1_never_beaten_by_grid(alpha, frac):
    lp = LossParams(alpha=alpha, lambda_w=LAM, lambda_h=LAM)
    p = make_md_problem(lp, 0.008, 1.3)
    r = frac * r_max(p)
    _, g = solve_u1(p, r)
    assert g <= _grid_search_half(p, r) + 1e-12


def test_f_increasing_g_decreasing():
    p = make_md_problem(CE, 0.005, 1.0)
    rs = np.linspace(0.0, r_max(p), 40)
    fs = np.array([f_eval(p, float(r)) for r in rs])
    gs = np.array([g_eval(p, float(r)) for r in rs])
    assert np.all(np.diff(fs) >= -1e-15)
    assert np.all(np.diff(gs) <= 1e-15)
    risks = fs + p.eta * gs
    assert md_risk(p, float(rs[7])) == pytest.approx(risks[7], rel=1e-14)


@pytest.mark.parametrize("dist", ["two-point", "circle"])
def test_noise_nodes_centered_and_scaled(dist):
    from ncmd.md import _noise_nodes

    p = make_md_problem(CE, 0.005, 1.0, noise_dist=dist)
    nodes, weights = _noise_nodes(p, 0.03)
    assert weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.abs(weights @ nodes).max() <= 1e-12  # mean-zero dilation
    assert np.linalg.norm(nodes, axis=1) == pytest.approx(0.03, rel=1e-12)


def test_circle_quadrature_converged():
    p64 = make_md_problem(CE, 0.005, 1.0, noise_dist="circle", quad_points=64)
    p512 = make_md_problem(CE, 0.005, 1.0, noise_dist="circle", quad_points=512)
    r = 0.6 * r_max(p64)
    assert f_eval(p64, r) == pytest.approx(f_eval(p512, r), rel=1e-9)


def test_solve_r_interior_and_tight():
    p = make_md_problem(CE, 0.005, 1.0)
    sol = solve_r(p)
    rm = r_max(p)
    assert 0.0 < sol.r_star < rm
    assert sol.constraint_active == (True, True)
    _, _, _, hd = _geometry(p)
    assert sol.normalized_dilation == pytest.approx(sol.r_star / hd, rel=1e-12)
    rs = np.linspace(0.0, rm, 80)
    assert sol.risk <= min(md_risk(p, float(r)) for r in rs) + 1e-12
    assert sol.risk == pytest.approx(md_risk(p, sol.r_star), rel=1e-12)


def test_solution_symmetry():
    p = make_md_problem(LS, 0.004, 1.0)
    sol = solve_r(p)
    h1, h2, _, _ = _geometry(p)
    assert np.linalg.norm(h2 - sol.u1) == pytest.approx(
        np.linalg.norm(h1 - sol.u2), rel=1e-9)
    # for m = 2 the two halves are mirror images under coordinate swap
    assert np.abs(sol.u1[::-1] - sol.u2).max() <= 1e-8
    assert md_memorization(p, sol) == pytest.approx(
        p.eta * (np.linalg.norm(h2 - sol.u1) + np.linalg.norm(h1 - sol.u2)), rel=1e-14)


def test_memorization_dilation_tradeoff_constant():
    # while the budget binds, memorization per half is exactly c_md * r / hd
    p = make_md_problem(CE, 0.005, 1.0)
    _, h2, _, hd = _geometry(p)
    sol = solve_r(p)
    assert p.eta * np.linalg.norm(h2 - sol.u1) == pytest.approx(
        p.c_md * sol.r_star / hd, rel=1e-8)


def test_attack_distance_band():
    # |u1(r) - h1| between (c_md/hd) and (2 sqrt(2) c_md/hd) times (r_max-r)/eta
    p = make_md_problem(CE, 0.05, 1.0)
    h1, _, _, hd = _geometry(p)
    rm = r_max(p)
    lo_c = p.c_md / hd
    hi_c = 2.0 * np.sqrt(2.0) * p.c_md / hd
    for frac in np.linspace(0.72, 0.999, 25):
        u, _ = solve_u1(p, frac * rm)
        dist = np.linalg.norm(u - h1)
        gap = (rm - frac * rm) / p.eta
        assert lo_c * gap < dist < hi_c * gap


def test_corrupted_risk_curvature_floor():
    # G(r) - G(r_max) >= C1 ((r_max - r)/eta)^2 once (r_max - r)/eta < 1
    p = make_md_problem(CE, 0.05, 1.0)
    h1, _, w21, hd = _geometry(p)
    rm = r_max(p)
    s0 = float(w21 @ h1)
    es = np.exp(s0)
    c1 = (es / (2.0 * (1.0 + es) ** 2) * float(w21 @ w21) + 2.0 * LAM) * p.c_md ** 2 / hd ** 2
    g_rm = g_eval(p, rm)
    for frac in np.linspace(0.75, 0.9999, 30):
        r = frac * rm
        if (rm - r) / p.eta >= 1.0:
            continue
        assert g_eval(p, r) - g_rm >= c1 * ((rm - r) / p.eta) ** 2


def test_clean_risk_small_r_coefficient():
    # (F(r) - F(0)) / r^2 approaches 2*C2 as r -> 0
    p = make_md_problem(CE, 0.05, 1.0)
    h1, _, w21, _ = _geometry(p)
    s0 = float(w21 @ h1)
    es = np.exp(s0)
    c2 = es / (2.0 * (1.0 + es) ** 2) * float(w21 @ w21) + LAM
    r = 1e-4
    ratio = (f_eval(p, r) - f_eval(p, 0.0)) / r ** 2 / (2.0 * c2)
    assert ratio == pytest.approx(1.0, abs=1e-3)


def test_compare_requires_plain_ce():
    with pytest.raises(ValueError, match="alpha = 0"):
        compare_ce_ls(LS, LS, 0.005, 1.0)


def test_compare_reports_and_gamma():
    report, sol_ce, sol_ls, t2 = compare_ce_ls(CE, LS, 0.005, 1.0)
    half_ce = closed_form_minimizer(2, 1, LossParams(alpha=0.0, lambda_w=LAM / 2, lambda_h=LAM / 2))
    half_ls = closed_form_minimizer(2, 1, LossParams(alpha=0.1, lambda_w=LAM / 2, lambda_h=LAM / 2))
    assert report.gamma == pytest.approx(half_ce.h_norm / half_ls.h_norm, rel=1e-12)
    assert report.gamma > 1.0
    hd_ce = np.sqrt(2.0) * half_ce.h_norm / np.sqrt(2.0)  # |h1| = h_norm/sqrt(2), hd = |h1|*sqrt(2)
    assert report.c_tilde == pytest.approx(1.0 / (np.sqrt(2.0) * hd_ce), rel=1e-12)
    assert report.c_prime == pytest.approx(1.0 / report.c_tilde, rel=1e-12)
    assert report.alpha_condition  # 0.1 > 4*2.5e-4
    assert report.eta_condition    # sqrt(0.005) = 0.0707 < 0.2109 * 0.392
    assert t2
    assert sol_ce.normalized_dilation > sol_ls.normalized_dilation


def test_compare_degenerate_same_loss():
    report, sol_ce, sol_ls, t2 = compare_ce_ls(CE, CE, 0.005, 1.0)
    assert report.gamma == pytest.approx(1.0, abs=1e-15)
    assert not report.eta_condition
    assert not report.alpha_condition
    assert not t2
    assert sol_ce.normalized_dilation == pytest.approx(sol_ls.normalized_dilation, rel=1e-12)


def test_compare_circle_distribution_same_story():
    report, sol_ce, sol_ls, t2 = compare_ce_ls(CE, LS, 0.005, 1.0, dist="circle")
    assert t2 and report.gamma > 1.0
