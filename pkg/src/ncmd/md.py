"""Two-class memorization-dilation model.

A frozen collapsed configuration (w_1, w_2, h_1, h_2), clean features
dilated by a centered noise distribution of standard deviation r, and one
corrupted embedding per class whose distance to the opposite class mean is
limited by the memorization budget eta*|h_2 - u_1| <= c_md*r/|h_1 - h_2|.
The risk splits into a clean part F(r), non-decreasing in r, and eta times
a corrupted part G(r), non-increasing in r; the optimal dilation r* trades
the two off on [0, r_max] with r_max = eta*|h_1 - h_2|^2/c_md.

The corrupted-embedding subproblem is solved exactly: the minimizer lies
on the budget circle around the opposite mean inside span{h_1, h_2}, so a
golden-section search over the circle angle (clipped to the nonnegative
orthant) suffices. The frozen configuration for smoothing level alpha is
the minimizer of the per-class-sum objective, i.e. the layer-peeled closed
form at half the ridge weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import ModelParams
from .losses import LossParams
from .lpm import closed_form_minimizer, construct_nc_config

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0
NOISE_DISTS = ("two-point", "circle")


@dataclass(frozen=True)
class MdProblem:
    nc: ModelParams          # frozen two-class configuration, K=1
    eta: float               # label-noise level in (0, 1)
    alpha: float             # smoothing level of the loss
    lam: float               # feature ridge weight entering F and G
    c_md: float              # memorization-dilation slope
    noise_dist: str = "two-point"
    quad_points: int = 64

    def __post_init__(self):
        if self.nc.N != 2 or self.nc.K != 1:
            raise ValueError("MD model needs a two-class, K=1 configuration")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must be in (0, 1), got {self.eta}")
        if self.lam <= 0.0 or self.c_md <= 0.0:
            raise ValueError("lam and c_md must be positive")
        if self.noise_dist not in NOISE_DISTS:
            raise ValueError(f"noise_dist must be one of {NOISE_DISTS}")
        h1, h2 = self.nc.H[:, 0], self.nc.H[:, 1]
        if np.linalg.norm(h1 - h2) <= 0.0:
            raise ValueError("class means must be distinct")


@dataclass(frozen=True)
class MdSolution:
    u1: np.ndarray
    u2: np.ndarray
    r_star: float
    risk: float
    constraint_active: tuple[bool, bool]
    normalized_dilation: float  # r_star / |h1 - h2|


@dataclass(frozen=True)
class AssumptionReport:
    gamma: float            # feature-norm ratio, plain-CE config over smoothed config
    c_tilde: float          # c_md / (sqrt(2) * |h1 - h2| of the CE config)
    alpha_condition: bool   # alpha0 > 4*sqrt(lambda_w*lambda_h)
    eta_condition: bool     # sqrt(eta) < c_tilde * (1 - 1/gamma)
    c_prime: float          # sqrt(2) * |h1 - h2| / c_md of the CE config


def make_md_problem(lp: LossParams, eta: float, c_md: float, m: int = 2,
                    noise_dist: str = "two-point", quad_points: int = 64) -> MdProblem:
    """Build the frozen configuration for the given loss and wrap it.

    The configuration minimizes the per-class sum of losses plus
    lambda_w*|W|^2 + lambda_h*|H|^2, which equals the mean-normalized
    closed form at half the ridge weights; F and G then use the full
    lambda_h.
    """
    half = LossParams(alpha=lp.alpha, lambda_w=lp.lambda_w / 2.0, lambda_h=lp.lambda_h / 2.0)
    cf = closed_form_minimizer(2, 1, half)
    nc = construct_nc_config(2, 1, m, cf.w_norm, cf.h_norm)
    return MdProblem(nc=nc, eta=eta, alpha=lp.alpha, lam=lp.lambda_h, c_md=c_md,
                     noise_dist=noise_dist, quad_points=quad_points)


def _geom(p: MdProblem):
    h1 = p.nc.H[:, 0]
    h2 = p.nc.H[:, 1]
    w21 = p.nc.W[1] - p.nc.W[0]
    return h1, h2, w21, float(np.linalg.norm(h1)), float(np.linalg.norm(h1 - h2))


def r_max(p: MdProblem) -> float:
    """Dilation at which the budget circle reaches the own class mean."""
    _, _, _, _, hd = _geom(p)
    return p.eta * hd * hd / p.c_md


def _phi(t: float, alpha: float) -> float:
    """Two-class per-sample loss in the logit gap t."""
    return float(np.logaddexp(0.0, t)) - (alpha / 2.0) * t


def _g_half(u: np.ndarray, wdiff: np.ndarray, alpha: float, lam: float) -> float:
    return _phi(float(wdiff @ u), alpha) + lam * float(u @ u)


def _golden_min(f, lo: float, hi: float, tol: float) -> float:
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def _solve_half(h_att: np.ndarray, h_cen: np.ndarray, wdiff: np.ndarray,
                p: MdProblem, r: float, a: float, hd: float) -> tuple[np.ndarray, float]:
    """Minimize phi(<wdiff, u>) + lam*|u|^2 over |h_cen - u| <= budget, u >= 0.

    h_att is the attracting own-class mean, h_cen the opposite mean the
    budget circle is centered on. The minimizer sits on the circle inside
    span{h_att, h_cen}; theta = 0 points from h_cen toward h_att and the
    objective is unimodal in theta, so golden-section over the clipped
    angle range is exact.
    """
    rm = p.eta * hd * hd / p.c_md
    if r >= rm:
        return h_att.copy(), _g_half(h_att, wdiff, p.alpha, p.lam)
    R = p.c_md * r / (p.eta * hd)
    d = (h_att - h_cen) / hd
    n_hat = (h_att + h_cen) / float(np.linalg.norm(h_att + h_cen))

    def u_of(theta: float) -> np.ndarray:
        return h_cen + R * np.cos(theta) * d - R * np.sin(theta) * n_hat

    def val(theta: float) -> float:
        return _g_half(u_of(theta), wdiff, p.alpha, p.lam)

    if R <= a:
        theta_hi = np.pi / 4.0
    else:
        theta_hi = float(np.arcsin(min(a / R, 1.0))) - np.pi / 4.0
    best_theta = _golden_min(val, 0.0, theta_hi, 1e-13)
    candidates = [(val(t), t) for t in (best_theta, 0.0, theta_hi)]
    candidates.sort()
    u = np.maximum(u_of(candidates[0][1]), 0.0)
    return u, _g_half(u, wdiff, p.alpha, p.lam)


def solve_u1(p: MdProblem, r: float) -> tuple[np.ndarray, float]:
    """Corrupted embedding of class 1 at dilation r, with its risk share.

    Returns h1 exactly once r >= r_max (the budget no longer binds);
    otherwise the budget holds with equality at the solution.
    """
    if r < 0.0:
        raise ValueError("r must be nonnegative")
    h1, h2, w21, a, hd = _geom(p)
    return _solve_half(h1, h2, w21, p, r, a, hd)


def _solve_u2(p: MdProblem, r: float) -> tuple[np.ndarray, float]:
    h1, h2, w21, a, hd = _geom(p)
    return _solve_half(h2, h1, -w21, p, r, a, hd)


def g_eval(p: MdProblem, r: float) -> float:
    """Corrupted-sample risk: both one-sample losses plus ridge terms, at
    the optimal embeddings for dilation r."""
    return solve_u1(p, r)[1] + _solve_u2(p, r)[1]


def _noise_nodes(p: MdProblem, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Support points and weights of the dilation distribution."""
    h1, h2, w21, a, _ = _geom(p)
    if p.noise_dist == "two-point":
        u = w21 / float(np.linalg.norm(w21))
        nodes = np.vstack([r * u, -r * u])
        weights = np.full(2, 0.5)
    else:
        e1 = h1 / a
        e2 = h2 / a
        psi = 2.0 * np.pi * (np.arange(p.quad_points) + 0.5) / p.quad_points
        nodes = r * (np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2)
        weights = np.full(p.quad_points, 1.0 / p.quad_points)
    return nodes, weights


def f_eval(p: MdProblem, r: float) -> float:
    """Clean-sample risk: expected one-sample loss plus ridge over the
    noise distribution, summed over both classes."""
    if r < 0.0:
        raise ValueError("r must be nonnegative")
    h1, h2, w21, _, _ = _geom(p)
    nodes, weights = _noise_nodes(p, r)
    total = 0.0
    for hi, wdiff in ((h1, w21), (h2, -w21)):
        for v, wgt in zip(nodes, weights):
            z = hi + v
            total += wgt * (_phi(float(wdiff @ z), p.alpha) + p.lam * float(z @ z))
    return total


def md_risk(p: MdProblem, r: float) -> float:
    """F(r) + eta * G(r)."""
    return f_eval(p, r) + p.eta * g_eval(p, r)


def solve_r(p: MdProblem, grid_points: int = 256) -> MdSolution:
    """Minimize the risk over r in [0, r_max]: coarse grid, then
    golden-section refinement to 1e-9 * r_max."""
    rm = r_max(p)
    rs = np.linspace(0.0, rm, grid_points)
    vals = np.array([md_risk(p, float(r)) for r in rs])
    i = int(vals.argmin())
    lo = rs[max(i - 1, 0)]
    hi = rs[min(i + 1, grid_points - 1)]
    r_star = _golden_min(lambda r: md_risk(p, r), float(lo), float(hi), 1e-9 * rm)
    h1, h2, _, _, hd = _geom(p)
    u1, _ = solve_u1(p, r_star)
    u2, _ = _solve_u2(p, r_star)
    budget = p.c_md * r_star / hd
    tol = 1e-8 * max(rm, 1e-12)
    interior = r_star < rm * (1.0 - 1e-12)
    active = (
        bool(interior and abs(p.eta * np.linalg.norm(h2 - u1) - budget) <= tol),
        bool(interior and abs(p.eta * np.linalg.norm(h1 - u2) - budget) <= tol),
    )
    return MdSolution(u1=u1, u2=u2, r_star=float(r_star), risk=md_risk(p, float(r_star)),
                      constraint_active=active, normalized_dilation=float(r_star / hd))


def md_memorization(p: MdProblem, sol: MdSolution) -> float:
    """eta * (|h2 - u1| + |h1 - u2|) at the solution."""
    h1, h2, _, _, _ = _geom(p)
    return float(p.eta * (np.linalg.norm(h2 - sol.u1) + np.linalg.norm(h1 - sol.u2)))


def compare_ce_ls(lp_ce: LossParams, lp_ls: LossParams, eta: float, c_md: float,
                  dist: str = "two-point", quad_points: int = 64, m: int = 2,
                  grid_points: int = 256) -> tuple[AssumptionReport, MdSolution, MdSolution, bool]:
    """Solve the plain-CE and smoothed problems side by side.

    Reports the feature-norm ratio gamma, the noise-level condition
    sqrt(eta) < c_tilde*(1 - 1/gamma), and whether the smoothed problem
    ends up with the smaller normalized dilation. Condition violations are
    reported, not raised; sweeps may probe outside them.
    """
    if lp_ce.alpha != 0.0:
        raise ValueError("lp_ce must have alpha = 0")
    p_ce = make_md_problem(lp_ce, eta, c_md, m=m, noise_dist=dist, quad_points=quad_points)
    p_ls = make_md_problem(lp_ls, eta, c_md, m=m, noise_dist=dist, quad_points=quad_points)
    _, _, _, _, hd_ce = _geom(p_ce)
    _, _, _, _, hd_ls = _geom(p_ls)
    gamma = hd_ce / hd_ls
    c_tilde = c_md / (np.sqrt(2.0) * hd_ce)
    c_prime = np.sqrt(2.0) * hd_ce / c_md
    alpha_condition = bool(lp_ls.alpha > 4.0 * np.sqrt(lp_ls.lambda_w * lp_ls.lambda_h))
    eta_condition = bool(gamma > 1.0 and np.sqrt(eta) < c_tilde * (1.0 - 1.0 / gamma))
    sol_ce = solve_r(p_ce, grid_points=grid_points)
    sol_ls = solve_r(p_ls, grid_points=grid_points)
    report = AssumptionReport(gamma=float(gamma), c_tilde=float(c_tilde),
                              alpha_condition=alpha_condition, eta_condition=eta_condition,
                              c_prime=float(c_prime))
    theorem2_holds = bool(sol_ce.normalized_dilation > sol_ls.normalized_dilation)
    return report, sol_ce, sol_ls, theorem2_holds
