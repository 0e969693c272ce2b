"""Layer-peeled problem: closed-form minimizer norms, analytic construction
of collapsed configurations, and the projected-gradient solver.

The closed form: with beta = (N-1)*alpha/N and

    q = beta + 2*sqrt(N*(N-1)*lambda_w*lambda_h)

a nonzero minimizer exists iff q < (N-1)/N, and then

    rho              = log((N-1)(1-q)/q)
    |W|^2            = sqrt(K*N*(N-1)) * sqrt(lambda_h/(K*lambda_w)) * rho
    |H|^2            = sqrt(K*N*(N-1)) * sqrt(K*lambda_w/lambda_h) * rho
    objective at min = -log(1-q) + q*rho

with the balance lambda_w*|W|^2 = (lambda_h/K)*|H|^2 = rho*(q-beta)/2.
Any minimizer is a collapsed configuration (orthogonal nonnegative
equal-norm class frame, classifier rows proportional to centered means)
attaining the sharp bilinear bound -|W||H|/sqrt(K*N*(N-1)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .embeddings import ModelParams
from .losses import LossParams, _smoothed_targets
from .metrics import nc_config_report


@dataclass(frozen=True)
class ClosedForm:
    beta: float
    t0: float               # argmin of the scalar bound; -inf for beta = 0
    q: float
    rho: float
    w_norm: float
    h_norm: float
    objective_at_min: float
    condition_ok: bool


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 100_000
    tol_grad: float = 1e-8
    tol_obj: float = 1e-12
    restarts: int = 5
    seed: int = 0
    init_scale: float = 0.1
    backend: str | None = None  # None = NCMD_BACKEND resolution


@dataclass(frozen=True)
class LpmSolution:
    params: ModelParams
    objective: float
    grad_norm: float        # projected-gradient norm at exit
    iterations: int
    converged: bool
    restarts_used: int
    backend: str


def closed_form_minimizer(N: int, K: int, lp: LossParams, strict: bool = True) -> ClosedForm:
    """Norms and value of the nonzero minimizer.

    Raises (or returns condition_ok=False with the trivial zero solution,
    when strict=False) if the existence condition q < (N-1)/N fails.
    """
    if N < 2 or K < 1:
        raise ValueError("need N >= 2 and K >= 1")
    beta = lp.beta(N)
    t0 = float(np.log(beta / ((N - 1) * (1.0 - beta)))) if beta > 0.0 else float("-inf")
    q = beta + 2.0 * np.sqrt(N * (N - 1) * lp.lambda_w * lp.lambda_h)
    ok = q < (N - 1) / N
    if not ok:
        if strict:
            raise ValueError(
                "no nonzero minimizer: need (N-1)*alpha/N + 2*sqrt(N*(N-1)*lambda_w*lambda_h) "
                f"< (N-1)/N, got {q:.6g} >= {(N - 1) / N:.6g}"
            )
        return ClosedForm(beta=beta, t0=t0, q=q, rho=0.0, w_norm=0.0, h_norm=0.0,
                          objective_at_min=float(np.log(N)), condition_ok=False)
    rho = float(np.log((N - 1) * (1.0 - q) / q))
    scale = np.sqrt(K * N * (N - 1))
    w_norm = float(np.sqrt(scale * np.sqrt(lp.lambda_h / (K * lp.lambda_w)) * rho))
    h_norm = float(np.sqrt(scale * np.sqrt(K * lp.lambda_w / lp.lambda_h) * rho))
    obj = float(-np.log1p(-q) + q * rho)
    return ClosedForm(beta=beta, t0=t0, q=q, rho=rho, w_norm=w_norm, h_norm=h_norm,
                      objective_at_min=obj, condition_ok=True)


def construct_nc_config(N: int, K: int, M: int, w_norm: float, h_norm: float) -> ModelParams:
    """Axis-aligned collapsed configuration with the given norms.

    Class n's K feature columns all equal a*e_n with a = h_norm/sqrt(N*K);
    classifier rows are the centered means rescaled so |W| = w_norm. The
    pair attains the sharp bilinear bound exactly.
    """
    if M < N:
        raise ValueError(f"need M >= N, got M={M}, N={N}")
    if w_norm < 0.0 or h_norm < 0.0:
        raise ValueError("norms must be nonnegative")
    a = h_norm / np.sqrt(N * K)
    mu = np.zeros((N, M))
    mu[:, :N] = a * np.eye(N)
    H = np.repeat(mu.T, K, axis=1)
    centered = mu - mu.mean(axis=0)
    cn = np.linalg.norm(centered)
    W = (w_norm / cn) * centered if cn > 0.0 else np.zeros((N, M))
    return ModelParams(W=W, H=H, N=N, K=K, M=M)


def solve_lpm(N: int, K: int, M: int, lp: LossParams, opts: SolverOptions | None = None) -> LpmSolution:
    """Projected gradient descent with random restarts.

    Each restart draws W ~ N(0, init_scale^2) and H = |N(0, init_scale^2)|
    from seed + restart index; the best restart wins by objective, ties by
    projected-gradient norm, then by restart index.
    """
    if M < N:
        raise ValueError(f"need M >= N, got M={M}, N={N}")
    opts = opts or SolverOptions()
    backend = opts.backend or _kernels.backend_name()
    Y = _smoothed_targets(N, K, lp.alpha)
    best = None
    for i in range(opts.restarts):
        rng = np.random.default_rng(opts.seed + i)
        W0 = opts.init_scale * rng.standard_normal((N, M))
        H0 = np.abs(opts.init_scale * rng.standard_normal((M, N * K)))
        W, H, obj, pg, steps, conv = _kernels.pgd_minimize(
            W0, H0, Y, lp.lambda_w, lp.lambda_h / K,
            opts.max_iter, opts.tol_grad, opts.tol_obj, backend=backend,
        )
        key = (obj, pg, i)
        if best is None or key < best[0]:
            best = (key, W, H, obj, pg, steps, conv)
    _, W, H, obj, pg, steps, conv = best
    params = ModelParams(W=W, H=np.maximum(H, 0.0), N=N, K=K, M=M)
    return LpmSolution(params=params, objective=float(obj), grad_norm=float(pg),
                       iterations=int(steps), converged=bool(conv),
                       restarts_used=opts.restarts, backend=backend)


def verify_theorem1(sol: LpmSolution, cf: ClosedForm, tol_geom: float = 1e-3,
                    tol_norm: float = 1e-2) -> dict:
    """Check a solver result against the closed form.

    Norms and objective must match within tol_norm relative; every
    geometric residual of the configuration must be below tol_geom and
    nearest-center agreement must be perfect up to tol_geom.
    """
    if not cf.condition_ok:
        raise ValueError("closed form has no nonzero minimizer to verify against")
    report = nc_config_report(sol.params)
    w = float(np.linalg.norm(sol.params.W))
    h = float(np.linalg.norm(sol.params.H))
    w_rel = abs(w - cf.w_norm) / cf.w_norm
    h_rel = abs(h - cf.h_norm) / cf.h_norm
    obj_rel = abs(sol.objective - cf.objective_at_min) / abs(cf.objective_at_min)
    geom_ok = report.max_deviation() <= tol_geom
    out = {
        "w_norm": w,
        "h_norm": h,
        "w_rel_err": w_rel,
        "h_rel_err": h_rel,
        "objective_rel_err": obj_rel,
        "norms_ok": bool(w_rel <= tol_norm and h_rel <= tol_norm),
        "objective_ok": bool(obj_rel <= tol_norm),
        "geometry_ok": bool(geom_ok),
        "report": report.as_dict(),
    }
    out["ok"] = bool(out["norms_ok"] and out["objective_ok"] and out["geometry_ok"])
    return out
