"""Label-smoothing cross-entropy risk, its logit-difference reformulation,
the regularized objective, the bilinear form with its sharp lower bound,
and analytic gradients.

Two independent evaluation routes are kept on purpose: the softmax route
(`empirical_risk`) and the logit-difference route (`reformulated_risk`)
agree to ~1e-12 and cross-check each other in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import ModelParams


@dataclass(frozen=True)
class LossParams:
    alpha: float        # smoothing level in [0, 1); 0 = plain cross-entropy
    lambda_w: float     # classifier ridge weight, > 0
    lambda_h: float     # feature ridge weight, > 0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.lambda_w <= 0.0 or self.lambda_h <= 0.0:
            raise ValueError("lambda_w and lambda_h must be positive")

    def beta(self, N: int) -> float:
        """Effective smoothing mass pushed off the true class."""
        return (N - 1) * self.alpha / N


def smoothed_label(n: int, alpha: float, N: int) -> np.ndarray:
    """Target vector (1-alpha)*e_n + (alpha/N)*1, 1-based class index."""
    if not 1 <= n <= N:
        raise ValueError(f"class index {n} out of range 1..{N}")
    y = np.full(N, alpha / N)
    y[n - 1] += 1.0 - alpha
    return y


def _log_softmax_cols(Z: np.ndarray) -> np.ndarray:
    """Column-wise log-softmax with max-subtraction."""
    Zs = Z - Z.max(axis=0, keepdims=True)
    return Zs - np.log(np.exp(Zs).sum(axis=0, keepdims=True))


def softmax_scores(W: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Class probability scores for one feature vector."""
    logits = W @ z
    logits = logits - logits.max()
    e = np.exp(logits)
    return e / e.sum()


def ls_loss(W: np.ndarray, z: np.ndarray, n: int, alpha: float) -> float:
    """Smoothed cross-entropy of one sample of class n (1-based)."""
    N = W.shape[0]
    logp = _log_softmax_cols((W @ z)[:, None])[:, 0]
    return float(-smoothed_label(n, alpha, N) @ logp)


def _smoothed_targets(N: int, K: int, alpha: float) -> np.ndarray:
    """Target matrix aligned with class-major feature columns, shape (N, N*K)."""
    Y = np.full((N, N * K), alpha / N)
    for n in range(N):
        Y[n, n * K : (n + 1) * K] += 1.0 - alpha
    return Y


def empirical_risk(params: ModelParams, lp: LossParams) -> float:
    """Mean smoothed cross-entropy over all N*K feature columns."""
    Z = params.W @ params.H
    Y = _smoothed_targets(params.N, params.K, lp.alpha)
    return float(-(Y * _log_softmax_cols(Z)).sum() / (params.N * params.K))


def reformulated_risk(params: ModelParams, lp: LossParams) -> float:
    """Same risk written in logit differences.

    Per column of class n the term is
    log(1 + sum_{m != n} e^{d_m}) - (alpha/N) sum_{m != n} d_m
    with d_m = <w_m - w_n, h>. Algebraically identical to empirical_risk.
    """
    N, K = params.N, params.K
    Z = params.W @ params.H
    total = 0.0
    for j in range(N * K):
        n = j // K
        d = np.delete(Z[:, j] - Z[n, j], n)
        total += np.logaddexp.reduce(np.concatenate(([0.0], d))) - (lp.alpha / N) * d.sum()
    return float(total / (N * K))


def regularized_objective(params: ModelParams, lp: LossParams) -> float:
    """Risk plus ridge terms lambda_w*|W|^2 + (lambda_h/K)*|H|^2."""
    reg = lp.lambda_w * float((params.W ** 2).sum()) + (lp.lambda_h / params.K) * float((params.H ** 2).sum())
    return empirical_risk(params, lp) + reg


def bilinear_term(params: ModelParams) -> float:
    """Mean pairwise logit gap P = (1/(K*N*(N-1))) sum <w_m - w_n, h_n^(k)>."""
    N, K = params.N, params.K
    Z = params.W @ params.H
    own = sum(Z[j // K, j] for j in range(N * K))
    return float((Z.sum() - N * own) / (K * N * (N - 1)))


def bilinear_lower_bound(params: ModelParams) -> float:
    """Sharp lower bound -|W||H|/sqrt(K*N*(N-1)), attained at collapsed
    configurations with orthogonal nonnegative class frames."""
    N, K = params.N, params.K
    wn = float(np.linalg.norm(params.W))
    hn = float(np.linalg.norm(params.H))
    return -wn * hn / np.sqrt(K * N * (N - 1))


def jensen_lower_bound(P: float, beta: float, N: int) -> float:
    """Convexity bound on the risk: log(1 + (N-1)e^P) - beta*P.

    The risk of any (W, H) is at least this value evaluated at
    P = bilinear_term(W, H).
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    return float(np.logaddexp(0.0, P + np.log(N - 1)) - beta * P)


def objective_gradient(params: ModelParams, lp: LossParams) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of regularized_objective in (W, H).

    The nonnegativity constraint on H is ignored here; the solver handles
    it by projection.
    """
    N, K = params.N, params.K
    Z = params.W @ params.H
    logp = _log_softmax_cols(Z)
    D = (np.exp(logp) - _smoothed_targets(N, K, lp.alpha)) / (N * K)
    gW = D @ params.H.T + 2.0 * lp.lambda_w * params.W
    gH = params.W.T @ D + (2.0 * lp.lambda_h / K) * params.H
    return gW, gH
