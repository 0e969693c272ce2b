"""Collapse diagnostics.

Covariance-based NC1, the memorization sum over corrupted training
samples, and the geometric residuals that characterize a collapsed
configuration: equal-norm orthogonal nonnegative class frames, classifier
rows proportional to mean-centered class means, simplex angles, and
nearest-class-center agreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet, ClassStats, ModelParams, class_stats

PINV_RCOND = 1e-10
_TINY = 1e-300


@dataclass(frozen=True)
class NcReport:
    nc1: float                  # (1/N) trace(Sigma_W pinv(Sigma_B))
    variability_collapse: float  # trace(Sigma_W), mean within-class squared deviation
    equinorm_dev: float         # relative spread of class-mean norms
    orthogonality_dev: float    # max |cos| between distinct class means
    negativity_dev: float       # magnitude of the most negative feature entry
    duality_dev: float          # residual of w_n ~ C * (h_n projected off the global mean)
    etf_angle_dev: float        # max |cos(centered means) + 1/(N-1)|
    self_duality_dev: float     # max |unit centered mean - unit classifier row|
    ncc_agreement: float        # fraction where argmax <w_n, u> picks the nearest mean

    def as_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in self.__dataclass_fields__}

    def max_deviation(self) -> float:
        """Largest residual, ncc disagreement included."""
        vals = [self.nc1, self.variability_collapse, self.equinorm_dev,
                self.orthogonality_dev, self.negativity_dev, self.duality_dev,
                self.etf_angle_dev, self.self_duality_dev, 1.0 - self.ncc_agreement]
        return float(max(vals))


def _scatter(features: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Within/between covariance pair for 1-based labels."""
    S, M = features.shape
    classes = np.unique(labels)
    mu = np.empty((classes.size, M))
    sw = np.zeros((M, M))
    for idx, n in enumerate(classes):
        X = features[labels == n]
        mu[idx] = X.mean(axis=0)
        C = X - mu[idx]
        sw += C.T @ C
    sw /= S
    mug = mu.mean(axis=0)
    B = mu - mug
    sb = B.T @ B / classes.size
    return sw, sb


def covariances(emb: EmbeddingSet, split: str = "train", label_source: str = "true") -> tuple[np.ndarray, np.ndarray]:
    """Within-class and between-class covariance on one split.

    sigmaW averages (h - h_n)(h - h_n)^T over all samples; sigmaB averages
    (h_n - h)(h_n - h)^T over classes, with h the unweighted mean of class
    means. Raises if a class is empty on the split.
    """
    stats = class_stats(emb, split, label_source)  # validates nonempty classes
    del stats
    labels = emb.true_label if label_source == "true" else emb.observed_label
    mask = emb.split == split
    return _scatter(emb.features[mask], labels[mask])


def _nc1_from_cov(sw: np.ndarray, sb: np.ndarray, n_classes: int) -> float:
    sb_scale = float(np.abs(sb).max(initial=0.0))
    if sb_scale == 0.0:
        return 0.0 if float(np.abs(sw).max(initial=0.0)) == 0.0 else float("inf")
    U, s, Vt = np.linalg.svd(sb)
    keep = s > PINV_RCOND * s[0]
    pinv = (Vt[keep].T / s[keep]) @ U[:, keep].T
    return float(np.trace(sw @ pinv)) / n_classes


def nc1_metric(emb: EmbeddingSet, split: str = "train", label_source: str = "true") -> float:
    """Relative within-class scatter (1/N) trace(Sigma_W pinv(Sigma_B)).

    Pseudo-inverse by SVD with singular values below 1e-10 of the largest
    treated as zero. Returns +inf when the between-class scatter vanishes
    but the within-class scatter does not; 0 when both vanish.
    """
    sw, sb = covariances(emb, split, label_source)
    labels = emb.true_label if label_source == "true" else emb.observed_label
    n_classes = np.unique(labels[emb.split == split]).size
    return _nc1_from_cov(sw, sb, n_classes)


def memorization(emb: EmbeddingSet, test_means: ClassStats) -> float:
    """Sum over corrupted training samples of the distance to the test mean
    of the sample's true class. Unnormalized; see memorization_terms for
    the per-sample values."""
    return float(memorization_terms(emb, test_means).sum())


def memorization_terms(emb: EmbeddingSet, test_means: ClassStats) -> np.ndarray:
    """Per-corrupted-sample distances, ordered as stored."""
    means = test_means.class_means
    sel = (emb.split == "train") & emb.corrupted
    labels = emb.true_label[sel]
    if labels.size and labels.max() > means.shape[0]:
        raise ValueError(f"no test mean available for class {int(labels.max())}")
    if labels.size == 0:
        return np.zeros(0)
    return np.linalg.norm(emb.features[sel] - means[labels - 1], axis=1)


def nc_config_report(params: ModelParams) -> NcReport:
    """Geometric residuals of a classifier/feature pair.

    All perfectly-collapsed orthogonal-frame configurations score zero on
    every deviation and 1.0 on ncc_agreement; the caller picks the
    tolerance that counts as "collapsed".
    """
    W, H, N, K = params.W, params.H, params.N, params.K
    mu = params.class_means()
    labels = np.repeat(np.arange(1, N + 1), K)
    sw, sb = _scatter(H.T, labels)
    nc1 = _nc1_from_cov(sw, sb, N)
    variability = float(np.trace(sw))

    norms = np.linalg.norm(mu, axis=1)
    mean_norm = norms.mean()
    equinorm = float((norms.max() - norms.min()) / mean_norm) if mean_norm > 0 else 0.0

    G = mu @ mu.T
    denom = np.maximum(np.outer(norms, norms), _TINY)
    cos = G / denom
    off = ~np.eye(N, dtype=bool)
    orthogonality = float(np.abs(cos[off]).max())

    negativity = float(max(0.0, -H.min()))

    mug = mu.mean(axis=0)
    gn = np.linalg.norm(mug)
    if gn > 0.0:
        ghat = mug / gn
        P = mu - np.outer(mu @ ghat, ghat)
    else:
        P = mu.copy()
    denom_p = float((P * P).sum())
    C = float((W * P).sum() / denom_p) if denom_p > 0 else 0.0
    w_norms = np.maximum(np.linalg.norm(W, axis=1), _TINY)
    duality = float((np.linalg.norm(W - C * P, axis=1) / w_norms).max())

    cen = mu - mug
    cen_norms = np.maximum(np.linalg.norm(cen, axis=1), _TINY)
    cos_c = (cen @ cen.T) / np.outer(cen_norms, cen_norms)
    etf_angle = float(np.abs(cos_c[off] + 1.0 / (N - 1)).max())

    self_duality = float(np.linalg.norm(cen / cen_norms[:, None] - W / w_norms[:, None], axis=1).max())

    scores = W @ H
    pred_lin = scores.argmax(axis=0)
    d2 = ((H.T[:, None, :] - mu[None, :, :]) ** 2).sum(axis=2)
    pred_ncc = d2.argmin(axis=1)
    ncc = float((pred_lin == pred_ncc).mean())

    return NcReport(
        nc1=nc1,
        variability_collapse=variability,
        equinorm_dev=equinorm,
        orthogonality_dev=orthogonality,
        negativity_dev=negativity,
        duality_dev=duality,
        etf_angle_dev=etf_angle,
        self_duality_dev=self_duality,
        ncc_agreement=ncc,
    )
