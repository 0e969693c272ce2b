import numpy as np
import pytest

from ncmd import EmbeddingSet, ModelParams


def random_model(rng, n, k, m, scale=1.0):
    """Random admissible (W, H) pair: H entrywise nonnegative."""
    W = rng.normal(scale=scale, size=(n, m))
    H = np.abs(rng.normal(scale=scale, size=(m, n * k)))
    return ModelParams(W=W, H=H, N=n, K=k, M=m)


def blob_embeddings(rng, n, m, per_class=20, noise=0.05, eta=0.0, seed=1):
    """Gaussian blobs around random class means, train and test halves."""
    from ncmd import corrupt_labels

    S = 2 * n * per_class
    true = np.tile(np.repeat(np.arange(1, n + 1), per_class), 2)
    means = rng.normal(size=(n, m))
    feats = means[true - 1] + noise * rng.normal(size=(S, m))
    split = np.array(["train"] * (S // 2) + ["test"] * (S // 2), dtype=object)
    if eta > 0.0:
        obs, cor = corrupt_labels(true, eta, seed)
        cor = cor & (split == "train")
        obs = np.where(cor, obs, true)
    else:
        obs, cor = true.copy(), np.zeros(S, dtype=bool)
    return EmbeddingSet(features=feats, true_label=true, observed_label=obs,
                        corrupted=cor, split=split)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
