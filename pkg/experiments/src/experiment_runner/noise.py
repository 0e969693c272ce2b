"""Label corruption with a mask shared across losses.

The random state is derived from (dataset, eta, seed) only, so CE and LS
runs with the same seed see the same corrupted samples and the comparison
between them is paired. Each sample is redrawn with probability eta,
uniformly over all classes; the corrupted flag records the redraw event,
so a redraw landing on the true label still counts.
"""

from __future__ import annotations

import zlib

import numpy as np


def corrupt(labels: np.ndarray, eta: float, n_classes: int, dataset: str,
            seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (observed_labels, corrupted_mask) for 0-based labels."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must be in [0, 1), got {eta}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(
        [zlib.crc32(dataset.encode()), int(round(eta * 1e9)), seed])
    flip = rng.random(labels.size) < eta
    redraw = rng.integers(0, n_classes, size=labels.size)
    observed = np.where(flip, redraw, labels)
    return observed.astype(labels.dtype), flip
