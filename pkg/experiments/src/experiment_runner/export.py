"""Feature CSV writer.

The schema is the contract with the analysis CLI:
``true_label,observed_label,corrupted,split,f0,...,f{M-1}`` with 1-based
integer labels, corrupted in {0, 1}, split in {train, test}, and floats
written at full repr precision so a round trip is bit exact.
"""

from __future__ import annotations

import csv

import numpy as np

SPLITS = ("train", "test")


def write_features(path: str, features: np.ndarray, true_label: np.ndarray,
                   observed_label: np.ndarray, corrupted: np.ndarray,
                   split: np.ndarray) -> None:
    features = np.asarray(features, dtype=np.float64)
    true_label = np.asarray(true_label)
    observed_label = np.asarray(observed_label)
    corrupted = np.asarray(corrupted, dtype=bool)
    split = np.asarray(split)
    n = features.shape[0]
    if features.ndim != 2:
        raise ValueError(f"features must be 2-d, got shape {features.shape}")
    for name, arr in (("true_label", true_label), ("observed_label", observed_label),
                      ("corrupted", corrupted), ("split", split)):
        if arr.shape != (n,):
            raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    if true_label.min(initial=1) < 1 or observed_label.min(initial=1) < 1:
        raise ValueError("labels must be 1-based")
    if not np.isin(split, SPLITS).all():
        raise ValueError(f"split values must be in {SPLITS}")
    header = ["true_label", "observed_label", "corrupted", "split"]
    header += [f"f{j}" for j in range(features.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            row = [int(true_label[i]), int(observed_label[i]),
                   int(corrupted[i]), str(split[i])]
            row += [repr(float(v)) for v in features[i]]
            writer.writerow(row)
