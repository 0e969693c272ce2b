"""Core containers: embedding sets, model parameters, class statistics.

The feature CSV schema shared with external producers (e.g. the training
runner) is:

    true_label,observed_label,corrupted,split,f0,f1,...,f{M-1}

with 1-based integer labels, corrupted in {0,1}, split in {train,test} and
decimal float features. ``save_embeddings`` writes floats with repr-level
precision so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

SPLITS = ("train", "test")
LABEL_SOURCES = ("true", "observed")


@dataclass(frozen=True)
class EmbeddingSet:
    """Feature matrix with true/observed labels, corruption flags and split tags."""

    features: np.ndarray        # (S, M) float64
    true_label: np.ndarray      # (S,) int, values in 1..N
    observed_label: np.ndarray  # (S,) int, values in 1..N
    corrupted: np.ndarray       # (S,) bool, True = label was redrawn
    split: np.ndarray           # (S,) str, "train" or "test"

    def __post_init__(self):
        S = self.features.shape[0]
        for name in ("true_label", "observed_label", "corrupted", "split"):
            if getattr(self, name).shape != (S,):
                raise ValueError(f"{name} must have shape ({S},)")
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise ValueError("features must be a (S, M) matrix with M >= 1")
        for name in ("true_label", "observed_label"):
            lab = getattr(self, name)
            if lab.min(initial=1) < 1:
                raise ValueError(f"{name} must be 1-based class indices")
        bad = set(np.unique(self.split)) - set(SPLITS)
        if bad:
            raise ValueError(f"unknown split tags: {sorted(bad)}")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(max(self.true_label.max(), self.observed_label.max()))

    def subset(self, mask: np.ndarray) -> "EmbeddingSet":
        return EmbeddingSet(
            features=self.features[mask],
            true_label=self.true_label[mask],
            observed_label=self.observed_label[mask],
            corrupted=self.corrupted[mask],
            split=self.split[mask],
        )


@dataclass(frozen=True)
class ModelParams:
    """Classifier/feature pair of the layer-peeled problem.

    W has one row per class. H holds N*K feature columns grouped
    class-major: columns [n*K, (n+1)*K) belong to class n+1. The model's
    feasible set has H entrywise nonnegative; every operation in this
    package that produces a ModelParams respects that, but construction
    itself does not reject negative entries, so a candidate configuration
    can be run through nc_config_report and fail on negativity_dev rather
    than never existing.
    """

    W: np.ndarray  # (N, M)
    H: np.ndarray  # (M, N*K), entrywise >= 0
    N: int
    K: int
    M: int

    def __post_init__(self):
        if self.W.shape != (self.N, self.M):
            raise ValueError(f"W must have shape ({self.N}, {self.M})")
        if self.H.shape != (self.M, self.N * self.K):
            raise ValueError(f"H must have shape ({self.M}, {self.N * self.K})")
        if self.N < 2 or self.K < 1:
            raise ValueError("need N >= 2 and K >= 1")

    def class_columns(self, n: int) -> np.ndarray:
        """Feature columns of class n (1-based), shape (M, K)."""
        if not 1 <= n <= self.N:
            raise ValueError(f"class index {n} out of range 1..{self.N}")
        return self.H[:, (n - 1) * self.K : n * self.K]

    def class_means(self) -> np.ndarray:
        """Per-class feature means, shape (N, M)."""
        return self.H.reshape(self.M, self.N, self.K).mean(axis=2).T


@dataclass(frozen=True)
class ClassStats:
    class_means: np.ndarray             # (N, M)
    global_mean: np.ndarray             # (M,), unweighted mean of class means
    test_class_means: np.ndarray | None = field(default=None)


def load_embeddings(path, fmt: str = "csv") -> EmbeddingSet:
    """Parse a feature CSV into an EmbeddingSet.

    Raises ValueError naming the offending line on malformed rows,
    inconsistent dimensions or unknown split tags.
    """
    if fmt != "csv":
        raise ValueError(f"unsupported format: {fmt!r}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        expected_prefix = ["true_label", "observed_label", "corrupted", "split"]
        if header[:4] != expected_prefix or len(header) < 5:
            raise ValueError(f"{path}: line 1: bad header, expected "
                             f"{','.join(expected_prefix)},f0,...")
        M = len(header) - 4
        if header[4:] != [f"f{i}" for i in range(M)]:
            raise ValueError(f"{path}: line 1: feature columns must be f0..f{M - 1}")
        true_l, obs_l, corr, split, feats = [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4 + M:
                raise ValueError(f"{path}: line {lineno}: expected {4 + M} fields, got {len(row)}")
            try:
                tl, ol = int(row[0]), int(row[1])
                cf = int(row[2])
                fv = [float(x) for x in row[4:]]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed numeric field") from None
            if tl < 1 or ol < 1:
                raise ValueError(f"{path}: line {lineno}: labels must be >= 1")
            if cf not in (0, 1):
                raise ValueError(f"{path}: line {lineno}: corrupted must be 0 or 1")
            if row[3] not in SPLITS:
                raise ValueError(f"{path}: line {lineno}: unknown split tag {row[3]!r}")
            true_l.append(tl)
            obs_l.append(ol)
            corr.append(bool(cf))
            split.append(row[3])
            feats.append(fv)
        if not feats:
            raise ValueError(f"{path}: no data rows")
    return EmbeddingSet(
        features=np.asarray(feats, dtype=np.float64),
        true_label=np.asarray(true_l, dtype=np.int64),
        observed_label=np.asarray(obs_l, dtype=np.int64),
        corrupted=np.asarray(corr, dtype=bool),
        split=np.asarray(split, dtype=object),
    )


def save_embeddings(emb: EmbeddingSet, path) -> None:
    """Write the CSV schema; floats via repr so load() reproduces them bit-exactly."""
    M = emb.dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true_label", "observed_label", "corrupted", "split"] + [f"f{i}" for i in range(M)])
        for i in range(emb.n_samples):
            writer.writerow(
                [int(emb.true_label[i]), int(emb.observed_label[i]), int(emb.corrupted[i]), emb.split[i]]
                + [repr(float(x)) for x in emb.features[i]]
            )


def corrupt_labels(labels: np.ndarray, eta: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Redraw each label uniformly from 1..N with probability eta.

    The corrupted flag records the redraw event itself, so a redraw that
    happens to land on the true label still counts as corrupted.
    Deterministic for a fixed seed.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must be in (0, 1), got {eta}")
    labels = np.asarray(labels, dtype=np.int64)
    N = int(labels.max())
    rng = np.random.default_rng(seed)
    flagged = rng.random(labels.shape[0]) < eta
    redraw = rng.integers(1, N + 1, size=labels.shape[0])
    observed = np.where(flagged, redraw, labels)
    return observed, flagged


def class_stats(emb: EmbeddingSet, use_split: str = "train", label_source: str = "true") -> ClassStats:
    """Per-class means and their unweighted global mean on one split.

    Raises if any class 1..N has no sample in the chosen split.
    """
    if use_split not in SPLITS:
        raise ValueError(f"use_split must be one of {SPLITS}")
    if label_source not in LABEL_SOURCES:
        raise ValueError(f"label_source must be one of {LABEL_SOURCES}")
    N = emb.n_classes
    labels = emb.true_label if label_source == "true" else emb.observed_label
    mask = emb.split == use_split
    means = np.empty((N, emb.dim))
    for n in range(1, N + 1):
        sel = mask & (labels == n)
        if not sel.any():
            raise ValueError(f"class {n} has no samples in split {use_split!r}")
        means[n - 1] = emb.features[sel].mean(axis=0)
    stats = ClassStats(
        class_means=means,
        global_mean=means.mean(axis=0),
        test_class_means=means if use_split == "test" else None,
    )
    return stats
