"""Training loop and feature export.

One call trains one (dataset, eta, loss, seed) cell with the standard
recipe: SGD with Nesterov momentum 0.9, initial learning rate 0.1 decayed
by 0.1 every 40 epochs, weight decay 1e-3, batch size 512, 200 epochs.
Smoothing uses the built-in label_smoothing of the cross entropy, which
targets (1 - alpha) e_y + alpha/N exactly.

Runs where training lost a class centroid to the origin are flagged
(class-mean norm ratio > 10) rather than filtered, so downstream tooling
keeps the provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch
from torch import nn
from torch.utils.data import DataLoader, TensorDataset

from .data import DATASETS, load_dataset
from .export import write_features
from .model import CollapseMLP
from .noise import corrupt

COLLAPSE_RATIO_LIMIT = 10.0


@dataclass
class TrainSpec:
    dataset: str
    classes: int = 2
    eta: float = 0.0
    loss: str = "ce"
    alpha: float = 0.1
    seed: int = 0
    epochs: int = 200
    batch_size: int = 512
    lr: float = 0.1
    lr_step: int = 40
    lr_gamma: float = 0.1
    weight_decay: float = 1e-3
    momentum: float = 0.9
    width: int = 2048
    depth: int = 9
    feature_dim: Optional[int] = None  # None means M = N
    device: str = "auto"
    data_root: str = "./data"
    download: bool = False

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.classes}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must be in [0, 1), got {self.eta}")
        if self.loss not in ("ce", "ls"):
            raise ValueError(f"loss must be 'ce' or 'ls', got {self.loss!r}")
        if self.loss == "ls" and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1) for ls, got {self.alpha}")
        for name in ("epochs", "batch_size", "lr_step", "width", "depth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.lr <= 0 or self.lr_gamma <= 0:
            raise ValueError("lr and lr_gamma must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if self.feature_dim is not None and self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")

    def resolve_device(self) -> torch.device:
        if self.device == "auto":
            return torch.device("cuda" if torch.cuda.is_available() else "cpu")
        return torch.device(self.device)


@dataclass
class TrainResult:
    train_features: np.ndarray
    test_features: np.ndarray
    train_true: np.ndarray      # 0-based
    train_observed: np.ndarray  # 0-based
    corrupted: np.ndarray
    test_true: np.ndarray       # 0-based
    history: list = field(default_factory=list)
    final_train_accuracy: float = 0.0
    test_accuracy: float = 0.0
    collapse_ratio: float = 1.0
    suboptimal_collapse: bool = False


def _extract_features(model: CollapseMLP, x: torch.Tensor, batch: int,
                      device: torch.device) -> np.ndarray:
    model.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(x), batch):
            out.append(model.features(x[i:i + batch].to(device)).cpu().numpy())
    return np.vstack(out).astype(np.float64)


def _collapse_ratio(features: np.ndarray, labels: np.ndarray) -> float:
    norms = [float(np.linalg.norm(features[labels == c].mean(axis=0)))
             for c in np.unique(labels)]
    lo = min(norms)
    return float("inf") if lo == 0.0 else max(norms) / lo


def train_model(spec: TrainSpec, data=None) -> TrainResult:
    """Train one cell and return features plus run diagnostics.

    ``data`` overrides dataset loading with (train_x, train_y, test_x,
    test_y) arrays, 0-based labels.
    """
    if data is None:
        data = load_dataset(spec.dataset, spec.classes, spec.data_root, spec.download)
    train_x, train_y, test_x, test_y = data
    observed, flip = corrupt(train_y, spec.eta, spec.classes, spec.dataset, spec.seed)

    device = spec.resolve_device()
    torch.manual_seed(spec.seed)
    model = CollapseMLP(train_x.shape[1], spec.classes, spec.feature_dim,
                        spec.width, spec.depth).to(device)
    smoothing = spec.alpha if spec.loss == "ls" else 0.0
    criterion = nn.CrossEntropyLoss(label_smoothing=smoothing)
    opt = torch.optim.SGD(model.parameters(), lr=spec.lr, momentum=spec.momentum,
                          nesterov=True, weight_decay=spec.weight_decay)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=spec.lr_step,
                                            gamma=spec.lr_gamma)

    xs = torch.from_numpy(np.ascontiguousarray(train_x)).float()
    ys = torch.from_numpy(observed.astype(np.int64))
    gen = torch.Generator().manual_seed(spec.seed)
    loader = DataLoader(TensorDataset(xs, ys), batch_size=spec.batch_size,
                        shuffle=True, generator=gen, num_workers=0)

    history = []
    for epoch in range(spec.epochs):
        model.train()
        total, correct, loss_sum = 0, 0, 0.0
        for xb, yb in loader:
            xb, yb = xb.to(device), yb.to(device)
            opt.zero_grad()
            logits = model(xb)
            loss = criterion(logits, yb)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss = {loss.item()}")
            loss.backward()
            opt.step()
            loss_sum += loss.item() * len(xb)
            correct += int((logits.argmax(dim=1) == yb).sum())
            total += len(xb)
        sched.step()
        history.append({"epoch": epoch, "loss": loss_sum / total,
                        "accuracy": correct / total})

    xt = torch.from_numpy(np.ascontiguousarray(test_x)).float()
    train_feat = _extract_features(model, xs, spec.batch_size, device)
    test_feat = _extract_features(model, xt, spec.batch_size, device)
    with torch.no_grad():
        model.eval()
        preds = []
        for i in range(0, len(xt), spec.batch_size):
            preds.append(model(xt[i:i + spec.batch_size].to(device)).argmax(dim=1).cpu())
        test_acc = float((torch.cat(preds).numpy() == test_y).mean())

    ratio = _collapse_ratio(train_feat, observed)
    return TrainResult(
        train_features=train_feat, test_features=test_feat,
        train_true=train_y, train_observed=observed, corrupted=flip,
        test_true=test_y, history=history,
        final_train_accuracy=history[-1]["accuracy"], test_accuracy=test_acc,
        collapse_ratio=ratio,
        suboptimal_collapse=not np.isfinite(ratio) or ratio > COLLAPSE_RATIO_LIMIT)


def export_result(res: TrainResult, out: str) -> None:
    """Write train and test rows in the feature CSV schema (1-based labels)."""
    n_tr, n_te = len(res.train_true), len(res.test_true)
    features = np.vstack([res.train_features, res.test_features])
    true_label = np.concatenate([res.train_true, res.test_true]) + 1
    observed = np.concatenate([res.train_observed, res.test_true]) + 1
    corrupted = np.concatenate([res.corrupted, np.zeros(n_te, dtype=bool)])
    split = np.array(["train"] * n_tr + ["test"] * n_te)
    write_features(out, features, true_label, observed, corrupted, split)


def train_and_export(spec: TrainSpec, out: str) -> dict:
    """Train one cell, write the feature CSV, return a run summary."""
    res = train_model(spec)
    export_result(res, out)
    return {
        "dataset": spec.dataset, "classes": spec.classes, "eta": spec.eta,
        "loss": spec.loss, "alpha": spec.alpha if spec.loss == "ls" else 0.0,
        "seed": spec.seed, "epochs": spec.epochs,
        "n_train": len(res.train_true), "n_test": len(res.test_true),
        "n_corrupted": int(res.corrupted.sum()),
        "final_loss": res.history[-1]["loss"],
        "final_train_accuracy": res.final_train_accuracy,
        "test_accuracy": res.test_accuracy,
        "collapse_ratio": res.collapse_ratio,
        "suboptimal_collapse": res.suboptimal_collapse,
        "out": out,
    }
