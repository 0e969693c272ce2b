"""The overparameterized encoder used in the label-noise runs.

Hidden blocks are Linear -> BatchNorm -> ReLU at constant width; the
encoder ends in a block of the requested feature dimension, so exported
features are nonnegative. A plain linear classifier sits on top.
"""

from __future__ import annotations

import torch
from torch import nn


class CollapseMLP(nn.Module):
    def __init__(self, in_dim: int, n_classes: int, feature_dim: int | None = None,
                 width: int = 2048, depth: int = 9):
        super().__init__()
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        feature_dim = n_classes if feature_dim is None else feature_dim
        dims = [in_dim] + [width] * depth + [feature_dim]
        blocks = []
        for a, b in zip(dims, dims[1:]):
            blocks += [nn.Linear(a, b), nn.BatchNorm1d(b), nn.ReLU()]
        self.encoder = nn.Sequential(*blocks)
        self.head = nn.Linear(feature_dim, n_classes)
        self.feature_dim = feature_dim

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.encoder(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.encoder(x))
