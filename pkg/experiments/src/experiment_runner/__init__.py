"""Label-noise MLP experiments exporting features for collapse analysis."""

from .data import DATASETS, TORCHVISION_DATASETS, dataset_available, load_dataset
from .export import write_features
from .model import CollapseMLP
from .noise import corrupt
from .train import (COLLAPSE_RATIO_LIMIT, TrainResult, TrainSpec, export_result,
                    train_and_export, train_model)

__version__ = "0.1.0"

__all__ = [
    "COLLAPSE_RATIO_LIMIT",
    "CollapseMLP",
    "DATASETS",
    "TORCHVISION_DATASETS",
    "TrainResult",
    "TrainSpec",
    "corrupt",
    "dataset_available",
    "export_result",
    "load_dataset",
    "train_and_export",
    "train_model",
    "write_features",
    "__version__",
]
