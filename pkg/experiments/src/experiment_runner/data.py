"""Dataset loading and class subsetting.

Every loader returns flattened float32 features scaled to [0, 1] and
0-based integer labels, as ``(train_x, train_y, test_x, test_y)`` numpy
arrays. Subsetting keeps the first ``n_classes`` labels of the dataset's
own label order, so "2-class mnist" means digits 0 and 1.

The ``blobs`` dataset is a fixed synthetic mixture used for offline
pipeline checks; it needs no download and is deterministic regardless of
the training seed.
"""

from __future__ import annotations

import numpy as np

TORCHVISION_DATASETS = ("mnist", "fashionmnist", "cifar10", "svhn")
DATASETS = TORCHVISION_DATASETS + ("blobs",)

# blobs geometry: class means sit on scaled coordinate axes, unit noise
_BLOBS_DIM = 32
_BLOBS_CLASSES = 4
_BLOBS_TRAIN_PER_CLASS = 256
_BLOBS_TEST_PER_CLASS = 128
_BLOBS_MEAN_SCALE = 3.0
_BLOBS_SEED = 20240917


def _blobs() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(_BLOBS_SEED)
    parts = []
    for count in (_BLOBS_TRAIN_PER_CLASS, _BLOBS_TEST_PER_CLASS):
        xs, ys = [], []
        for c in range(_BLOBS_CLASSES):
            mean = np.zeros(_BLOBS_DIM)
            mean[c] = _BLOBS_MEAN_SCALE
            xs.append(mean + rng.normal(size=(count, _BLOBS_DIM)))
            ys.append(np.full(count, c))
        parts.append((np.vstack(xs).astype(np.float32), np.concatenate(ys)))
    (train_x, train_y), (test_x, test_y) = parts
    return train_x, train_y, test_x, test_y


def _load_torchvision(name: str, root: str, download: bool):
    from torchvision import datasets as tvd

    if name == "mnist":
        train = tvd.MNIST(root, train=True, download=download)
        test = tvd.MNIST(root, train=False, download=download)
    elif name == "fashionmnist":
        train = tvd.FashionMNIST(root, train=True, download=download)
        test = tvd.FashionMNIST(root, train=False, download=download)
    elif name == "cifar10":
        train = tvd.CIFAR10(root, train=True, download=download)
        test = tvd.CIFAR10(root, train=False, download=download)
    else:
        train = tvd.SVHN(root, split="train", download=download)
        test = tvd.SVHN(root, split="test", download=download)

    def arrays(ds):
        x = np.asarray(ds.data, dtype=np.float32)
        y = np.asarray(getattr(ds, "targets", getattr(ds, "labels", None)))
        return x.reshape(len(x), -1) / 255.0, y.astype(np.int64)

    train_x, train_y = arrays(train)
    test_x, test_y = arrays(test)
    return train_x, train_y, test_x, test_y


def load_dataset(name: str, n_classes: int, root: str = "./data",
                 download: bool = False):
    """Load a dataset restricted to its first ``n_classes`` labels."""
    if name not in DATASETS:
        raise ValueError(f"unknown dataset {name!r}, expected one of {DATASETS}")
    if name == "blobs":
        if not 2 <= n_classes <= _BLOBS_CLASSES:
            raise ValueError(f"blobs has {_BLOBS_CLASSES} classes, asked for {n_classes}")
        train_x, train_y, test_x, test_y = _blobs()
    else:
        train_x, train_y, test_x, test_y = _load_torchvision(name, root, download)
        if not 2 <= n_classes <= int(train_y.max()) + 1:
            raise ValueError(f"{name} cannot provide {n_classes} classes")
    keep = train_y < n_classes
    train_x, train_y = train_x[keep], train_y[keep]
    keep = test_y < n_classes
    test_x, test_y = test_x[keep], test_y[keep]
    return train_x, train_y.astype(np.int64), test_x, test_y.astype(np.int64)


def dataset_available(name: str, root: str = "./data") -> bool:
    """True when the dataset can be loaded without network access."""
    if name == "blobs":
        return True
    try:
        load_dataset(name, 2, root, download=False)
        return True
    except Exception:
        return False
