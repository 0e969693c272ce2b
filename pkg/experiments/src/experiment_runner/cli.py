"""Command line entry: train one cell and export its feature CSV.

Prints a JSON run summary to stdout. A run that loses a class centroid
to the origin is flagged in the summary (suboptimal_collapse) and warned
about on stderr, but still exits 0; training divergence exits 1.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .data import DATASETS
from .train import TrainSpec, train_and_export


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nc-train", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"nc-train {__version__}")
    ap.add_argument("--dataset", required=True, choices=DATASETS)
    ap.add_argument("--classes", type=int, default=2,
                    help="use the first N labels of the dataset")
    ap.add_argument("--eta", type=float, default=0.0, help="label noise level")
    ap.add_argument("--loss", choices=["ce", "ls"], default="ce")
    ap.add_argument("--alpha", type=float, default=0.1, help="smoothing factor for ls")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--batch-size", type=int, default=512)
    ap.add_argument("--lr", type=float, default=0.1)
    ap.add_argument("--lr-step", type=int, default=40)
    ap.add_argument("--lr-gamma", type=float, default=0.1)
    ap.add_argument("--weight-decay", type=float, default=1e-3)
    ap.add_argument("--width", type=int, default=2048)
    ap.add_argument("--depth", type=int, default=9)
    ap.add_argument("--m", type=int, default=None,
                    help="feature dimension, default = number of classes")
    ap.add_argument("--device", default="auto")
    ap.add_argument("--data-root", default="./data")
    ap.add_argument("--download", action="store_true")
    ap.add_argument("--out", required=True, help="feature CSV path")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = TrainSpec(
            dataset=args.dataset, classes=args.classes, eta=args.eta,
            loss=args.loss, alpha=args.alpha, seed=args.seed,
            epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
            lr_step=args.lr_step, lr_gamma=args.lr_gamma,
            weight_decay=args.weight_decay, width=args.width,
            depth=args.depth, feature_dim=args.m, device=args.device,
            data_root=args.data_root, download=args.download)
        summary = train_and_export(spec, args.out)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"nc-train: error: {exc}", file=sys.stderr)
        return 1
    if summary["suboptimal_collapse"]:
        print(f"nc-train: warning: suboptimal collapse, class-mean norm ratio "
              f"{summary['collapse_ratio']:.3g}", file=sys.stderr)
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
