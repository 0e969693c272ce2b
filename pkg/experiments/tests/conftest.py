import json
import shutil
import subprocess

import pytest

NCMD = shutil.which("ncmd")

# offline cell that interpolates the corrupted labels in a few seconds
QUAL_CFG = dict(dataset="blobs", classes=2, eta=0.2, alpha=0.1, epochs=80,
                batch_size=64, lr=0.05, lr_step=30, width=256, depth=2)
QUAL_SEEDS = (0, 1, 2)


def run_metrics(path, *extra):
    """Call the analysis CLI on a feature CSV and return its result block."""
    proc = subprocess.run(["ncmd", "metrics", "--features", str(path), *extra],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)["result"]


@pytest.fixture(scope="session")
def qual_runs(tmp_path_factory):
    """CE and LS runs of the offline cell, one pair per seed."""
    from experiment_runner import TrainSpec, train_and_export

    root = tmp_path_factory.mktemp("qual")
    runs = []
    for seed in QUAL_SEEDS:
        for loss in ("ce", "ls"):
            out = root / f"{loss}_{seed}.csv"
            summary = train_and_export(
                TrainSpec(loss=loss, seed=seed, **QUAL_CFG), str(out))
            runs.append({"loss": loss, "seed": seed, "path": out,
                         "summary": summary})
    return runs
