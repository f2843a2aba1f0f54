"""Train the three desk-scale regimes and export them to the portable format.

Every run writes, per regime, a model directory plus train/test CSVs, and
one ``seeds.json`` manifest recording seeds, schedules and reached
accuracies, so runs are reproducible from the manifest alone.  All
measurements on the exported models (margins, sweeps, capacity tables) are
the analysis CLI's job; nothing here computes them.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import DATASET_NAME, REGIMES, make_regimes
from .mlp import LEAKY_ALPHA, accuracy, init_layers, train
from .portable import write_dataset, write_model

FULL_SCALE_HIDDEN = (600, 400, 200)
DESK_SCALE_HIDDEN = (200, 100, 50)


@dataclass(frozen=True)
class RegimeConfig:
    dataset: str = DATASET_NAME
    d: int = 32
    k: int = 10
    n_train: int = 5000
    n_test: int = 2000
    hidden: tuple[int, ...] = DESK_SCALE_HIDDEN
    lr: float = 0.05
    batch_size: int = 128
    epoch_caps: dict = field(
        default_factory=lambda: {"easy": 300, "medium": 800, "random": 800}
    )
    noise_fraction: float = 0.15
    data_seed: int = 1000
    init_seed: int = 42
    shuffle_seed: int = 1

    @classmethod
    def full_scale(cls) -> "RegimeConfig":
        return cls(hidden=FULL_SCALE_HIDDEN)


@dataclass(frozen=True)
class RegimeArtifacts:
    name: str
    model_dir: Path
    train_csv: Path
    test_csv: Path
    train_accuracy: float
    test_accuracy: float
    converged: bool


def train_regimes(cfg: RegimeConfig, out_dir: str | Path) -> list[RegimeArtifacts]:
    """Train easy/medium/random-label models to 100% train accuracy (or cap)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    datasets = make_regimes(
        cfg.d, cfg.k, cfg.n_train, cfg.n_test, cfg.data_seed, cfg.noise_fraction
    )
    dims = [cfg.d, *cfg.hidden, cfg.k]
    artifacts = []
    manifest: dict = {
        "dataset": cfg.dataset,
        "config": {**asdict(cfg), "hidden": list(cfg.hidden)},
        "activation": {"kind": "leaky-relu", "alpha": LEAKY_ALPHA},
        "optimizer": {"kind": "sgd", "momentum": 0.9, "lr": cfg.lr,
                      "schedule": "halve after 60 stagnant epochs"},
        "regimes": {},
    }
    for name in REGIMES:
        data = datasets[name]
        layers = init_layers(np.random.default_rng(cfg.init_seed), dims)
        result = train(
            layers,
            data.X_train,
            data.y_train,
            lr=cfg.lr,
            epochs=cfg.epoch_caps[name],
            batch_size=cfg.batch_size,
            seed=cfg.shuffle_seed,
        )
        test_acc = accuracy(result.layers, data.X_test, data.y_test)
        model_dir = write_model(
            result.layers,
            {"kind": "leaky-relu", "alpha": LEAKY_ALPHA},
            out_dir / name,
            metadata={
                "regime": name,
                "dataset": cfg.dataset,
                "label_mode": "random" if name == "random" else "clean",
                "train_accuracy": result.train_accuracy,
                "test_accuracy": test_acc,
            },
        )
        train_csv = write_dataset(data.X_train, data.y_train, out_dir / f"{name}_train.csv")
        test_csv = write_dataset(data.X_test, data.y_test, out_dir / f"{name}_test.csv")
        manifest["regimes"][name] = {
            "epochs_run": result.epochs_run,
            "epoch_cap": cfg.epoch_caps[name],
            "converged": result.converged,
            "final_lr": result.final_lr,
            "train_accuracy": result.train_accuracy,
            "test_accuracy": test_acc,
            "model_dir": str(model_dir),
        }
        if not result.converged:
            manifest["regimes"][name]["note"] = (
                "epoch cap reached before 100% train accuracy; artifacts kept"
            )
        artifacts.append(
            RegimeArtifacts(
                name, model_dir, train_csv, test_csv,
                result.train_accuracy, test_acc, result.converged,
            )
        )
    (out_dir / "seeds.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return artifacts
