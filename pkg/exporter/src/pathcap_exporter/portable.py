"""Writer for the portable model/dataset formats consumed by the analysis CLI.

Format contract: a JSON manifest plus one blob per layer (little-endian
float64, row-major, no header); datasets are CSV with ``f0..f{d-1}`` feature
columns and an optional 1-based ``label`` column.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
_BLOB_DTYPE = np.dtype("<f8")


def write_model(
    layers: list[np.ndarray],
    activation: dict,
    directory: str | Path,
    metadata: dict | None = None,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dims = [layers[0].shape[1]] + [W.shape[0] for W in layers]
    layer_files = []
    for i, W in enumerate(layers):
        name = f"layer_{i + 1:02d}.bin"
        (directory / name).write_bytes(
            np.ascontiguousarray(W, dtype=_BLOB_DTYPE).tobytes()
        )
        layer_files.append(name)
    manifest = {
        "format_version": FORMAT_VERSION,
        "activation": activation,
        "dims": dims,
        "layer_files": layer_files,
        "rng_algorithm": "splitmix64-counter-v1",
        "metadata": metadata or {},
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return directory


def read_model_blobs(directory: str | Path) -> list[np.ndarray]:
    """Read back what write_model produced (used for write/read parity checks)."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    dims = manifest["dims"]
    layers = []
    for i, name in enumerate(manifest["layer_files"]):
        raw = (directory / name).read_bytes()
        layers.append(
            np.frombuffer(raw, dtype=_BLOB_DTYPE).reshape(dims[i + 1], dims[i]).copy()
        )
    return layers


def write_dataset(X: np.ndarray, y: np.ndarray | None, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"f{j}" for j in range(X.shape[1])]
        if y is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            if y is not None:
                row.append(int(y[i]))
            writer.writerow(row)
    return path
