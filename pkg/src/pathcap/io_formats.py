"""Portable model/dataset formats.

Models are a JSON manifest plus one raw blob per layer: little-endian
float64, row-major, no header, so round-trips are bit-exact across
platforms and language boundaries.  Datasets are CSV with feature columns
f0..f{d-1} and an optional 1-based integer ``label`` column.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .network import ACTIVATION_KINDS, Activation, Dataset, Network
from .sampling import RNG_ALGORITHM

__all__ = [
    "FormatError",
    "FORMAT_VERSION",
    "save_model",
    "load_model",
    "save_dataset",
    "load_dataset",
    "write_counts_csv",
    "model_digest",
    "file_digest",
]

FORMAT_VERSION = 1
_BLOB_DTYPE = np.dtype("<f8")


class FormatError(ValueError):
    """Malformed or unsupported on-disk artifact."""


def save_model(net: Network, directory: str | Path, metadata: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    layer_files = []
    for i, w in enumerate(net.layers):
        name = f"layer_{i + 1:02d}.bin"
        (directory / name).write_bytes(np.ascontiguousarray(w, dtype=_BLOB_DTYPE).tobytes())
        layer_files.append(name)
    activation: dict = {"kind": net.activation.kind}
    if net.activation.kind == "leaky-relu":
        activation["alpha"] = net.activation.alpha
    manifest = {
        "format_version": FORMAT_VERSION,
        "activation": activation,
        "dims": net.dims,
        "layer_files": layer_files,
        "rng_algorithm": RNG_ALGORITHM,
        "metadata": metadata or {},
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return directory


def load_model(path: str | Path) -> Network:
    """Load and validate a portable model; rejects biases and unknown activations."""
    path = Path(path)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    if not manifest_path.exists():
        raise FormatError(f"no manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format version {manifest.get('format_version')!r}"
        )
    for key in manifest:
        if "bias" in key.lower():
            raise FormatError(
                "bias tensors are not supported: the positive homogeneous model "
                "class is bias-free (re-export without biases)"
            )
    act = manifest.get("activation", {})
    kind = act.get("kind")
    if kind not in ACTIVATION_KINDS:
        raise FormatError(
            f"unsupported activation {kind!r}: not positive homogeneous "
            f"(expected one of {ACTIVATION_KINDS})"
        )
    activation = (
        Activation(kind, float(act["alpha"])) if kind == "leaky-relu" else Activation(kind)
    )
    dims = manifest.get("dims")
    files = manifest.get("layer_files")
    if not isinstance(dims, list) or not isinstance(files, list):
        raise FormatError("manifest must carry dims and layer_files lists")
    if len(files) != len(dims) - 1 or len(dims) < 3:
        raise FormatError("dims and layer_files are inconsistent")
    base = manifest_path.parent
    layers = []
    for i, name in enumerate(files):
        raw = (base / name).read_bytes()
        rows, cols = int(dims[i + 1]), int(dims[i])
        expected = rows * cols * _BLOB_DTYPE.itemsize
        if len(raw) != expected:
            raise FormatError(
                f"layer blob {name} has {len(raw)} bytes, expected {expected} "
                f"for shape ({rows}, {cols})"
            )
        w = np.frombuffer(raw, dtype=_BLOB_DTYPE).reshape(rows, cols).astype(np.float64)
        if not np.all(np.isfinite(w)):
            raise FormatError(f"layer blob {name} contains non-finite entries")
        layers.append(w)
    try:
        return Network(tuple(layers), activation)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_dataset(ds: Dataset, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"f{j}" for j in range(ds.d)]
        if ds.y is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.X[i]]
            if ds.y is not None:
                row.append(int(ds.y[i]))
            writer.writerow(row)
    return path


def load_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("dataset CSV is empty") from None
        has_label = bool(header) and header[-1] == "label"
        feat_cols = header[:-1] if has_label else header
        expected = [f"f{j}" for j in range(len(feat_cols))]
        if feat_cols != expected:
            raise FormatError(f"feature columns must be {expected[:3]}..., got {feat_cols[:3]}")
        X, y = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(f"ragged row at line {lineno}")
            try:
                X.append([float(v) for v in row[: len(feat_cols)]])
            except ValueError as exc:
                raise FormatError(f"bad feature value at line {lineno}: {exc}") from exc
            if has_label:
                try:
                    label = int(row[-1])
                except ValueError as exc:
                    raise FormatError(f"bad label at line {lineno}: {exc}") from exc
                if label < 1:
                    raise FormatError(f"label {label} at line {lineno}; labels are 1-based")
                y.append(label)
    if not X:
        raise FormatError("dataset has no rows")
    try:
        return Dataset(np.asarray(X), np.asarray(y) if has_label else None)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_counts_csv(counts, path: str | Path) -> Path:
    """Sparse path-count table: one row per sign-split edge pair."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "source", "source_sign", "target", "target_sign", "count"])
        for row in counts.csv_rows():
            writer.writerow(row)
    return path


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def model_digest(path: str | Path) -> str:
    """Digest of the manifest plus all layer blobs, order-independent."""
    path = Path(path)
    base = path if path.is_dir() else path.parent
    h = hashlib.sha256()
    for f in sorted(p for p in base.iterdir() if p.is_file()):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()
