"""Bridge from training-framework checkpoints to the portable model format.

Supported checkpoint containers: numpy ``.npz`` archives and torch
state-dict files (``.pt``/``.pth``, loaded only when torch is importable).
The mapping spec lists the weight tensors forming the dense bias-free
chain, in input-to-output order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mlp import LEAKY_ALPHA
from .portable import read_model_blobs, write_model

PARITY_PROBES = 100
PARITY_TOL = 1e-6


class ExportError(ValueError):
    """Checkpoint cannot be mapped onto the bias-free dense model class."""


@dataclass(frozen=True)
class ExportSpec:
    source: Path
    layer_names: tuple[str, ...]       # weight tensors, input side first
    activation: dict                   # e.g. {"kind": "leaky-relu", "alpha": 0.1}
    out_dir: Path
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_mapping_file(cls, source, mapping_path, out_dir) -> "ExportSpec":
        spec = json.loads(Path(mapping_path).read_text())
        return cls(
            Path(source),
            tuple(spec["layers"]),
            dict(spec["activation"]),
            Path(out_dir),
            dict(spec.get("metadata", {})),
        )


def _load_checkpoint(path: Path) -> dict[str, np.ndarray]:
    suffix = path.suffix.lower()
    if suffix == ".npz":
        with np.load(path) as archive:
            return {k: np.asarray(archive[k]) for k in archive.files}
    if suffix in (".pt", ".pth"):
        try:
            import torch
        except ImportError as exc:
            raise ExportError("torch checkpoints need torch installed") from exc
        state = torch.load(path, map_location="cpu", weights_only=True)
        if hasattr(state, "state_dict"):
            state = state.state_dict()
        return {k: v.detach().cpu().numpy() for k, v in state.items()}
    raise ExportError(f"unrecognized checkpoint container {path.suffix!r}")


def _chain_from_checkpoint(state: dict[str, np.ndarray], spec: ExportSpec) -> list[np.ndarray]:
    layers = []
    for name in spec.layer_names:
        if name not in state:
            raise ExportError(f"checkpoint has no tensor named {name!r}")
        W = np.asarray(state[name], dtype=np.float64)
        if W.ndim != 2:
            raise ExportError(
                f"layer {name!r} has shape {W.shape}; only dense 2-D layers export"
            )
        layers.append(W)
    for name in state:
        stem = name.rsplit(".", 1)[0]
        if "bias" in name.lower() and any(
            ln.rsplit(".", 1)[0] == stem for ln in spec.layer_names
        ):
            raise ExportError(
                f"checkpoint carries a bias tensor {name!r}; the model class is "
                "bias-free - retrain or strip biases before exporting"
            )
    for lo, hi in zip(layers[:-1], layers[1:]):
        if hi.shape[1] != lo.shape[0]:
            raise ExportError(
                f"mapped layers do not chain: {lo.shape} -> {hi.shape}"
            )
    if len(layers) < 2:
        raise ExportError("the mapped chain needs at least two layers")
    return layers


def _reference_forward(layers: list[np.ndarray], activation: dict, X: np.ndarray) -> np.ndarray:
    kind = activation.get("kind")
    alpha = float(activation.get("alpha", LEAKY_ALPHA))
    h = X
    for W in layers[:-1]:
        z = h @ W.T
        if kind == "relu":
            h = np.maximum(z, 0.0)
        elif kind == "leaky-relu":
            h = np.where(z > 0.0, z, alpha * z)
        elif kind == "identity":
            h = z
        else:
            raise ExportError(f"activation {kind!r} is not positive homogeneous")
    return h @ layers[-1].T


def export(spec: ExportSpec) -> Path:
    """Validate, write the portable model, and check write/read forward parity."""
    state = _load_checkpoint(Path(spec.source))
    layers = _chain_from_checkpoint(state, spec)
    out = write_model(
        layers,
        spec.activation,
        spec.out_dir,
        metadata={"source": str(spec.source), **spec.metadata},
    )
    reloaded = read_model_blobs(out)
    probes = np.random.default_rng(0xE0B0).standard_normal(
        (PARITY_PROBES, layers[0].shape[1])
    )
    want = _reference_forward(layers, spec.activation, probes)
    got = _reference_forward(reloaded, spec.activation, probes)
    deviation = float(np.max(np.abs(want - got)))
    if deviation > PARITY_TOL:
        raise ExportError(f"round-trip forward deviation {deviation:.3e} exceeds {PARITY_TOL}")
    return out
