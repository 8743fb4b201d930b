"""SPKN model checkpoints: the network, its BN statistics and the projection layer.

Layout (little-endian)::

    b"SPKN" | u32 version=1 | u32 manifest length | manifest (JSON) | float64 blobs

The manifest records the network and loss configs, the class count and the
ordered tensor names and shapes; blobs follow in the same order. Nothing
time-dependent is written, so equal models give equal bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import orjson
from numpy.typing import NDArray

from .core.errors import ConfigError, DataFormatError
from .core.logging import get_logger
from .domain.configs import LossConfig, NetworkConfig, build_config
from .losses import ProjectionLayer
from .network.xvector import XVectorNet
from .numeric import Rng

MAGIC = b"SPKN"
FORMAT_VERSION = 1

_PREFIX = struct.Struct("<4sII")
_BLOB_DTYPE = np.dtype("<f8")

_logger = get_logger("checkpoint")


@dataclass(slots=True, eq=False)
class SpeakerModel:
    """A trained network with the projection and loss it was trained with."""

    net: XVectorNet
    projection: ProjectionLayer
    loss: LossConfig

    @classmethod
    def create(cls, net_cfg: NetworkConfig, loss_cfg: LossConfig, n_classes: int, rng: Rng) -> SpeakerModel:
        net = XVectorNet(net_cfg, rng.child(1))
        projection = ProjectionLayer.create(net_cfg.output_dim, n_classes, loss_cfg, rng.child(2))
        return cls(net, projection, loss_cfg)

    @property
    def n_classes(self) -> int:
        return self.projection.n_classes

    def parameters(self) -> list[Any]:
        return self.net.parameters() + self.projection.parameters()

    def tensors(self) -> dict[str, NDArray[np.float64]]:
        out = {param.name: param.value for param in self.parameters()}
        out.update(self.net.buffers())
        return out


def encode_checkpoint(model: SpeakerModel) -> bytes:
    tensors = model.tensors()
    manifest = {
        "network": model.net.cfg.model_dump(mode="json"),
        "loss": model.loss.model_dump(mode="json"),
        "n_classes": model.n_classes,
        "tensors": [{"name": name, "shape": list(value.shape)} for name, value in tensors.items()],
    }
    header = orjson.dumps(manifest, option=orjson.OPT_SORT_KEYS)
    blobs = [np.ascontiguousarray(value, dtype=_BLOB_DTYPE).tobytes() for value in tensors.values()]
    return b"".join([_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)), header, *blobs])


def _parse_manifest(payload: bytes) -> tuple[dict[str, Any], int]:
    if len(payload) < _PREFIX.size:
        raise DataFormatError(f"truncated checkpoint at byte 0: {len(payload)} bytes")
    magic, version, length = _PREFIX.unpack_from(payload)
    if magic != MAGIC:
        raise DataFormatError(f"bad magic {magic!r} at byte 0, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported checkpoint version {version} at byte 4")
    end = _PREFIX.size + length
    if end > len(payload):
        raise DataFormatError(f"truncated manifest at byte {_PREFIX.size}")
    try:
        manifest = orjson.loads(payload[_PREFIX.size : end])
    except orjson.JSONDecodeError as exc:
        raise DataFormatError(f"manifest at byte {_PREFIX.size} is not valid JSON: {exc}") from exc
    _check_manifest(manifest)
    return manifest, end


def _check_manifest(manifest: Any) -> None:
    where = f"manifest at byte {_PREFIX.size}"
    if not isinstance(manifest, dict):
        raise DataFormatError(f"{where} must be a JSON object")
    missing = sorted({"network", "loss", "n_classes", "tensors"} - manifest.keys())
    if missing:
        raise DataFormatError(f"{where} is missing keys {missing}")
    for key in ("network", "loss"):
        if not isinstance(manifest[key], dict):
            raise DataFormatError(f"{where}: {key!r} must be an object")
    n_classes = manifest["n_classes"]
    if isinstance(n_classes, bool) or not isinstance(n_classes, int) or n_classes < 1:
        raise DataFormatError(f"{where}: n_classes must be a positive integer, got {n_classes!r}")
    if not isinstance(manifest["tensors"], list):
        raise DataFormatError(f"{where}: 'tensors' must be a list")
    for index, entry in enumerate(manifest["tensors"]):
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise DataFormatError(f"{where}: tensors[{index}] needs a string 'name'")
        shape = entry.get("shape")
        if not isinstance(shape, list) or not all(
            isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in shape
        ):
            raise DataFormatError(
                f"{where}: tensors[{index}] ({entry['name']!r}) needs a 'shape' list of non-negative integers"
            )


def decode_checkpoint(payload: bytes) -> SpeakerModel:
    manifest, offset = _parse_manifest(payload)
    try:
        net_cfg = build_config(NetworkConfig, **manifest["network"])
        loss_cfg = build_config(LossConfig, **manifest["loss"])
    except ConfigError as exc:
        raise DataFormatError(f"invalid config in manifest: {exc}") from exc
    model = SpeakerModel.create(net_cfg, loss_cfg, manifest["n_classes"], Rng(0))

    values: dict[str, NDArray[np.float64]] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape, dtype=np.int64)) * _BLOB_DTYPE.itemsize
        if offset + size > len(payload):
            raise DataFormatError(f"truncated tensor {entry['name']!r} at byte {offset}")
        values[entry["name"]] = np.frombuffer(payload, _BLOB_DTYPE, size // 8, offset).reshape(shape).astype(np.float64)
        offset += size
    if offset != len(payload):
        raise DataFormatError(f"trailing {len(payload) - offset} bytes at byte {offset}")

    expected = model.tensors()
    if set(values) != set(expected):
        missing = sorted(set(expected) - set(values))
        extra = sorted(set(values) - set(expected))
        raise DataFormatError(f"tensor set mismatch: missing {missing}, unexpected {extra}")
    for name, current in expected.items():
        if values[name].shape != current.shape:
            raise DataFormatError(f"tensor {name!r} has shape {values[name].shape}, expected {current.shape}")
    for param in model.parameters():
        param.value = values[param.name]
        param.zero_grad()
    model.net.load_buffers(values)
    return model


def save_checkpoint(path: Path, model: SpeakerModel) -> Path:
    payload = encode_checkpoint(model)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)
    _logger.debug("checkpoint.saved", file=str(path), bytes=len(payload))
    return path


def load_checkpoint(path: Path) -> SpeakerModel:
    model = decode_checkpoint(path.read_bytes())
    _logger.debug("checkpoint.loaded", file=str(path), classes=model.n_classes)
    return model


__all__ = [
    "FORMAT_VERSION",
    "MAGIC",
    "SpeakerModel",
    "decode_checkpoint",
    "encode_checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
