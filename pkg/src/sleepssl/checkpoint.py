"""Model checkpoint file (magic SSLCKPT1).

Layout, little-endian: 8-byte magic, 1 format version byte, uint32-prefixed
model-config text blob, uint32 tensor count, then per tensor: uint16-prefixed
UTF-8 name, uint8 rank, uint32 dims, raw float32 data. Trainable parameters
and batch-norm running statistics are stored; optimizer velocity is not.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import CheckpointFormatError, CheckpointShapeMismatch
from .model import Model, ModelConfig

MAGIC = b"SSLCKPT1"
VERSION = 1


def _pack_tensor(name: str, array: np.ndarray) -> bytes:
    encoded = name.encode("utf-8")
    dims = struct.pack(f"<{array.ndim}I", *array.shape)
    return (
        struct.pack("<H", len(encoded)) + encoded
        + struct.pack("<B", array.ndim) + dims
        + array.astype("<f4").tobytes()
    )


def save_checkpoint(model: Model, path: str | Path) -> None:
    path = Path(path)
    config_blob = model.config.to_text().encode("utf-8")
    tensors: list[tuple[str, np.ndarray]] = [
        (name, p.data) for name, p in sorted(model.params.items())
    ]
    tensors += [(f"state.{name}", arr) for name, arr in sorted(model.state.items())]
    chunks = [
        MAGIC,
        struct.pack("<B", VERSION),
        struct.pack("<I", len(config_blob)),
        config_blob,
        struct.pack("<I", len(tensors)),
    ]
    chunks += [_pack_tensor(name, arr) for name, arr in tensors]
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(b"".join(chunks))
    tmp.replace(path)


def load_checkpoint(path: str | Path, dtype=np.float32) -> Model:
    path = Path(path)
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointFormatError(
            f"{path}: expected magic {MAGIC!r}, found {data[:8]!r}"
        )
    if data[8] != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported format version {data[8]}")
    pos = 9

    def take(size: int) -> int:
        nonlocal pos
        if pos + size > len(data):
            raise CheckpointFormatError(f"{path}: truncated at byte {pos}")
        pos += size
        return pos - size

    (config_len,) = struct.unpack_from("<I", data, take(4))
    config = ModelConfig.from_text(data[take(config_len) : pos].decode("utf-8"))
    (count,) = struct.unpack_from("<I", data, take(4))

    model = Model(config, seed=0, dtype=dtype)
    loaded = 0
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, take(2))
        name = data[take(name_len) : pos].decode("utf-8")
        rank = data[take(1)]
        shape = struct.unpack_from(f"<{rank}I", data, take(4 * rank))
        n = int(np.prod(shape)) if rank else 1
        values = np.frombuffer(data, dtype="<f4", count=n, offset=take(4 * n)).reshape(shape)
        if name.startswith("state."):
            key = name[len("state."):]
            target = model.state.get(key)
            if target is None or target.shape != values.shape:
                raise CheckpointShapeMismatch(f"{path}: unexpected state tensor {name!r}")
            model.state[key] = values.astype(dtype)
        else:
            target = model.params.get(name)
            if target is None or target.shape != values.shape:
                raise CheckpointShapeMismatch(
                    f"{path}: tensor {name!r} with shape {values.shape} "
                    "does not match the model config"
                )
            model.params[name] = Tensor(values.astype(dtype), requires_grad=True)
        loaded += 1
    expected = len(model.params) + len(model.state)
    if loaded != expected:
        raise CheckpointShapeMismatch(
            f"{path}: checkpoint holds {loaded} tensors, model needs {expected}"
        )
    return model
