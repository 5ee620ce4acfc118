"""Binary epoch-dataset cache (magic SSLDSET1).

Layout, all little-endian: 8-byte magic, uint32 epoch count, then per epoch:
EPOCH_LEN float32 samples, one int8 label (-1 = unlabeled), uint16 source_id
byte length, UTF-8 source_id.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .epochs import EPOCH_LEN, Epoch, EpochDataset
from .errors import CacheFormatError
from .hypnogram import StageLabel

MAGIC = b"SSLDSET1"


def save_dataset(dataset: EpochDataset, path: str | Path) -> None:
    path = Path(path)
    chunks = [MAGIC, struct.pack("<I", len(dataset.epochs))]
    for ep in dataset.epochs:
        sid = ep.source_id.encode("utf-8")
        label = -1 if ep.label is None else int(ep.label)
        chunks.append(ep.samples.astype("<f4").tobytes())
        chunks.append(struct.pack("<bH", label, len(sid)))
        chunks.append(sid)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(b"".join(chunks))
    tmp.replace(path)


def load_dataset(path: str | Path) -> EpochDataset:
    path = Path(path)
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise CacheFormatError(
            f"{path}: expected magic {MAGIC!r}, found {data[:8]!r}"
        )
    (count,) = struct.unpack_from("<I", data, 8)
    pos = 12
    sample_bytes = EPOCH_LEN * 4
    epochs: list[Epoch] = []
    for _ in range(count):
        if pos + sample_bytes + 3 > len(data):
            raise CacheFormatError(f"{path}: truncated at epoch {len(epochs)}")
        samples = np.frombuffer(data, dtype="<f4", count=EPOCH_LEN, offset=pos).copy()
        pos += sample_bytes
        label_raw, sid_len = struct.unpack_from("<bH", data, pos)
        pos += 3
        if pos + sid_len > len(data):
            raise CacheFormatError(f"{path}: truncated source_id at epoch {len(epochs)}")
        sid = data[pos : pos + sid_len].decode("utf-8")
        pos += sid_len
        label = None if label_raw < 0 else StageLabel(label_raw)
        epochs.append(Epoch(samples, label, sid))
    return EpochDataset(epochs, provenance=[str(path)])
