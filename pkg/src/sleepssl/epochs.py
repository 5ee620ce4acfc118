"""Epoch extraction: slicing recordings into fixed-length normalized windows."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .edf import EdfHeader
from .errors import ChannelNotFound, EmptyDataset, LengthTooShort
from .hypnogram import HypnogramEntry, StageLabel

EPOCH_LEN = 3072
TARGET_VARIANCE = 0.5


def resample(signal: np.ndarray, target_len: int) -> np.ndarray:
    """Linearly resample to target_len, preserving both endpoints."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.size < 2 or target_len < 2:
        raise LengthTooShort(
            f"resample needs length >= 2 on both sides, got {signal.size} -> {target_len}"
        )
    if signal.size == target_len:
        return signal.copy()
    grid = np.linspace(0.0, signal.size - 1, target_len)
    return np.interp(grid, np.arange(signal.size), signal)


def normalize(samples: np.ndarray) -> np.ndarray:
    """Shift/scale to mean 0 and variance 0.5 (population convention).

    Near-constant input (std < 1e-12) maps to all zeros.
    """
    samples = np.asarray(samples, dtype=np.float64)
    mean = samples.mean()
    std = samples.std()
    if std < 1e-12:
        return np.zeros_like(samples)
    return (samples - mean) / std * np.sqrt(TARGET_VARIANCE)


@dataclass(frozen=True)
class Epoch:
    samples: np.ndarray  # float32, length EPOCH_LEN
    label: StageLabel | None
    source_id: str

    def __post_init__(self):
        if self.samples.shape != (EPOCH_LEN,):
            raise LengthTooShort(
                f"epoch {self.source_id!r} has shape {self.samples.shape}, "
                f"expected ({EPOCH_LEN},)"
            )


@dataclass
class EpochDataset:
    epochs: list[Epoch]
    provenance: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def class_histogram(self) -> dict[StageLabel, int]:
        hist = {label: 0 for label in StageLabel}
        for ep in self.epochs:
            if ep.label is not None:
                hist[ep.label] += 1
        return hist

    def signal_matrix(self) -> np.ndarray:
        """All epochs stacked into an (n, EPOCH_LEN) float32 array."""
        return np.stack([ep.samples for ep in self.epochs])

    def labels(self) -> np.ndarray:
        """Labels as int8, -1 for unlabeled."""
        return np.array(
            [-1 if ep.label is None else int(ep.label) for ep in self.epochs],
            dtype=np.int8,
        )


def make_epoch(samples: np.ndarray, label: StageLabel | None, source_id: str) -> Epoch:
    """Resample to the canonical length, normalize, and wrap as an Epoch."""
    sig = resample(samples, EPOCH_LEN) if len(samples) != EPOCH_LEN else np.asarray(samples, np.float64)
    return Epoch(normalize(sig).astype(np.float32), label, source_id)


def extract_epochs(
    header: EdfHeader,
    signals: list[np.ndarray],
    hypnogram: list[HypnogramEntry],
    channel_label: str,
    epoch_seconds: float = 30.0,
    source_name: str = "",
) -> EpochDataset:
    """Slice one recording channel into labeled, normalized epochs.

    Each scored window of `epoch_seconds` becomes one epoch; unscored entries
    and windows running past the end of the signal are dropped.
    """
    try:
        ch = header.channel_index(channel_label)
    except KeyError:
        available = [c.label for c in header.channels]
        raise ChannelNotFound(
            f"channel {channel_label!r} not in {available}"
        ) from None
    fs = header.sampling_rate(ch)
    signal = signals[ch]
    window = int(round(epoch_seconds * fs))

    epochs: list[Epoch] = []
    index = 0
    for entry in hypnogram:
        if entry.stage is None or entry.duration_s <= 0:
            continue
        n_windows = int(entry.duration_s / epoch_seconds + 1e-9)
        for w in range(n_windows):
            start = int(round((entry.onset_s + w * epoch_seconds) * fs))
            if start + window > signal.size:
                continue
            source_id = f"{source_name}:{channel_label}:{index}"
            epochs.append(make_epoch(signal[start : start + window], entry.stage, source_id))
            index += 1
    if not epochs:
        raise EmptyDataset(f"no scored epochs extracted from {source_name!r}")
    return EpochDataset(epochs, provenance=[source_name])
