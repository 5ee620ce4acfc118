"""Synthetic labeled epochs for desk-scale experiments.

Each class scatters short oscillatory bursts over a noisy 30-s window, the
way sleep EEG carries transient graphoelements (spindles, K-complexes).
Fundamental frequencies are spread across roughly 2-28 Hz equivalents at the
3072-sample scale, and each class has its own burst morphology (sine, square,
sawtooth, impulse, amplitude-modulated). Because the bursts land at random
positions, class identity is carried by local waveform shape rather than by
global alignment or exact frequency, so it survives per-epoch normalization
as well as time-rescaling and segment-shuffling augmentations.
"""
from __future__ import annotations

import numpy as np

from .epochs import EPOCH_LEN, make_epoch, EpochDataset
from .hypnogram import StageLabel

WINDOW_SECONDS = 30.0


def _sine(cycles: np.ndarray) -> np.ndarray:
    return np.sin(2 * np.pi * cycles)


def _square(cycles: np.ndarray) -> np.ndarray:
    return np.sign(np.sin(2 * np.pi * cycles))


def _sawtooth(cycles: np.ndarray) -> np.ndarray:
    return 2.0 * (cycles % 1.0) - 1.0


def _impulses(cycles: np.ndarray) -> np.ndarray:
    offset = (cycles % 1.0) - 0.5
    return np.exp(-0.5 * (offset / 0.08) ** 2) * 2.5 - 0.5


def _am_sine(cycles: np.ndarray) -> np.ndarray:
    return np.sin(2 * np.pi * cycles) * np.sin(np.pi * cycles / 3.0)


_WAVEFORMS = (_sine, _square, _sawtooth, _impulses, _am_sine)
_CYCLES_PER_BURST = 4


def make_synthetic_dataset(
    classes: int = 5,
    per_class: int = 200,
    seed: int = 0,
    noise_sigma: float = 1.0,
    phase_jitter: float = 0.15,
    labeled: bool = True,
) -> EpochDataset:
    if not 1 <= classes <= len(_WAVEFORMS):
        raise ValueError(f"classes must be in 1..{len(_WAVEFORMS)}")
    rng = np.random.default_rng([seed, 0x5D5])
    freqs = np.linspace(2.0, 28.0, classes)  # Hz equivalents
    fs = EPOCH_LEN / WINDOW_SECONDS
    epochs = []
    for c in range(classes):
        wave = _WAVEFORMS[c]
        burst_len = int(np.clip(_CYCLES_PER_BURST / freqs[c] * fs, 48, 640))
        cycles_base = np.arange(burst_len) / burst_len * _CYCLES_PER_BURST
        envelope = np.hanning(burst_len)
        for i in range(per_class):
            signal = noise_sigma * rng.standard_normal(EPOCH_LEN)
            for _ in range(int(rng.integers(8, 14))):
                phase = rng.uniform(0.0, 1.0) * phase_jitter
                amp = 2.0 * (1.0 + rng.normal(0.0, 0.2))
                start = int(rng.integers(0, EPOCH_LEN - burst_len))
                burst = amp * envelope * wave(cycles_base + phase)
                signal[start : start + burst_len] += burst
            label = StageLabel(c) if labeled else None
            epochs.append(make_epoch(signal, label, f"synth:c{c}:{i}"))
    return EpochDataset(epochs, provenance=[f"synth(seed={seed})"])


def nearest_centroid_accuracy(train: EpochDataset, test: EpochDataset) -> float:
    """Sanity-floor classifier: assign each test epoch to the closest class mean."""
    labels = train.labels()
    signals = train.signal_matrix()
    present = sorted(set(labels[labels >= 0].tolist()))
    centroids = np.stack([signals[labels == c].mean(axis=0) for c in present])
    test_signals = test.signal_matrix()
    d2 = ((test_signals[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    predictions = np.array(present)[d2.argmin(axis=1)]
    return float((predictions == test.labels()).mean())
