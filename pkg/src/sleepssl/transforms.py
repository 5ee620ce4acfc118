"""Stochastic signal transformations generating contrastive view pairs.

Seven transforms: time warp, gaussian noise, horizontal flip, permutation,
cutout&resize, crop&resize, average filter (plus identity). All map a
length-L signal to length L and draw randomness only from the generator
passed in, so a (seed, stream id) pair replays bitwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .epochs import resample
from .errors import ConfigError, InputTooShort

# Sampling ranges (inclusive) for segment counts when the spec leaves them free.
_SEGMENT_RANGES = {
    "time_warp": (4, 8),
    "permutation": (4, 8),
    "cutout_resize": (3, 6),
    "crop_resize": (2, 4),
}
MIN_SEGMENT = 8

KINDS = (
    "time_warp",
    "gaussian_noise",
    "horizontal_flip",
    "permutation",
    "cutout_resize",
    "crop_resize",
    "average_filter",
    "identity",
)


@dataclass(frozen=True)
class TransformSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown transform kind {self.kind!r}; known: {KINDS}")

    def param(self, name, default):
        return self.params.get(name, default)


@dataclass(frozen=True)
class RngStream:
    """Counter-based source of independent generators: (seed, ids) -> stream."""

    seed: int

    def generator(self, *stream_id: int) -> np.random.Generator:
        return np.random.default_rng([self.seed & 0xFFFFFFFFFFFFFFFF, *stream_id])


def _segment_count(spec: TransformSpec, rng: np.random.Generator) -> int:
    pinned = spec.param("num_segments", None)
    if pinned is not None:
        return int(pinned)
    lo, hi = _SEGMENT_RANGES[spec.kind]
    return int(rng.integers(lo, hi + 1))


def _split_points(length: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n-1 sorted interior cut indices with every segment >= MIN_SEGMENT."""
    if n < 1:
        raise InputTooShort(f"segment count must be >= 1, got {n}")
    if length < 2 * n:
        raise InputTooShort(f"length {length} too short for {n} segments")
    min_seg = min(MIN_SEGMENT, length // (2 * n))
    min_seg = max(min_seg, 1)
    slack = length - n * min_seg
    offsets = np.sort(rng.integers(0, slack + 1, size=n - 1))
    return offsets + min_seg * np.arange(1, n)


def _segments(x: np.ndarray, cuts: np.ndarray) -> list[np.ndarray]:
    return np.split(x, cuts)


def time_warp(x: np.ndarray, spec: TransformSpec, rng: np.random.Generator) -> np.ndarray:
    lo, hi = spec.param("scale_range", (0.25, 4.0))
    n = _segment_count(spec, rng)
    cuts = _split_points(x.size, n, rng)
    warped = []
    for seg in _segments(x, cuts):
        omega = rng.uniform(lo, hi)
        new_len = max(2, int(round(seg.size * omega)))
        warped.append(seg if new_len == seg.size else resample(seg, new_len))
    return resample(np.concatenate(warped), x.size)


def gaussian_noise(x: np.ndarray, spec: TransformSpec, rng: np.random.Generator) -> np.ndarray:
    mu = spec.param("mu", 0.0)
    sigma = spec.param("sigma_ratio", 0.1) * float(np.std(x))
    if sigma == 0.0 and mu == 0.0:
        return x.copy()
    return x + rng.normal(mu, sigma, size=x.size)


def horizontal_flip(x: np.ndarray, spec: TransformSpec | None = None,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    return x[::-1].copy()


def permutation(x: np.ndarray, spec: TransformSpec, rng: np.random.Generator) -> np.ndarray:
    n = _segment_count(spec, rng)
    cuts = _split_points(x.size, n, rng)
    order = rng.permutation(n)
    segs = _segments(x, cuts)
    return np.concatenate([segs[i] for i in order])


def cutout_resize(x: np.ndarray, spec: TransformSpec, rng: np.random.Generator) -> np.ndarray:
    n = _segment_count(spec, rng)
    if n < 2:
        raise InputTooShort("cutout needs at least 2 segments")
    cuts = _split_points(x.size, n, rng)
    drop = int(rng.integers(n))
    segs = [s for i, s in enumerate(_segments(x, cuts)) if i != drop]
    return resample(np.concatenate(segs), x.size)


def crop_resize(x: np.ndarray, spec: TransformSpec, rng: np.random.Generator) -> np.ndarray:
    n = _segment_count(spec, rng)
    if n == 1:
        return resample(x, x.size)
    cuts = _split_points(x.size, n, rng)
    keep = int(rng.integers(n))
    return resample(_segments(x, cuts)[keep], x.size)


def average_filter(x: np.ndarray, spec: TransformSpec, rng: np.random.Generator) -> np.ndarray:
    k_lo, k_hi = spec.param("k_range", (3, 10))
    k = int(rng.integers(k_lo, k_hi + 1))
    # Forward window mean; the tail is padded by replicating the last sample.
    padded = np.concatenate([x, np.full(k - 1, x[-1])])
    return np.convolve(padded, np.full(k, 1.0 / k), mode="valid")


def identity(x: np.ndarray, spec: TransformSpec | None = None,
             rng: np.random.Generator | None = None) -> np.ndarray:
    return x.copy()


_TRANSFORMS = {
    "time_warp": time_warp,
    "gaussian_noise": gaussian_noise,
    "horizontal_flip": horizontal_flip,
    "permutation": permutation,
    "cutout_resize": cutout_resize,
    "crop_resize": crop_resize,
    "average_filter": average_filter,
    "identity": identity,
}


def apply_transform(x: np.ndarray, spec: TransformSpec, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputTooShort(f"transforms expect 1-D input, got shape {x.shape}")
    out = _TRANSFORMS[spec.kind](x, spec, rng)
    assert out.size == x.size
    return out


def make_view_pair(
    x: np.ndarray,
    t1: TransformSpec,
    t2: TransformSpec,
    rng: RngStream,
    epoch_index: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Produce the two transformed views of one epoch with independent draws."""
    view1 = apply_transform(x, t1, rng.generator(epoch_index, 0))
    view2 = apply_transform(x, t2, rng.generator(epoch_index, 1))
    return view1, view2
