"""Shared fixtures: hand-built EDF files and small synthetic datasets."""
from __future__ import annotations

import numpy as np
import pytest

from sleepssl.synth import make_synthetic_dataset


def _pad(text: str, width: int) -> bytes:
    raw = text.encode("ascii")
    if len(raw) > width:
        raise ValueError(f"field {text!r} wider than {width}")
    return raw.ljust(width)


def build_edf(
    channels: list[dict],
    records: list[list[np.ndarray]],
    *,
    num_records_field: int | None = None,
    duration_s: float = 30.0,
    header_bytes: int | None = None,
    start_date: str = "02.01.24",
    start_time: str = "23.00.00",
) -> bytes:
    """Assemble a syntactically valid EDF byte string from channel dicts.

    ``channels`` entries may carry label / physical_min / physical_max /
    digital_min / digital_max / samples keys; ``records`` is a list of
    per-record lists of int16 sample arrays, one per channel.
    """
    ns = len(channels)
    specs = []
    for ch in channels:
        specs.append(
            {
                "label": ch.get("label", "EEG Fpz-Cz"),
                "transducer": "",
                "dim": ch.get("dim", "uV"),
                "physical_min": ch.get("physical_min", -250.0),
                "physical_max": ch.get("physical_max", 250.0),
                "digital_min": ch.get("digital_min", -32768),
                "digital_max": ch.get("digital_max", 32767),
                "prefiltering": "",
                "samples": ch["samples"],
            }
        )

    head = b"".join(
        [
            _pad("0", 8),
            _pad("test patient", 80),
            _pad("test recording", 80),
            _pad(start_date, 8),
            _pad(start_time, 8),
            _pad(str(header_bytes if header_bytes is not None else 256 + 256 * ns), 8),
            _pad("", 44),
            _pad(str(len(records) if num_records_field is None else num_records_field), 8),
            _pad(_format_number(duration_s), 8),
            _pad(str(ns), 4),
        ]
    )
    per_signal = [
        (16, "label"),
        (80, "transducer"),
        (8, "dim"),
        (8, "physical_min"),
        (8, "physical_max"),
        (8, "digital_min"),
        (8, "digital_max"),
        (80, "prefiltering"),
        (8, "samples"),
        (32, None),
    ]
    for width, key in per_signal:
        for spec in specs:
            value = "" if key is None else spec[key]
            if isinstance(value, float):
                value = _format_number(value)
            head += _pad(str(value), width)

    body = b""
    for record in records:
        assert len(record) == ns
        for spec, samples in zip(specs, record):
            arr = np.asarray(samples, dtype="<i2")
            assert arr.size == spec["samples"], "record size must match header"
            body += arr.tobytes()
    return head + body


def _format_number(value: float) -> str:
    text = f"{value:.8g}"
    return text[:8]


def annotation_samples(tal: bytes, samples_per_record: int) -> np.ndarray:
    """Pack TAL bytes into the int16 samples of an annotation channel."""
    raw = tal.ljust(2 * samples_per_record, b"\x00")
    if len(raw) > 2 * samples_per_record:
        raise ValueError("TAL payload does not fit the annotation channel")
    return np.frombuffer(raw, dtype="<i2").copy()


@pytest.fixture(scope="session")
def tiny_dataset():
    return make_synthetic_dataset(classes=5, per_class=8, seed=123)


@pytest.fixture(scope="session")
def small_dataset():
    return make_synthetic_dataset(classes=5, per_class=24, seed=321)
