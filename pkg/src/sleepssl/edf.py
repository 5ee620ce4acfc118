"""EDF/EDF+ reader.

EDF layout: a 256-byte fixed-width ASCII header, 256 more bytes per channel,
then data records of 16-bit little-endian signed samples, channel-interleaved
within each record.
"""
from __future__ import annotations

import datetime
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCalibration, MalformedHeader, TruncatedFile

ANNOTATION_LABEL = "EDF Annotations"


@dataclass(frozen=True)
class ChannelSpec:
    label: str
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int
    samples_per_record: int
    physical_dimension: str = ""

    @property
    def is_annotation(self) -> bool:
        return self.label == ANNOTATION_LABEL

    def to_physical(self, digital: np.ndarray) -> np.ndarray:
        """Map raw digital samples to physical units (affine calibration)."""
        if self.digital_min == self.digital_max:
            raise DegenerateCalibration(
                f"channel {self.label!r}: digital_min == digital_max == {self.digital_min}"
            )
        gain = (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)
        return self.physical_min + (digital.astype(np.float64) - self.digital_min) * gain


@dataclass(frozen=True)
class EdfHeader:
    version: str
    patient_info: str
    recording_info: str
    start_datetime: datetime.datetime | None
    header_bytes: int
    num_data_records: int
    record_duration_s: float
    channels: tuple[ChannelSpec, ...]

    def channel_index(self, label: str) -> int:
        for i, ch in enumerate(self.channels):
            if ch.label == label:
                return i
        raise KeyError(label)

    def sampling_rate(self, channel: int) -> float:
        if self.record_duration_s <= 0:
            raise MalformedHeader("record duration is zero for a signal channel")
        return self.channels[channel].samples_per_record / self.record_duration_s


def _ascii_int(raw: bytes, what: str) -> int:
    text = raw.decode("ascii", errors="replace").strip()
    try:
        return int(text)
    except ValueError:
        raise MalformedHeader(f"non-integer {what} field: {text!r}") from None


def _ascii_float(raw: bytes, what: str) -> float:
    text = raw.decode("ascii", errors="replace").strip()
    try:
        return float(text)
    except ValueError:
        raise MalformedHeader(f"non-numeric {what} field: {text!r}") from None


def _parse_start(date_raw: bytes, time_raw: bytes) -> datetime.datetime | None:
    date = date_raw.decode("ascii", errors="replace").strip()
    time = time_raw.decode("ascii", errors="replace").strip()
    try:
        day, month, year = (int(p) for p in date.split("."))
        hh, mm, ss = (int(p) for p in time.split("."))
    except ValueError:
        return None
    # EDF+ clipping rule for two-digit years.
    year += 2000 if year < 85 else 1900
    try:
        return datetime.datetime(year, month, day, hh, mm, ss)
    except ValueError:
        return None


def parse_header(data: bytes) -> EdfHeader:
    if len(data) < 256:
        raise TruncatedFile(f"file has {len(data)} bytes, EDF header needs 256")
    version = data[0:8].decode("ascii", errors="replace").strip()
    patient = data[8:88].decode("ascii", errors="replace").strip()
    recording = data[88:168].decode("ascii", errors="replace").strip()
    start = _parse_start(data[168:176], data[176:184])
    header_bytes = _ascii_int(data[184:192], "header bytes")
    num_records = _ascii_int(data[236:244], "number of data records")
    duration = _ascii_float(data[244:252], "record duration")
    ns = _ascii_int(data[252:256], "channel count")
    if ns < 1:
        raise MalformedHeader(f"channel count must be >= 1, got {ns}")
    if header_bytes != 256 + 256 * ns:
        raise MalformedHeader(
            f"header byte count {header_bytes} inconsistent with {ns} channels"
        )
    if len(data) < header_bytes:
        raise TruncatedFile(
            f"file has {len(data)} bytes, header promises {header_bytes}"
        )

    def field(offset: int, width: int, i: int) -> bytes:
        base = 256 + offset * ns + width * i
        return data[base : base + width]

    channels = []
    for i in range(ns):
        label = field(0, 16, i).decode("ascii", errors="replace").strip()
        phys_dim = field(96, 8, i).decode("ascii", errors="replace").strip()
        channels.append(
            ChannelSpec(
                label=label,
                physical_dimension=phys_dim,
                physical_min=_ascii_float(field(104, 8, i), f"physical_min[{i}]"),
                physical_max=_ascii_float(field(112, 8, i), f"physical_max[{i}]"),
                digital_min=_ascii_int(field(120, 8, i), f"digital_min[{i}]"),
                digital_max=_ascii_int(field(128, 8, i), f"digital_max[{i}]"),
                samples_per_record=_ascii_int(field(216, 8, i), f"samples_per_record[{i}]"),
            )
        )
    return EdfHeader(
        version=version,
        patient_info=patient,
        recording_info=recording,
        start_datetime=start,
        header_bytes=header_bytes,
        num_data_records=num_records,
        record_duration_s=duration,
        channels=tuple(channels),
    )


def _read_raw_records(data: bytes, header: EdfHeader) -> np.ndarray:
    """Return raw int16 samples shaped (records, samples_per_record_total)."""
    per_record = sum(ch.samples_per_record for ch in header.channels)
    record_bytes = per_record * 2
    payload = data[header.header_bytes :]
    n_records = header.num_data_records
    if n_records == -1:
        # Unknown record count: read whole records to end of file.
        n_records = len(payload) // record_bytes
    if len(payload) < n_records * record_bytes:
        raise TruncatedFile(
            f"payload holds {len(payload)} bytes, "
            f"{n_records} records need {n_records * record_bytes}"
        )
    raw = np.frombuffer(payload, dtype="<i2", count=n_records * per_record)
    return raw.reshape(n_records, per_record)


def parse_edf(data: bytes) -> tuple[EdfHeader, list[np.ndarray]]:
    """Parse an EDF byte string into its header and per-channel physical signals.

    Annotation channels come back as empty arrays; use
    :func:`read_annotation_bytes` to get their TAL payload.
    """
    header = parse_header(data)
    raw = _read_raw_records(data, header)
    signals: list[np.ndarray] = []
    offset = 0
    for ch in header.channels:
        block = raw[:, offset : offset + ch.samples_per_record]
        offset += ch.samples_per_record
        if ch.is_annotation:
            signals.append(np.empty(0, dtype=np.float64))
        else:
            signals.append(ch.to_physical(block.reshape(-1)))
    return header, signals


def read_annotation_bytes(data: bytes, header: EdfHeader | None = None) -> bytes:
    """Extract the concatenated byte payload of the 'EDF Annotations' channel."""
    if header is None:
        header = parse_header(data)
    raw = _read_raw_records(data, header)
    offset = 0
    for ch in header.channels:
        if ch.is_annotation:
            block = raw[:, offset : offset + ch.samples_per_record]
            return block.astype("<i2").tobytes()
        offset += ch.samples_per_record
    return b""
