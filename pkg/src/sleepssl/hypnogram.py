"""Sleep stage labels and hypnogram parsing (EDF+ TAL or plain text)."""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import OverlappingEntries, UnparsableAnnotation


class StageLabel(enum.IntEnum):
    W = 0
    N1 = 1
    N2 = 2
    N3 = 3
    REM = 4


# Annotation text -> label. R&K stages 3 and 4 are merged into N3; anything
# not listed here (movement time, unknown, apnea events, ...) is unscored.
_STAGE_MAP = {
    "Sleep stage W": StageLabel.W,
    "Sleep stage 1": StageLabel.N1,
    "Sleep stage 2": StageLabel.N2,
    "Sleep stage 3": StageLabel.N3,
    "Sleep stage 4": StageLabel.N3,
    "Sleep stage R": StageLabel.REM,
}


def map_stage(stage_string: str) -> StageLabel | None:
    """Map an annotation string to a stage label, or None if unscored."""
    return _STAGE_MAP.get(stage_string.strip())


@dataclass(frozen=True)
class HypnogramEntry:
    onset_s: float
    duration_s: float
    stage: StageLabel | None

    @property
    def end_s(self) -> float:
        return self.onset_s + self.duration_s


def _finish(entries: list[HypnogramEntry]) -> list[HypnogramEntry]:
    entries.sort(key=lambda e: e.onset_s)
    for a, b in zip(entries, entries[1:]):
        if b.onset_s < a.end_s - 1e-9:
            raise OverlappingEntries(
                f"entry at {b.onset_s}s overlaps entry [{a.onset_s}, {a.end_s})s"
            )
    return entries


def _parse_tal(data: bytes) -> list[HypnogramEntry]:
    entries: list[HypnogramEntry] = []
    for tal in data.split(b"\x00"):
        if not tal:
            continue
        fields = tal.split(b"\x14")
        if len(fields) < 2 or fields[-1] != b"":
            raise UnparsableAnnotation(f"malformed TAL: {tal!r}")
        timing, texts = fields[0], fields[1:-1]
        if not timing.startswith((b"+", b"-")):
            raise UnparsableAnnotation(f"TAL onset must start with +/-: {timing!r}")
        parts = timing.split(b"\x15")
        duration_text = parts[1] if len(parts) > 1 else b"0"
        if len(parts) > 1 and not duration_text and texts:
            # Some writers slip a stray text separator in between the duration
            # separator and the duration digits; recover from the next field.
            duration_text, texts = texts[0], texts[1:]
        try:
            onset = float(parts[0])
            duration = float(duration_text) if duration_text else 0.0
        except ValueError:
            raise UnparsableAnnotation(f"bad TAL timing: {timing!r}") from None
        for text in texts:
            label = text.decode("utf-8", errors="replace").strip()
            if not label:
                continue  # timekeeping TAL
            entries.append(HypnogramEntry(onset, duration, map_stage(label)))
    return entries


def _parse_text(text: str) -> list[HypnogramEntry]:
    entries: list[HypnogramEntry] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) < 3:
            raise UnparsableAnnotation(f"line {lineno}: expected 'onset duration stage'")
        try:
            onset, duration = float(parts[0]), float(parts[1])
        except ValueError:
            raise UnparsableAnnotation(f"line {lineno}: non-numeric onset/duration") from None
        if onset < 0 or duration < 0:
            raise UnparsableAnnotation(f"line {lineno}: negative onset/duration")
        entries.append(HypnogramEntry(onset, duration, map_stage(parts[2])))
    return entries


def parse_hypnogram(source: bytes | str) -> list[HypnogramEntry]:
    """Parse a hypnogram from EDF+ TAL bytes or a whitespace-separated table.

    Entries come back sorted by onset; overlaps are rejected.
    """
    if isinstance(source, bytes):
        return _finish(_parse_tal(source))
    return _finish(_parse_text(source))
