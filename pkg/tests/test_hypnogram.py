"""Hypnogram parsing: TAL bytes, text tables, and the stage label map."""
import pytest

from sleepssl.errors import OverlappingEntries, UnparsableAnnotation
from sleepssl.hypnogram import HypnogramEntry, StageLabel, map_stage, parse_hypnogram


def test_tal_single_entry():
    entries = parse_hypnogram(b"+0\x1530\x14Sleep stage 1\x14\x00")
    assert entries == [HypnogramEntry(0.0, 30.0, StageLabel.N1)]


def test_tal_entry_with_stray_text_separator():
    # Tolerated writer quirk: a text separator slipped in before the duration.
    entries = parse_hypnogram(b"+0\x15\x1430\x14Sleep stage 1\x14\x00")
    assert entries == [HypnogramEntry(0.0, 30.0, StageLabel.N1)]


def test_tal_multiple_entries_sorted():
    raw = (
        b"+60\x1530\x14Sleep stage 2\x14\x00"
        b"+0\x1560\x14Sleep stage W\x14\x00"
        b"+90\x1530\x14Sleep stage R\x14\x00"
    )
    entries = parse_hypnogram(raw)
    assert [e.onset_s for e in entries] == [0.0, 60.0, 90.0]
    assert [e.stage for e in entries] == [StageLabel.W, StageLabel.N2, StageLabel.REM]


def test_tal_timekeeping_entry_skipped():
    # EDF+ records start with an empty-text timestamp TAL.
    entries = parse_hypnogram(b"+30\x14\x14\x00+30\x1530\x14Sleep stage 3\x14\x00")
    assert len(entries) == 1
    assert entries[0].stage is StageLabel.N3


def test_tal_unscored_text_kept_as_none():
    entries = parse_hypnogram(b"+0\x1530\x14Movement time\x14\x00")
    assert entries[0].stage is None


def test_tal_missing_sign_raises():
    with pytest.raises(UnparsableAnnotation):
        parse_hypnogram(b"0\x1530\x14Sleep stage W\x14\x00")


def test_tal_garbage_timing_raises():
    with pytest.raises(UnparsableAnnotation):
        parse_hypnogram(b"+x\x1530\x14Sleep stage W\x14\x00")


def test_stage_map_merges_rk_deep_sleep():
    assert map_stage("Sleep stage W") is StageLabel.W
    assert map_stage("Sleep stage 1") is StageLabel.N1
    assert map_stage("Sleep stage 2") is StageLabel.N2
    assert map_stage("Sleep stage 3") is StageLabel.N3
    assert map_stage("Sleep stage 4") is StageLabel.N3
    assert map_stage("Sleep stage R") is StageLabel.REM
    assert map_stage("Sleep stage ?") is None
    assert map_stage("Movement time") is None


def test_text_table_parse():
    entries = parse_hypnogram("# onset duration stage\n0 30 Sleep stage W\n30 30 Sleep stage 2\n")
    assert [e.stage for e in entries] == [StageLabel.W, StageLabel.N2]


def test_text_table_negative_duration_raises():
    with pytest.raises(UnparsableAnnotation):
        parse_hypnogram("0 -30 Sleep stage W\n")


def test_text_table_short_line_raises():
    with pytest.raises(UnparsableAnnotation):
        parse_hypnogram("0 30\n")


def test_overlapping_entries_raise():
    with pytest.raises(OverlappingEntries):
        parse_hypnogram("0 60 Sleep stage W\n30 30 Sleep stage 1\n")
