"""Exception hierarchy shared across the package."""


class SleepSslError(Exception):
    """Base class for all package-specific errors."""


# --- signal ingestion ---

class DataError(SleepSslError):
    """Base class for errors raised while reading or assembling data."""


class TruncatedFile(DataError):
    pass


class MalformedHeader(DataError):
    pass


class DegenerateCalibration(DataError):
    pass


class UnparsableAnnotation(DataError):
    pass


class OverlappingEntries(DataError):
    pass


class LengthTooShort(DataError):
    pass


class ChannelNotFound(DataError):
    pass


class EmptyDataset(DataError):
    pass


class CacheFormatError(DataError):
    pass


# --- transforms ---

class InputTooShort(SleepSslError):
    pass


# --- numerics ---

class NumericError(SleepSslError):
    """Base class for numeric-layer failures."""


class ShapeMismatch(NumericError):
    pass


class ZeroNormVector(NumericError):
    pass


class IndexOutOfRange(NumericError):
    pass


class CheckpointShapeMismatch(NumericError):
    pass


class CheckpointFormatError(NumericError):
    pass


# --- metrics / experiments ---

class LengthMismatch(SleepSslError):
    pass


class EmptyInput(SleepSslError):
    pass


class InsufficientClassSamples(SleepSslError):
    pass


# --- cli / config ---

class ConfigError(SleepSslError):
    pass
