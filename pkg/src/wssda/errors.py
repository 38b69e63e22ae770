"""Exception types raised by the library."""


class WSSDAError(Exception):
    """Base class for all library errors."""


class DataFormatError(WSSDAError):
    """A data file (CSV, PGM, pairs list) is malformed or inconsistent."""


class ModelFormatError(WSSDAError):
    """A serialized model file is corrupt, truncated, or of an unsupported version."""


class ProtocolError(WSSDAError):
    """An evaluation protocol cannot be realized on the given data (splits, folds, pairs)."""


class PartitionError(WSSDAError):
    """A subclass partition violates its contract (empty group, bad coverage)."""


class SpectrumError(WSSDAError):
    """An eigenspectrum is unusable for modeling (too short, flat, pivot at null space)."""


class ConfigError(WSSDAError):
    """An experiment configuration is invalid."""


class TrainingError(WSSDAError):
    """Training cannot proceed on the given data/configuration."""
