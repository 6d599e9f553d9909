"""Custom exceptions for the invasion risk pipeline."""

from typing import Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class InvasionRiskError(Exception):
    """Base exception for pipeline errors."""

    exit_code = EXIT_INTERNAL

    def __init__(
        self,
        message: str,
        source: Optional[str] = None,
        line: Optional[int] = None,
    ):
        self.message = message
        self.source = source
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        if self.source and self.line is not None:
            return f"{self.message} ({self.source}, line {self.line})"
        if self.source:
            return f"{self.message} ({self.source})"
        return self.message


class ConfigurationError(InvasionRiskError):
    """Configuration or validation error."""

    exit_code = EXIT_CONFIG


class DataError(InvasionRiskError):
    """Input data violates a domain rule."""

    exit_code = EXIT_DATA


class MalformedSeriesError(DataError):
    """Monthly series is missing, short or otherwise malformed."""

    pass


class EmptyDatasetError(DataError):
    """Operation needs at least one record."""

    pass


class DimensionError(DataError):
    """Vector or matrix shapes do not match."""

    pass


class AlignmentError(DataError):
    """Port orders or labels do not line up."""

    pass


class DomainError(DataError):
    """Argument outside its mathematical domain."""

    pass


class RegistryError(DataError):
    """Port identifier unknown to the registry."""

    pass


class RangeError(DataError):
    """Month index outside the available timeline."""

    pass


class OrderingError(DataError):
    """Records are not in the required order."""

    pass


class DataIntegrityError(DataError):
    """Records contradict each other."""

    pass


class DegenerateLabelError(DataError):
    """Labels contain a single class."""

    pass


class PathError(DataError):
    """Shipment path is not a valid port sequence."""

    pass


class AisDecodeError(DataError):
    """AIS sentence could not be decoded."""

    pass


class ChecksumError(AisDecodeError):
    """NMEA checksum mismatch."""

    pass


class UnsupportedSentenceError(AisDecodeError):
    """Sentence is not an AIVDM/AIVDO sentence."""

    pass


class NmeaParseError(AisDecodeError):
    """Malformed NMEA fields or truncated payload."""

    pass


class UnavailableFieldError(AisDecodeError):
    """Position report carries a 'not available' sentinel."""

    pass


class StorageError(InvasionRiskError):
    """Artifact storage operation error."""

    exit_code = EXIT_DATA


class IncompleteRunError(StorageError):
    """Artifacts of an earlier stage are missing."""

    pass


class StageError(InvasionRiskError):
    """Error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EXIT_INTERNAL)
        super().__init__(f"[{stage}] {cause}")
