import json
import logging

from django.core.management.base import CommandError

logger = logging.getLogger(__name__)


class ForecastError(Exception):
    """Base class for every expected failure of the forecasting toolkit."""

    code = "ForecastError"


# Ingestion and preprocessing
class DatasetNotFoundError(ForecastError):
    code = "DatasetNotFound"


class EmptyDatasetError(ForecastError):
    code = "EmptyDataset"


class MissingColumnError(ForecastError):
    code = "MissingColumn"


class MalformedTimestampError(ForecastError):
    code = "MalformedTimestamp"

    def __init__(self, row_index, value):
        self.row_index = row_index
        self.value = value
        super().__init__(f"Row {row_index}: cannot parse datetime {value!r}")


class MalformedValueError(ForecastError):
    code = "MalformedValue"

    def __init__(self, row_index, column, value):
        self.row_index = row_index
        self.column = column
        self.value = value
        super().__init__(f"Row {row_index}: column {column!r} is not a decimal number: {value!r}")


class AllMissingColumnError(ForecastError):
    code = "AllMissingColumn"

    def __init__(self, column):
        self.column = column
        super().__init__(f"Variable {column!r} has no observed value")


class InvalidRatioError(ForecastError):
    code = "InvalidRatio"


class TooFewSamplesError(ForecastError):
    code = "TooFewSamples"


# Feature engineering
class NonPositiveLagError(ForecastError):
    code = "NonPositiveLag"


class LagOutOfRangeError(ForecastError):
    code = "LagOutOfRange"


class WindowTooSmallError(ForecastError):
    code = "WindowTooSmall"


class InsufficientHistoryError(ForecastError):
    code = "InsufficientHistory"


class SeriesTooShortError(InsufficientHistoryError):
    code = "SeriesTooShort"


class EmptyMatrixError(ForecastError):
    code = "EmptyMatrix"


class TooFewRowsError(ForecastError):
    code = "TooFewRows"


# Metrics
class EmptyInputError(ForecastError):
    code = "EmptyInput"


class LengthMismatchError(ForecastError):
    code = "LengthMismatch"


# Models
class InvalidParameterError(ForecastError):
    code = "InvalidParameter"


class UnknownFamilyError(ForecastError):
    code = "UnknownFamily"


class EmptyGridError(ForecastError):
    code = "EmptyGrid"


class TargetCountMismatchError(ForecastError):
    code = "TargetCountMismatch"


class EmptyDataError(ForecastError):
    code = "EmptyData"


class FeatureCountMismatchError(ForecastError):
    code = "FeatureCountMismatch"


class DimensionMismatchError(ForecastError):
    code = "DimensionMismatch"


class ShapeMismatchError(ForecastError):
    code = "ShapeMismatch"


class KernelTooLargeError(ForecastError):
    code = "KernelTooLarge"


class DivergedLossError(ForecastError):
    code = "DivergedLoss"


# Run outputs
class VersionMismatchError(ForecastError):
    code = "VersionMismatch"


class MissingRunOutputError(ForecastError):
    code = "MissingRunOutput"


def error_payload(exc):
    """
    Build the machine-readable error document for a failure.

    Expected failures report their stable code; anything else is logged with its
    traceback and reported as an unexpected error.
    """
    if isinstance(exc, ForecastError):
        return {"error": exc.code, "detail": str(exc)}

    logger.exception("Unhandled exception occurred", exc_info=exc)
    return {"error": str(exc), "detail": "An unexpected error occurred"}


def command_error(exc):
    """Wrap a failure into a CommandError whose message is a single JSON line."""
    return CommandError(json.dumps(error_payload(exc), sort_keys=True), returncode=2)
