"""Exception hierarchy.

Three families map onto the CLI exit codes: configuration problems (2),
bad or insufficient data (3) and numerical failures (4). Every class also
derives from ``ValueError`` so callers that do not care about the split can
catch the builtin.
"""


class WorkloadError(ValueError):
    exit_code = 1


class ConfigError(WorkloadError):
    exit_code = 2


class InvalidSpecError(ConfigError):
    """Filter, window or model parameters outside their valid domain."""


class DataError(WorkloadError):
    exit_code = 3


class ShapeError(DataError):
    pass


class SignalLengthError(DataError):
    pass


class RangeError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaError(DataError):
    pass


class InsufficientBeatsError(DataError):
    pass


class UnimputableColumnError(DataError):
    pass


class EmptyFeatureSetError(DataError):
    pass


class DegenerateLabelsError(DataError):
    pass


class StratificationError(DataError):
    pass


class UnsupportedSizeError(DataError):
    pass


class NumericalError(WorkloadError):
    exit_code = 4


class DegenerateBaselineError(NumericalError):
    pass


class LogDomainError(NumericalError):
    pass


class ScalerDegenerateError(NumericalError):
    pass


class UndefinedNormalizationError(NumericalError):
    pass


class EncodingError(NumericalError):
    pass
