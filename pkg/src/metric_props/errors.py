"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MetricPropsError(Exception):
    """Base class for every error raised by metric_props."""


class ShapeError(MetricPropsError, ValueError):
    """Input array has the wrong shape (e.g. a non-square distance matrix)."""


class ParameterError(MetricPropsError, ValueError):
    """An argument is outside its allowed range."""


class CapacityError(MetricPropsError, ValueError):
    """A requested space would exceed the configured size cap or point supply."""


class PreconditionError(MetricPropsError, ValueError):
    """The hypothesis of an analysis does not hold for the given inputs."""


class CompletionError(MetricPropsError):
    """Shortest-path completion impossible; carries the disconnected components."""

    def __init__(self, message: str, components: list[list[int]] | None = None):
        super().__init__(message)
        self.components = components or []


class InfeasibleError(MetricPropsError):
    """Frozen entries of an extension problem admit no metric completion."""


class ValidationError(MetricPropsError, ValueError):
    """A distance matrix failed metric validation."""

    def __init__(self, message: str, defects=None):
        super().__init__(message)
        self.defects = list(defects or [])


class ParseError(MetricPropsError, ValueError):
    """A space file could not be parsed."""

    def __init__(self, message: str, line: int | None = None, field: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


class OracleMismatchError(MetricPropsError, AssertionError):
    """The fast and brute-force strategies disagreed on whether a property holds."""
