"""Exception types shared across the package."""


class WeaklabError(Exception):
    """Base class for all errors raised by this package."""


class LayoutError(WeaklabError):
    """Dimensions of interacting objects are inconsistent."""


class TagError(WeaklabError):
    """An operator does not satisfy a structure tag required here."""


class DomainError(WeaklabError):
    """An argument lies outside the mathematical domain of an operation."""


class ProtocolError(WeaklabError):
    """A protocol precondition (coupling normalization, meter setup) fails."""


class UndefinedWeakValueError(WeaklabError):
    """Postselection state orthogonal to the prepared state; no limit exists."""


class DegeneratePostselectionError(WeaklabError):
    """Postselection succeeds with (numerically) zero probability."""


class GridSupportError(WeaklabError):
    """A meter function carries non-negligible mass near the grid boundary."""


class ResolutionError(WeaklabError):
    """A binned-position resolution cannot be built on the given grid."""


class EmptyConditionalError(WeaklabError):
    """No simulated trial survived postselection; conditional mean undefined."""


class TrialCapError(WeaklabError):
    """A trial budget was exhausted before the requested precision."""


class ScenarioParseError(WeaklabError):
    """A scenario file could not be parsed; carries the offending field."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        detail = message
        if field is not None:
            detail = f"field '{field}': {detail}"
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)
        self.line = line
        self.field = field
