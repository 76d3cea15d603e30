"""Exception hierarchy.

Every error raised by the library derives from :class:`SmoothOddsError` so the
CLI can catch one type and still print an actionable message.
"""

from __future__ import annotations


class SmoothOddsError(Exception):
    """Base class for all library errors."""


class SchemaError(SmoothOddsError, ValueError):
    """A CSV schema mapping refers to a missing column or is malformed."""


class ParseError(SmoothOddsError, ValueError):
    """A data row could not be parsed."""

    def __init__(self, message: str, row: int | None = None, path: str | None = None):
        self.row = row
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        prefix = f"{':'.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ConfigError(SmoothOddsError, ValueError):
    """A generator or run configuration is invalid."""


class UnknownGroupError(SmoothOddsError, KeyError):
    def __str__(self) -> str:  # KeyError repr-quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class EmptyClassError(SmoothOddsError, ValueError):
    """A label class has zero total weight, so rates conditioned on it are undefined."""


class OrderingError(SmoothOddsError, ValueError):
    """Thresholds were given with t0 > t1."""


class NoSystemError(SmoothOddsError, ValueError):
    """The requested curve family has no constraint system (fixed randomisation)."""


class NoSolutionError(SmoothOddsError, ArithmeticError):
    """A linear system is inconsistent."""


class MonotonicityError(SmoothOddsError, ValueError):
    """The requested curve would not be monotone for the given probability."""


class NonDifferentiableError(SmoothOddsError, ValueError):
    """Derivative requested for a step rule."""


class InfeasibleTargetError(SmoothOddsError, ValueError):
    """The operating point lies outside a group's feasible region."""


class MissingRuleError(SmoothOddsError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""
