"""Semantic exception hierarchy.

Callers are expected to catch these by meaning, not by message. Anything that
indicates malformed caller input derives from :class:`InvalidInputError` (a
``ValueError``), so generic validation code keeps working. Failures of the
standing integrability assumptions are reported through flags on result objects
where the contract says so; :class:`AssumptionError` is raised only where an
operation cannot produce a meaningful result at all.
"""


class GLevyError(Exception):
    """Base class for all package errors."""


class InvalidInputError(GLevyError, ValueError):
    """Malformed argument: empty set, bad interval, inconsistent shapes."""


class EvaluationError(GLevyError):
    """A user-supplied function returned a non-finite or non-numeric value."""


class AssumptionError(GLevyError):
    """A standing precondition fails (for example v(A) = 0 where v(A) > 0 is required)."""


class UnsupportedError(GLevyError):
    """Well-formed input outside the implemented scope (for example d > 1 transport)."""


class PolicyError(InvalidInputError):
    """A control policy does not cover the horizon or leaves the admissible set."""


class NumericalAbortError(GLevyError):
    """A numerical run was refused or aborted (CFL violation, NaN contamination)."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(GLevyError):
    """A config document failed to parse or validate."""
