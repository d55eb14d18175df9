"""
Error Hierarchy
===============
Exceptions raised across the regulator toolkit.

Every class derives from a builtin (ValueError or RuntimeError) so callers
that only know the builtins keep working. The CLI maps the families below to
exit codes:

    ParseError, OSError                          -> 1
    PreconditionError, DimensionError,
    ValidationError, RangeError, ValueError      -> 2
    SynthesisError, NumericalError, LinAlgError  -> 3
"""

from typing import Optional

import numpy as np


class RegulatorError(Exception):
    """Base mixin for all toolkit errors."""


class DimensionError(RegulatorError, ValueError):
    """Matrix shapes do not fit together."""


class ValidationError(RegulatorError, ValueError):
    """A value object violates its invariants (e.g. duplicate frequencies)."""


class RangeError(RegulatorError, ValueError):
    """A requested window or index lies outside the available data."""


class ParseError(RegulatorError, ValueError):
    """A configuration or artifact file could not be decoded."""

    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class PreconditionError(RegulatorError, ValueError):
    """Inputs do not meet the preconditions of a synthesis routine."""


class SurjectivityError(PreconditionError):
    """P(iω_k) lacks full row rank at some frequency."""

    def __init__(self, message: str, frequency_index: int):
        self.frequency_index = frequency_index
        super().__init__(message)


class ShapeError(PreconditionError):
    """The plant has the wrong input/output dimensions for the family."""


class FeedbackIllPosedError(PreconditionError):
    """I - D K is singular, so the feedback interconnection is undefined."""


class ClassValidationError(PreconditionError):
    """A member of a perturbation class fails a required invertibility."""

    def __init__(self, message: str, member: int, frequency_index: int):
        self.member = member
        self.frequency_index = frequency_index
        super().__init__(message)


class NumericalError(RegulatorError, RuntimeError):
    """A numerical kernel failed (non-convergence, overflow, non-finite data)."""


class SingularityError(NumericalError):
    """A linear operator that must be invertible is (numerically) singular."""


class ResolventSingularityError(SingularityError):
    """λ lies (numerically) in the spectrum of A."""

    def __init__(self, message: str, frequency_index: Optional[int] = None):
        self.frequency_index = frequency_index
        super().__init__(message)


class SynthesisError(RegulatorError, RuntimeError):
    """A gain or controller could not be synthesized."""


class UnstabilizableError(SynthesisError):
    """(A, B) has an uncontrollable mode in the closed right half-plane."""

    def __init__(self, message: str, modes=()):
        self.modes = list(modes)
        super().__init__(message)


class UndetectableError(SynthesisError):
    """(C, A) has an unobservable mode in the closed right half-plane."""

    def __init__(self, message: str, modes=()):
        self.modes = list(modes)
        super().__init__(message)


class SearchFailureError(SynthesisError):
    """No stabilizing ε was found on the search grid."""


class NumericalRankAlert(SynthesisError):
    """A pair that is stabilizable in exact arithmetic failed numerically."""


# Exit codes used by scripts/run_regulator.py
EXIT_OK = 0
EXIT_IO = 1
EXIT_PRECONDITION = 2
EXIT_FAILURE = 3


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(exc, (ParseError, OSError)):
        return EXIT_IO
    if isinstance(exc, (SynthesisError, NumericalError, np.linalg.LinAlgError)):
        return EXIT_FAILURE
    # plain ValueError covers invalid config values such as a rank tolerance outside [0, 1)
    if isinstance(exc, (PreconditionError, DimensionError, ValidationError, RangeError, ValueError)):
        return EXIT_PRECONDITION
    return EXIT_FAILURE
