"""Exception hierarchy.  Every diagnostic may name the rule it violates."""
from __future__ import annotations


class GradiumError(Exception):
    """Base class.  ``rule`` names the violated typing or evaluation rule."""

    def __init__(self, message: str, rule: str | None = None):
        self.rule = rule
        super().__init__(f"{rule}: {message}" if rule else message)


class UserError(GradiumError):
    """Problems with the input program (exit status 1)."""


class Defect(GradiumError):
    """Failures that indicate a bug once input has been checked (exit status 3)."""


class AlgebraMismatch(UserError):
    pass


class GradeSyntaxError(UserError):
    pass


class NoJoin(UserError):
    pass


class ParseError(UserError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        super().__init__(f"{line}:{column}: {message}" if line else message, rule="parse")


class TypeCheckError(UserError):
    pass


class EffectBoundError(UserError):
    pass


class GradeViolation(UserError):
    """A coeffect side condition fails, statically or during evaluation."""


class RefusedAlgebra(UserError):
    pass


class StuckError(Defect):
    pass


class BudgetExceeded(Defect):
    pass


class JunkUse(Defect):
    """The resource evaluator tried to look up the junk value."""
