#!/usr/bin/env python3
# SaddleKit - Error Hierarchy


class SaddleKitError(Exception):
    """Base class for every error raised by SaddleKit."""


# ----------------------------------------------------------------------
# Expression language


class ExprError(SaddleKitError):
    """Problem with the text of a payoff or domain expression."""


class ExprSyntaxError(ExprError):
    """
    Raised when expression text does not match the grammar.

    Carries the byte offset, the 1-based line/column and the set of tokens
    that would have been accepted at that point.
    """

    def __init__(self, message, text="", offset=0, expected=()):
        self.text = text
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        prefix = text[:offset]
        self.line = prefix.count("\n") + 1
        self.column = offset - (prefix.rfind("\n") + 1) + 1
        detail = f"{message} at line {self.line}, column {self.column}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifier(ExprSyntaxError):
    """Identifier is neither a game variable, a function nor a declared parameter."""


class EvaluationError(SaddleKitError):
    """Expression could not be evaluated to a finite real."""


class UnboundVariable(EvaluationError):
    """A variable occurring in the expression has no value."""

    def __init__(self, name):
        self.name = name
        super().__init__(f"Unbound variable: {name}")


class DomainError(EvaluationError):
    """log/sqrt/power applied outside its real domain."""


class DivisionByZero(DomainError):
    """Division (or negative power) of zero."""


class EvaluationOverflow(EvaluationError):
    """
    Result magnitude exceeds the finite float range.

    ``sign`` is +1 or -1 when the direction of the overflow is known, 0 otherwise.
    """

    def __init__(self, message, sign=0):
        self.sign = sign
        super().__init__(message)


# ----------------------------------------------------------------------
# Numerical engines


class NonNormalized(SaddleKitError):
    """A mixed strategy violates its normalization or support invariant."""


class BudgetExhausted(SaddleKitError):
    """
    A search, series or refinement loop ran out of budget before deciding.

    ``best`` holds the best partial result (a bound, a certificate, ...).
    """

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class NumericalFailure(SaddleKitError):
    """The LP residual could not be driven below tolerance."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class DimensionMismatch(SaddleKitError):
    """Vector length does not match the matrix side it is paired with."""


class CoercivityUnavailable(SaddleKitError):
    """No anchor makes the payoff coercive along a noncompact action set."""

    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class LambdaTooSmall(SaddleKitError):
    """The level set {a : c(a, b0) <= lambda} is empty over the probe range."""


class OutOfConstraint(SaddleKitError):
    """An action lies outside the constraint set of its player."""


class EmptyCluster(SaddleKitError):
    """A strategy-cluster list handed to a set distance is empty."""


class StructuralViolation(SaddleKitError):
    """A game family fails the bounded-below / bounded-above probes."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class AssumptionRefuted(SaddleKitError):
    """An assumption required by the selected diagnostics profile was refuted."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


# ----------------------------------------------------------------------
# Command line


class GameFileError(SaddleKitError):
    """Malformed game file."""


class UsageError(SaddleKitError):
    """Bad command-line usage."""
