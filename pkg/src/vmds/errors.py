"""Exception hierarchy shared by every vmds module."""

from __future__ import annotations


class VmdsError(Exception):
    """Base class for all errors raised by vmds."""


# --- algebra ---------------------------------------------------------------


class NotPrime(VmdsError, ValueError):
    def __init__(self, p: int) -> None:
        super().__init__(f"characteristic {p} is not prime")
        self.p = p


class OrderTooLarge(VmdsError, ValueError):
    pass


class DivideByZero(VmdsError, ZeroDivisionError):
    pass


class Singular(VmdsError, ArithmeticError):
    pass


class ShapeMismatch(VmdsError, ValueError):
    pass


class FieldMismatch(VmdsError, ValueError):
    pass


# --- model -----------------------------------------------------------------


class TooManyErasures(VmdsError, ValueError):
    pass


class NotMds(VmdsError, ValueError):
    pass


class ParseError(VmdsError, ValueError):
    """Malformed code document; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None) -> None:
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class InvariantViolation(VmdsError, ValueError):
    """Well-formed input that violates a code invariant.

    ``location`` names the offending object, e.g. ``(1, 1)`` for block C_{1,1}.
    """

    def __init__(self, message: str, location: object = None) -> None:
        super().__init__(message if location is None else f"{message} at {location}")
        self.location = location


# --- repair / analysis -----------------------------------------------------


class InvalidScheme(VmdsError, ValueError):
    def __init__(self, m: int, reason: str = "") -> None:
        super().__init__(f"repair scheme invalid for node {m}" + (f": {reason}" if reason else ""))
        self.m = m


class ErasedOutOfRange(VmdsError, IndexError):
    pass


class NotNormalized(VmdsError, ValueError):
    pass


class NotDiagonal(VmdsError, ValueError):
    pass


class NotPowerOfR(VmdsError, ValueError):
    pass


class NoValidIndexSet(VmdsError, ValueError):
    pass


# --- construct / search ----------------------------------------------------


class ConstructionFailed(VmdsError, RuntimeError):
    pass


class BudgetExhausted(VmdsError, RuntimeError):
    pass


class NotOptimalBandwidth(VmdsError, ValueError):
    pass


class EmptyKeepSet(VmdsError, ValueError):
    pass
