#!/usr/bin/env python3
# SaddleKit - Extended Real Payoffs

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class PayoffKind(str, Enum):
    FINITE = "finite"
    PLUS_INFINITY = "+inf"
    MINUS_INFINITY = "-inf"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class ExtendedPayoff:
    """
    A value in R ∪ {+inf, -inf} plus an explicit Undefined.

    Undefined stands for "+inf - inf": the positive and the negative part of an
    expected payoff both diverge. It is never folded into a number.
    """

    kind: PayoffKind
    value: float = 0.0

    @classmethod
    def finite(cls, value):
        value = float(value)
        if not math.isfinite(value):
            return cls.from_float(value)
        return cls(PayoffKind.FINITE, value)

    @classmethod
    def from_float(cls, value):
        """+inf / -inf / nan map to the infinite and Undefined variants."""
        if math.isnan(value):
            return UNDEFINED
        if value == math.inf:
            return PLUS_INFINITY
        if value == -math.inf:
            return MINUS_INFINITY
        return cls(PayoffKind.FINITE, float(value))

    @classmethod
    def from_parts(cls, positive, negative):
        """
        Combine the magnitudes of the positive and negative parts.

        Either magnitude may be +inf.
        """
        if math.isinf(positive) and math.isinf(negative):
            return UNDEFINED
        if math.isinf(positive):
            return PLUS_INFINITY
        if math.isinf(negative):
            return MINUS_INFINITY
        return cls(PayoffKind.FINITE, float(positive - negative))

    @property
    def is_finite(self):
        return self.kind is PayoffKind.FINITE

    @property
    def is_defined(self):
        return self.kind is not PayoffKind.UNDEFINED

    def as_float(self):
        """Float image: +/-inf for the infinities, nan for Undefined."""
        if self.kind is PayoffKind.FINITE:
            return self.value
        if self.kind is PayoffKind.PLUS_INFINITY:
            return math.inf
        if self.kind is PayoffKind.MINUS_INFINITY:
            return -math.inf
        return math.nan

    def negated(self):
        return ExtendedPayoff.from_float(-self.as_float())

    def to_json(self):
        if self.is_finite:
            return {"kind": self.kind.value, "value": self.value}
        return {"kind": self.kind.value}

    def __str__(self):
        if self.is_finite:
            return repr(self.value)
        return self.kind.value


PLUS_INFINITY = ExtendedPayoff(PayoffKind.PLUS_INFINITY)
MINUS_INFINITY = ExtendedPayoff(PayoffKind.MINUS_INFINITY)
UNDEFINED = ExtendedPayoff(PayoffKind.UNDEFINED)
