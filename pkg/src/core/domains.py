#!/usr/bin/env python3
# SaddleKit - Action Domains

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.core.errors import GameFileError

INF = math.inf


class PlayerTag(str, Enum):
    """Player I (chooses a, minimizes) and Player II (chooses b, maximizes)."""

    A = "A"
    B = "B"

    @classmethod
    def parse(cls, text):
        token = str(text).strip().upper()
        if token in ("A", "I", "1"):
            return cls.A
        if token in ("B", "II", "2"):
            return cls.B
        raise ValueError(f"Unknown player: {text!r}")

    def other(self):
        return PlayerTag.B if self is PlayerTag.A else PlayerTag.A


class Domain:
    """
    Action set of one player: a subset of the real line.

    Variants: RealLine, Interval, IntegerRange, FiniteSet.
    """

    lower = -INF
    upper = INF
    discrete = False

    @property
    def is_compact(self):
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    def unbounded_ends(self):
        """'+' and/or '-' for each infinite end."""
        ends = []
        if not math.isfinite(self.upper):
            ends.append("+")
        if not math.isfinite(self.lower):
            ends.append("-")
        return ends

    def reference_point(self):
        """Midpoint of the finite part of the domain, else 0."""
        if self.is_compact:
            return self.snap(0.5 * (self.lower + self.upper))
        if math.isfinite(self.lower):
            return self.snap(self.lower)
        if math.isfinite(self.upper):
            return self.snap(self.upper)
        return self.snap(0.0)

    def snap(self, value):
        """Nearest member of the domain."""
        return float(min(max(value, self.lower), self.upper))

    def contains(self, value):
        return self.lower <= value <= self.upper

    def hull(self):
        """Smallest closed interval containing the domain, as (lo, hi)."""
        return float(self.lower), float(self.upper)

    def grid(self, lo, hi, n):
        """At most ``n`` members of the domain inside [lo, hi], sorted."""
        lo = max(lo, self.lower)
        hi = min(hi, self.upper)
        if hi < lo:
            return np.empty(0)
        if hi == lo:
            return np.array([lo])
        return np.linspace(lo, hi, n)

    def to_text(self):
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError

    def __str__(self):
        return self.to_text()


def _fmt(value):
    if value == INF:
        return "inf"
    if value == -INF:
        return "-inf"
    return repr(float(value))


@dataclass(frozen=True)
class RealLine(Domain):
    def to_text(self):
        return "reals"

    def to_json(self):
        return {"kind": "reals"}


@dataclass(frozen=True)
class Interval(Domain):
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"Interval needs lo < hi, got ({self.lower}, {self.upper})")
        if self.lower == INF or self.upper == -INF:
            raise ValueError("Interval endpoints point the wrong way")

    def to_text(self):
        return f"interval({_fmt(self.lower)},{_fmt(self.upper)})"

    def to_json(self):
        return {"kind": "interval", "lo": self.lower, "hi": self.upper}


@dataclass(frozen=True)
class IntegerRange(Domain):
    lower: float
    upper: float = INF
    discrete = True

    def __post_init__(self):
        if not math.isfinite(self.lower) or self.lower != math.floor(self.lower):
            raise ValueError("IntegerRange needs a finite integer lower bound")
        if math.isfinite(self.upper) and self.upper != math.floor(self.upper):
            raise ValueError("IntegerRange upper bound must be an integer or inf")
        if not self.lower < self.upper:
            raise ValueError(f"IntegerRange needs lo < hi, got ({self.lower}, {self.upper})")

    def snap(self, value):
        return float(min(max(round(value), self.lower), self.upper))

    def contains(self, value):
        return super().contains(value) and float(value).is_integer()

    def grid(self, lo, hi, n):
        lo = max(math.ceil(lo), self.lower)
        hi = min(math.floor(hi), self.upper)
        if hi < lo:
            return np.empty(0)
        count = int(hi - lo) + 1
        if count <= n:
            return np.arange(lo, hi + 1, dtype=float)
        return np.unique(np.round(np.linspace(lo, hi, n)))

    def to_text(self):
        upper = int(self.upper) if math.isfinite(self.upper) else "inf"
        return f"integers({int(self.lower)},{upper})"

    def to_json(self):
        return {"kind": "integers", "lo": self.lower, "hi": self.upper}


@dataclass(frozen=True)
class FiniteSet(Domain):
    points: tuple
    discrete = True

    def __post_init__(self):
        if not self.points:
            raise ValueError("FiniteSet must be nonempty")
        if list(self.points) != sorted(set(self.points)):
            raise ValueError("FiniteSet points must be sorted and duplicate-free")

    @classmethod
    def of(cls, values):
        """Build from any iterable, sorting and removing duplicates."""
        return cls(tuple(sorted({float(v) for v in values})))

    @property
    def lower(self):
        return self.points[0]

    @property
    def upper(self):
        return self.points[-1]

    def snap(self, value):
        return min(self.points, key=lambda p: (abs(p - value), p))

    def contains(self, value):
        return float(value) in self.points

    def grid(self, lo, hi, n):
        return np.array([p for p in self.points if lo <= p <= hi])

    def to_text(self):
        return "set(" + ",".join(_fmt(p) for p in self.points) + ")"

    def to_json(self):
        return {"kind": "set", "points": list(self.points)}


# ----------------------------------------------------------------------
# Parsing of the game-file domain syntax

_DOMAIN_RE = re.compile(r"^\s*(\w+)\s*(?:\(\s*(.*?)\s*\))?\s*$")


def _number(text):
    token = text.strip().lower()
    if token in ("inf", "+inf"):
        return INF
    if token == "-inf":
        return -INF
    try:
        return float(token)
    except ValueError:
        raise GameFileError(f"Not a number in domain: {text!r}") from None


def parse_domain(text):
    """
    Parse "reals", "interval(lo,hi)", "integers(lo,inf)" or "set(v1,v2,...)".
    """
    match = _DOMAIN_RE.match(text.strip().strip('"'))
    if not match:
        raise GameFileError(f"Unrecognized domain: {text!r}")
    kind, body = match.group(1).lower(), match.group(2)
    try:
        if kind == "reals" and body is None:
            return RealLine()
        values = [_number(v) for v in body.split(",")] if body else []
        if kind == "interval" and len(values) == 2:
            if values[0] == -INF and values[1] == INF:
                return RealLine()
            return Interval(*values)
        if kind == "integers" and len(values) == 2:
            return IntegerRange(*values)
        if kind == "set" and values:
            return FiniteSet.of(values)
    except ValueError as exc:
        raise GameFileError(f"Invalid domain {text!r}: {exc}") from None
    raise GameFileError(f"Unrecognized domain: {text!r}")


def domain_from_json(data):
    """Inverse of ``Domain.to_json``."""
    try:
        kind = data["kind"]
        if kind == "reals":
            return RealLine()
        if kind == "interval":
            return Interval(float(data["lo"]), float(data["hi"]))
        if kind == "integers":
            return IntegerRange(float(data["lo"]), float(data.get("hi", INF)))
        if kind == "set":
            return FiniteSet.of(data["points"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GameFileError(f"Invalid domain record {data!r}: {exc}") from None
    raise GameFileError(f"Unknown domain kind in {data!r}")
