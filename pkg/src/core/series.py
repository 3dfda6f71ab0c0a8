#!/usr/bin/env python3
# SaddleKit - Series Summation With Divergence Detection

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.core.errors import BudgetExhausted

STABLE_RATIOS = 5
DIVERGENCE_RUN = 10
DIVERGENCE_START = 50
LEADING_ZERO_LIMIT = 128
RATIO_NOISE = 1e-9


class SeriesStatus(str, Enum):
    CONVERGED = "converged"
    DIVERGES_PLUS = "diverges+"
    DIVERGES_MINUS = "diverges-"


@dataclass(frozen=True)
class SeriesVerdict:
    """
    Outcome of summing a one-signed series.

    When converged, the true sum lies in [value, value + tail_bound] (or the
    mirrored interval for a non-positive series).
    """

    status: SeriesStatus
    value: float
    tail_bound: float
    terms_used: int

    @property
    def converged(self):
        return self.status is SeriesStatus.CONVERGED

    def magnitude(self):
        """|sum|, or +inf when divergent."""
        return abs(self.value) if self.converged else math.inf


def sum_series(terms, start=1, tol=1e-10, max_terms=10000, chunk=16, sign=1):
    """
    Sum a series of non-negative magnitudes ``terms(k)``, k = start, start+1, ...

    ``terms`` receives an integer array and returns the magnitudes as a float
    array (+inf allowed). ``sign`` only orients the reported verdict: -1 turns
    the sum into the negative part of a payoff.

    Stops when a geometric majorant built from the largest of the last
    STABLE_RATIOS term ratios bounds the tail below tol * max(1, partial).
    Declares divergence on an infinite term, or when past DIVERGENCE_START the
    terms are non-decreasing for DIVERGENCE_RUN consecutive indices.
    """
    partial = 0.0
    used = 0
    previous = None
    ratios = deque(maxlen=STABLE_RATIOS)
    growth = 0
    leading_zeros = 0
    diverged = SeriesStatus.DIVERGES_PLUS if sign > 0 else SeriesStatus.DIVERGES_MINUS

    k = start
    while used < max_terms:
        block = np.asarray(terms(np.arange(k, k + chunk)), dtype=float)
        for term in block:
            used += 1
            index = used
            if math.isnan(term) or term < 0:
                raise ValueError(f"Series term {k + index - 1} is not a magnitude: {term}")
            if math.isinf(term):
                return SeriesVerdict(diverged, sign * math.inf, 0.0, used)

            partial += term
            if not math.isfinite(partial):
                return SeriesVerdict(diverged, sign * math.inf, 0.0, used)

            if previous is None:
                # leading zeros
                if term == 0.0:
                    leading_zeros += 1
                    if leading_zeros >= LEADING_ZERO_LIMIT:
                        return SeriesVerdict(SeriesStatus.CONVERGED, 0.0, 0.0, used)
                    continue
                previous = term
                continue

            if previous == 0.0:
                ratio = 0.0 if term == 0.0 else math.inf
            else:
                ratio = term / previous

            if ratio < 1.0:
                ratios.append(ratio)
            else:
                ratios.clear()

            if index > DIVERGENCE_START and term > 0 and term >= previous * (1 - RATIO_NOISE):
                growth += 1
                if growth >= DIVERGENCE_RUN:
                    return SeriesVerdict(diverged, sign * math.inf, 0.0, used)
            else:
                growth = 0

            previous = term

            if len(ratios) == STABLE_RATIOS:
                rho = max(ratios)
                tail = term * rho / (1.0 - rho)
                if tail <= tol * max(1.0, partial):
                    return SeriesVerdict(SeriesStatus.CONVERGED, sign * partial, tail, used)
        k += chunk

    raise BudgetExhausted(
        f"Series undecided after {used} terms (partial sum {sign * partial!r})",
        best=sign * partial,
    )
