#!/usr/bin/env python3
# SaddleKit - Finite Zero-Sum Games

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from src.core.domains import PlayerTag
from src.core.errors import DimensionMismatch, NumericalFailure
from src.utils.logger import get_logger

LP_TOL = 1e-9
PIVOT_EPS = 1e-12
TIE_EPS = 1e-12

logger = get_logger("matrix_game")


@dataclass
class MatrixGame:
    """
    Finite game: entry (i, j) is what Player I pays Player II when I plays
    row i (action ``row_points[i]``) and II plays column j.
    """

    payoff: np.ndarray
    row_points: np.ndarray = None
    col_points: np.ndarray = None

    def __post_init__(self):
        self.payoff = np.array(self.payoff, dtype=float)
        if self.payoff.ndim != 2 or 0 in self.payoff.shape:
            raise DimensionMismatch(f"Payoff must be a non-empty matrix, got shape {self.payoff.shape}")
        if not np.all(np.isfinite(self.payoff)):
            raise NumericalFailure("Payoff matrix has non-finite entries")
        m, n = self.payoff.shape
        self.row_points = np.arange(m, dtype=float) if self.row_points is None else np.asarray(self.row_points, dtype=float)
        self.col_points = np.arange(n, dtype=float) if self.col_points is None else np.asarray(self.col_points, dtype=float)
        if self.row_points.shape != (m,) or self.col_points.shape != (n,):
            raise DimensionMismatch("Action points do not match the payoff shape")

    @property
    def shape(self):
        return self.payoff.shape

    @classmethod
    def from_text(cls, text):
        """Whitespace- or comma-separated rows, one per line; '#' starts a comment."""
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            rows.append([float(token) for token in re.split(r"[\s,;]+", line) if token])
        widths = {len(row) for row in rows}
        if len(widths) != 1:
            raise DimensionMismatch(f"Ragged matrix: row lengths {sorted(widths)}")
        return cls(np.array(rows))

    def negated_transpose(self):
        """The game with the roles of the players exchanged."""
        return MatrixGame(-self.payoff.T, self.col_points, self.row_points)


@dataclass
class MatrixSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    gap: float
    method: str = "lp"
    iterations: int = 0
    bounds: tuple = field(default=(0.0, 0.0))

    def to_json(self):
        return {
            "value": float(self.value),
            "row_strategy": [float(p) for p in self.row_strategy],
            "col_strategy": [float(q) for q in self.col_strategy],
            "gap": float(self.gap),
        }


def duality_bounds(g, row_strategy, col_strategy):
    """
    (upper, lower): what the row strategy concedes at worst and what the column
    strategy secures at least.
    """
    upper = float(np.max(row_strategy @ g.payoff))
    lower = float(np.min(g.payoff @ col_strategy))
    return upper, lower


def _first_within(values, target):
    """Lowest index whose value lies within TIE_EPS (relative) of ``target``."""
    slack = TIE_EPS * max(1.0, abs(target))
    return int(np.nonzero(np.abs(values - target) <= slack)[0][0])


def best_pure_response(g, strategy, side):
    """
    Best pure reply of ``side`` against the opponent's mixed ``strategy``.

    Side I minimizes over rows against a column strategy; side II maximizes
    over columns against a row strategy. Ties go to the lowest index.
    """
    side = side if isinstance(side, PlayerTag) else PlayerTag.parse(side)
    strategy = np.asarray(strategy, dtype=float)
    m, n = g.shape

    if side is PlayerTag.A:
        if strategy.shape != (n,):
            raise DimensionMismatch(f"Side I replies to a column strategy of length {n}, got {strategy.shape}")
        payoffs = g.payoff @ strategy
        best = float(np.min(payoffs))
    else:
        if strategy.shape != (m,):
            raise DimensionMismatch(f"Side II replies to a row strategy of length {m}, got {strategy.shape}")
        payoffs = strategy @ g.payoff
        best = float(np.max(payoffs))

    index = _first_within(payoffs, best)
    return index, float(payoffs[index])


class _Tableau:
    """
    Dense simplex tableau for  min c'x  s.t.  Ax <= b, x >= 0  with b >= 0,
    started from the slack basis and pivoted with Bland's rule.
    """

    def __init__(self, A, b, c):
        """Initialize the tableau."""
        rows, cols = A.shape
        self.rows = rows
        self.cols = cols
        self.basis = np.arange(cols, cols + rows)

        self.tableau = np.zeros((rows + 1, cols + rows + 1))
        self.tableau[1:, 0] = b
        self.tableau[1:, 1:cols + 1] = A
        self.tableau[1:, cols + 1:] = np.eye(rows)
        self.tableau[0, 1:cols + 1] = c

    def pivot(self, pivot_row, pivot_col):
        self.basis[pivot_row - 1] = pivot_col - 1
        self.tableau[pivot_row, :] /= self.tableau[pivot_row, pivot_col]
        column = self.tableau[:, pivot_col].copy()
        column[pivot_row] = 0.0
        self.tableau -= np.outer(column, self.tableau[pivot_row, :])

    def entering(self):
        """Lowest-index column with a negative reduced cost, or None."""
        negative = np.nonzero(self.tableau[0, 1:] < -PIVOT_EPS)[0]
        return int(negative[0]) + 1 if len(negative) else None

    def leaving(self, pivot_col):
        """Minimum-ratio row; ties go to the lowest basic variable index."""
        column = self.tableau[1:, pivot_col]
        candidates = np.nonzero(column > PIVOT_EPS)[0]
        if not len(candidates):
            return None
        ratios = self.tableau[1:, 0][candidates] / column[candidates]
        best = np.min(ratios)
        tied = candidates[ratios <= best + PIVOT_EPS * max(1.0, abs(best))]
        return int(tied[np.argmin(self.basis[tied])]) + 1

    def solve(self, max_pivots):
        for count in range(max_pivots):
            pivot_col = self.entering()
            if pivot_col is None:
                return count
            pivot_row = self.leaving(pivot_col)
            if pivot_row is None:
                raise NumericalFailure("Linear program is unbounded")
            self.pivot(pivot_row, pivot_col)
        raise NumericalFailure(f"Simplex did not terminate within {max_pivots} pivots")

    def primal(self):
        x = np.zeros(self.cols + self.rows)
        x[self.basis] = self.tableau[1:, 0]
        return x[:self.cols]

    def slack_reduced_costs(self):
        return self.tableau[0, self.cols + 1:]


def solve_lp(g, tol=LP_TOL):
    """
    Exact value and optimal strategies via the simplex method.

    With P' = P - min(P) + 1 > 0 the row player's problem becomes
    max sum(x) s.t. P'^T x <= 1, x >= 0; then u' = 1 / sum(x), p = x u', and
    the column strategy comes from the duals of the constraints.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")

    m, n = g.shape
    shift = float(np.min(g.payoff)) - 1.0
    shifted = g.payoff - shift

    tableau = _Tableau(shifted.T, np.ones(n), -np.ones(m))
    pivots = tableau.solve(max_pivots=50 * (m + n) + 100)

    x = np.clip(tableau.primal(), 0.0, None)
    y = np.clip(tableau.slack_reduced_costs(), 0.0, None)
    if x.sum() <= 0 or y.sum() <= 0:
        raise NumericalFailure("Degenerate simplex result")

    row_strategy = x / x.sum()
    col_strategy = y / y.sum()
    value = 1.0 / x.sum() + shift

    upper, lower = duality_bounds(g, row_strategy, col_strategy)
    gap = upper - lower
    solution = MatrixSolution(value, row_strategy, col_strategy, gap, "lp", pivots, (upper, lower))

    scale = max(1.0, float(np.max(np.abs(g.payoff))))
    logger.debug(f"Simplex on {m}x{n}: {pivots} pivots, value {value!r}, gap {gap!r}")
    if gap > tol * scale:
        raise NumericalFailure(f"Duality gap {gap!r} above tolerance {tol * scale!r}", best=solution)
    return solution


def solve_fictitious_play(g, iters=10000):
    """
    Deterministic fictitious play: each player answers the empirical mixture
    of the other's past actions (ties to the lowest index). The reported gap is
    the exact duality gap of the averaged strategies.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")

    payoff = g.payoff
    m, n = g.shape
    row_total = np.zeros(m)  # cumulative P @ (column counts)
    col_total = np.zeros(n)  # cumulative (row counts) @ P
    row_counts = np.zeros(m)
    col_counts = np.zeros(n)

    for _ in range(iters):
        i = int(np.argmin(row_total))
        row_counts[i] += 1
        col_total += payoff[i]

        j = int(np.argmax(col_total))
        col_counts[j] += 1
        row_total += payoff[:, j]

    row_strategy = row_counts / iters
    col_strategy = col_counts / iters
    upper, lower = duality_bounds(g, row_strategy, col_strategy)
    return MatrixSolution(
        0.5 * (upper + lower), row_strategy, col_strategy, upper - lower,
        "fictitious_play", iters, (upper, lower),
    )
