#!/usr/bin/env python3
# SaddleKit - One-Dimensional Extremization Engine

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from src.core.domains import FiniteSet, IntegerRange
from src.core.errors import BudgetExhausted, EvaluationError
from src.core.expr import BinOp, evaluate_array, indicators
from src.core.extended import (
    MINUS_INFINITY,
    PLUS_INFINITY,
    UNDEFINED,
    ExtendedPayoff,
)
from src.utils.logger import get_logger

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARED = (3 - math.sqrt(5)) / 2

# increments may shrink by at most this factor per doubling and still count as growth
GROWTH_INCREMENT_RATIO = 0.75

logger = get_logger("search")


@dataclass(frozen=True)
class SearchBudget:
    """Knobs of ``maximize``/``minimize``."""

    grid_points: int = 257
    golden_iterations: int = 40
    refine_cells: int = 3
    max_doublings: int = 40
    growth_run: int = 4
    enumeration_min: int = 50
    enumeration_patience: int = 32
    enumeration_max: int = 4096
    integer_growth_run: int = 10
    breakpoint_steps: int = 64

    def denser(self, factor=4):
        """A budget with a ``factor`` times finer grid and longer refinement."""
        return replace(
            self,
            grid_points=(self.grid_points - 1) * factor + 1,
            golden_iterations=self.golden_iterations + 20,
            refine_cells=self.refine_cells + 2,
        )


@dataclass
class SearchResult:
    """
    Outcome of a one-dimensional search.

    ``points``/``values`` hold every evaluated sample sorted by point, so
    callers can extract near-optimal sets. ``argbest`` is the lowest point
    attaining ``value`` (or the first point that proved it infinite).
    """

    value: ExtendedPayoff
    argbest: float | None
    points: np.ndarray
    values: np.ndarray
    grid_step: float = 0.0
    box: tuple = field(default=(-math.inf, math.inf))

    def flipped(self):
        return SearchResult(
            self.value.negated(),
            self.argbest,
            self.points,
            -self.values,
            self.grid_step,
            self.box,
        )

    def near_best(self, tie_tol):
        """Sampled points whose value is within ``tie_tol`` of the best."""
        if not self.value.is_finite:
            return np.array([self.argbest]) if self.argbest is not None else np.empty(0)
        close = np.abs(self.values - self.value.value) <= tie_tol
        return self.points[close]


def maximize(objective, domain, budget=None, conditions=None):
    """
    Supremum of ``objective`` over ``domain``.

    ``objective`` maps a float array of points to a float array of values
    (+inf for signed overflow, nan for an undefined value). ``conditions``, an
    optional IndicatorConditions, contributes the located indicator
    breakpoints (and their float neighbours) as extra samples.

    Raises BudgetExhausted (best = lower bound) when growth at an unbounded
    end can neither be confirmed nor ruled out.
    """
    search = _Search(objective, domain, budget or SearchBudget(), conditions)
    return search.run()


def minimize(objective, domain, budget=None, conditions=None):
    """Infimum of ``objective`` over ``domain``; mirror of ``maximize``."""

    def negated(points):
        return -np.asarray(objective(points), dtype=float)

    try:
        result = maximize(negated, domain, budget, conditions)
    except BudgetExhausted as e:
        best = -e.best if e.best is not None else None
        raise BudgetExhausted(f"Minimization undecided (best upper bound {best!r})", best=best) from None
    return result.flipped()


def is_growing(values, run):
    """
    True when the last ``run`` steps of ``values`` strictly increase and the
    increments do not shrink faster than GROWTH_INCREMENT_RATIO.
    """
    values = np.asarray(values, dtype=float)
    if len(values) < run + 1:
        return False
    tail = values[-(run + 1):]
    steps = np.diff(tail)
    if not np.all(steps > 0):
        return False
    return bool(np.all(steps[1:] >= GROWTH_INCREMENT_RATIO * steps[:-1]))


def _is_rising(values, run):
    values = np.asarray(values, dtype=float)
    if len(values) < run + 1:
        return False
    return bool(np.all(np.diff(values[-(run + 1):]) > 0))


class _Search:
    """Single maximization run; caches every sample."""

    def __init__(self, objective, domain, budget, conditions):
        """Initialize the search."""
        self.objective = objective
        self.domain = domain
        self.budget = budget
        self.conditions = conditions
        self.samples = {}
        self.undecided = []

    # ------------------------------------------------------------------
    # Sampling

    def _sample(self, points):
        points = np.asarray(points, dtype=float)
        fresh = [p for p in dict.fromkeys(points.tolist()) if p not in self.samples]
        if fresh:
            values = np.asarray(self.objective(np.array(fresh)), dtype=float)
            values = np.broadcast_to(values, (len(fresh),))
            self.samples.update(zip(fresh, values.tolist()))
        return np.array([self.samples[p] for p in points.tolist()])

    def _value(self, point):
        return float(self._sample([point])[0])

    # ------------------------------------------------------------------
    # Dispatch

    def run(self):
        if isinstance(self.domain, FiniteSet):
            self._sample(self.domain.points)
            return self._result()

        if isinstance(self.domain, IntegerRange):
            if self.domain.is_compact:
                return self._integer_box()
            return self._enumerate()

        return self._continuous()

    # ------------------------------------------------------------------
    # Integers

    def _integer_box(self):
        lo, hi = self.domain.lower, self.domain.upper
        if hi - lo + 1 <= self.budget.enumeration_max:
            self._sample(np.arange(lo, hi + 1, dtype=float))
            return self._result()

        # coarse grid, then full enumeration between the neighbours of the best nodes
        grid = self.domain.grid(lo, hi, self.budget.grid_points)
        values = self._sample(grid)
        for i in self._best_indices(values):
            left = grid[max(i - 1, 0)]
            right = grid[min(i + 1, len(grid) - 1)]
            self._sample(np.arange(left, right + 1, dtype=float))
        return self._result(step=float(grid[1] - grid[0]))

    def _enumerate(self):
        budget = self.budget
        best = -math.inf
        last_improvement = 0
        history = []
        k = self.domain.lower
        count = 0

        while True:
            block = np.arange(k, k + 16, dtype=float)
            values = self._sample(block)
            for point, value in zip(block, values):
                count += 1
                if math.isnan(value):
                    return self._result()
                if value == math.inf:
                    return self._result()
                if value > best:
                    best = value
                    last_improvement = count
                history.append(value)

                if count > budget.enumeration_min:
                    if is_growing(history, budget.integer_growth_run) and _steady(history, budget.integer_growth_run):
                        logger.debug(f"Integer growth confirmed at {point:g}")
                        return self._result(infinite_at=point)
                    if count - last_improvement >= budget.enumeration_patience:
                        return self._result()

                if count >= budget.enumeration_max:
                    raise BudgetExhausted(
                        f"Enumeration still improving after {count} integers (best {best!r})",
                        best=best,
                    )
            k += 16

    # ------------------------------------------------------------------
    # Continuous domains

    def _base(self):
        domain = self.domain
        if math.isfinite(domain.lower):
            return float(domain.lower)
        if math.isfinite(domain.upper):
            return float(domain.upper)
        return 0.0

    def _probe_end(self, base, sign):
        """Doubling probes toward one unbounded end; returns the box radius."""
        budget = self.budget
        radii = 2.0 ** np.arange(budget.max_doublings + 1)
        points = base + sign * radii
        values = self._sample(points)
        sequence = np.concatenate([[self._value(base)], values])

        if np.any(np.isnan(sequence)) or np.any(sequence == math.inf):
            return None, True
        if is_growing(values, budget.growth_run):
            return None, True
        if _is_rising(values, budget.growth_run):
            self.undecided.append(float(points[-1]))

        # last position where the sequence rises again
        fails = np.nonzero(sequence[1:] > sequence[:-1])[0]
        position = int(fails[-1]) + 1 if len(fails) else 0
        radius = radii[min(position, len(radii) - 1)]
        return float(radius), False

    def _continuous(self):
        domain = self.domain
        budget = self.budget
        base = self._base()
        lo, hi = domain.lower, domain.upper

        for end in domain.unbounded_ends():
            sign = 1.0 if end == "+" else -1.0
            radius, decided = self._probe_end(base, sign)
            if decided:
                return self._result()
            if sign > 0:
                hi = base + radius
            else:
                lo = base - radius

        grid = np.linspace(lo, hi, budget.grid_points)
        values = self._sample(grid)

        if self.conditions:
            extra = self._breakpoints(grid)
            if len(extra):
                self._sample(extra)

        for i in self._best_indices(values):
            left = grid[max(i - 1, 0)]
            right = grid[min(i + 1, len(grid) - 1)]
            self._golden(left, right)

        result = self._result(step=float(grid[1] - grid[0]), box=(float(lo), float(hi)))
        if result.argbest in self.undecided and result.value.is_finite:
            raise BudgetExhausted(
                f"Growth toward {result.argbest:g} neither confirmed nor refuted",
                best=result.value.value,
            )
        return result

    def _best_indices(self, values):
        order = np.argsort(-np.nan_to_num(values, nan=-np.inf), kind="stable")
        return order[: self.budget.refine_cells]

    def _golden(self, a, b):
        """Golden-section maximization on [a, b]; every probe becomes a sample."""
        h = b - a
        if h <= 0:
            return
        c = a + INV_PHI_SQUARED * h
        d = a + INV_PHI * h
        yc = self._value(c)
        yd = self._value(d)

        for _ in range(self.budget.golden_iterations):
            h = INV_PHI * h
            if yc > yd:
                b = d
                d = c
                yd = yc
                c = a + INV_PHI_SQUARED * h
                yc = self._value(c)
            else:
                a = c
                c = d
                yc = yd
                d = a + INV_PHI * h
                yd = self._value(d)

    def _breakpoints(self, grid):
        points = self.conditions.locate(grid, self.budget.breakpoint_steps)
        return points[(points >= self.domain.lower) & (points <= self.domain.upper)]

    # ------------------------------------------------------------------
    # Result

    def _result(self, step=0.0, box=None, infinite_at=None):
        points = np.array(sorted(self.samples))
        values = np.array([self.samples[p] for p in points.tolist()])
        box = box or (float(points[0]), float(points[-1]))

        if infinite_at is not None:
            return SearchResult(PLUS_INFINITY, float(infinite_at), points, values, step, box)

        undefined = np.nonzero(np.isnan(values))[0]
        if len(undefined):
            return SearchResult(UNDEFINED, float(points[undefined[0]]), points, values, step, box)

        infinite = np.nonzero(values == math.inf)[0]
        if len(infinite):
            return SearchResult(PLUS_INFINITY, float(points[infinite[0]]), points, values, step, box)

        # the ends probed last decide: growth seen in the probes means +inf
        for end in self.domain.unbounded_ends() if not self.domain.discrete else ():
            sign = 1.0 if end == "+" else -1.0
            probes = self._base() + sign * 2.0 ** np.arange(self.budget.max_doublings + 1)
            probe_values = np.array([self.samples.get(p, math.nan) for p in probes.tolist()])
            if not np.any(np.isnan(probe_values)) and is_growing(probe_values, self.budget.growth_run):
                logger.debug(f"Growth confirmed toward {end}inf")
                return SearchResult(PLUS_INFINITY, float(probes[-1]), points, values, step, box)

        i = int(np.argmax(values))
        if values[i] == -math.inf:
            return SearchResult(MINUS_INFINITY, float(points[i]), points, values, step, box)
        return SearchResult(ExtendedPayoff.finite(values[i]), float(points[i]), points, values, step, box)


def _steady(values, run):
    """Integer growth: increments over the last ``run`` steps never shrink."""
    steps = np.diff(np.asarray(values[-(run + 1):], dtype=float))
    return bool(np.all(steps[1:] >= steps[:-1] * (1 - 1e-9)))



class IndicatorConditions:
    """
    Indicator breakpoints of a payoff along one variable.

    ``others`` fixes the remaining game variables: a mapping from variable
    name to an array of values, one entry per binding (e.g. the atoms of an
    opponent strategy). Each (indicator, binding) pair is one condition
    ``lhs - rhs`` whose sign changes mark discontinuities.
    """

    def __init__(self, node, variable, others=None, x=None):
        """Initialize the conditions."""
        self.differences = [BinOp("-", ind.left, ind.right) for ind in indicators(node)]
        self.variable = variable
        self.others = {name: np.asarray(values, dtype=float) for name, values in (others or {}).items()}
        self.count = len(next(iter(self.others.values()))) if self.others else 1
        self.x = x

    def __bool__(self):
        return bool(self.differences)

    def _evaluate(self, difference, bindings, points):
        env = {"x": self.x}
        for name, values in self.others.items():
            env[name] = values[bindings]
        env[self.variable] = points
        try:
            values = evaluate_array(difference, signed_overflow=True, **env)
        except EvaluationError:
            return np.zeros(np.broadcast_shapes(np.shape(bindings), np.shape(points)))
        return np.broadcast_to(values, np.broadcast_shapes(np.shape(bindings), np.shape(points)))

    def locate(self, grid, steps):
        """Bisect every sign change between adjacent grid nodes."""
        grid = np.asarray(grid, dtype=float)
        found = []
        bindings = np.arange(self.count)[:, None]
        for difference in self.differences:
            signs = np.sign(self._evaluate(difference, bindings, grid[None, :]))
            rows, cols = np.nonzero(signs[:, :-1] != signs[:, 1:])
            if not len(rows):
                continue
            left = grid[cols]
            right = grid[cols + 1]
            left_sign = signs[rows, cols]
            for _ in range(steps):
                middle = 0.5 * (left + right)
                middle_sign = np.sign(self._evaluate(difference, rows, middle))
                zero = middle_sign == 0
                same = middle_sign == left_sign
                left = np.where(same | zero, middle, left)
                right = np.where(same & ~zero, right, middle)
            found.extend([np.nextafter(left, -math.inf), left, right, np.nextafter(right, math.inf)])

        if not found:
            return np.empty(0)
        return np.unique(np.concatenate(found))
