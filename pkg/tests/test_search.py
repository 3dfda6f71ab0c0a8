"""One-dimensional extremization over the four domain kinds."""

import math

import numpy as np
import pytest

from src.core.domains import FiniteSet, IntegerRange, Interval, RealLine
from src.core.expr import parse
from src.core.extended import PLUS_INFINITY, PayoffKind
from src.core.search import IndicatorConditions, SearchBudget, is_growing, maximize, minimize

TOL = 1e-8


class TestContinuous:

    def test_interior_maximum_on_real_line(self):
        result = maximize(lambda p: -(p - 1.0) ** 2, RealLine())
        assert result.value.is_finite
        assert result.value.value == pytest.approx(0.0, abs=TOL)
        assert result.argbest == pytest.approx(1.0, abs=1e-4)

    def test_growth_is_plus_infinity(self):
        result = maximize(lambda p: p ** 2, RealLine())
        assert result.value == PLUS_INFINITY

    def test_minimize_mirrors(self):
        result = minimize(lambda p: (p + 3.0) ** 2 + 2.0, RealLine())
        assert result.value.value == pytest.approx(2.0, abs=TOL)
        assert result.argbest == pytest.approx(-3.0, abs=1e-4)

    def test_interval(self):
        result = maximize(lambda p: p * (1.0 - p), Interval(0, 1))
        assert result.value.value == pytest.approx(0.25, abs=TOL)
        assert result.box == (0.0, 1.0)

    def test_endpoint_maximum(self):
        result = maximize(lambda p: -p, Interval(1, 2))
        assert result.value.value == -1.0
        assert result.argbest == 1.0

    def test_undefined_value(self):
        result = maximize(lambda p: np.where(p > 0.5, np.nan, p), Interval(0, 1))
        assert result.value.kind is PayoffKind.UNDEFINED

    def test_near_best(self):
        result = maximize(lambda p: -np.abs(p), Interval(-1, 1), SearchBudget(grid_points=5, golden_iterations=0))
        assert list(result.near_best(1e-9)) == [0.0]

    def test_breakpoints_find_isolated_spike(self):
        node = parse("[a == 0.3]")
        conditions = IndicatorConditions(node, "a")

        def objective(points):
            return np.where(np.asarray(points) == 0.3, 1.0, 0.0)

        budget = SearchBudget(grid_points=11, golden_iterations=0)
        assert maximize(objective, Interval(0, 1), budget, conditions).value.value == 1.0


class TestDiscrete:

    def test_finite_set(self):
        result = maximize(lambda p: -(p - 2.0) ** 2, FiniteSet.of([0, 1, 3, 4]))
        assert result.value.value == -1.0
        assert result.argbest == 1.0

    def test_integer_maximum(self):
        result = maximize(lambda k: -(k - 5.0) ** 2, IntegerRange(1))
        assert result.value.value == 0.0
        assert result.argbest == 5.0

    def test_integer_growth(self):
        assert maximize(lambda k: k, IntegerRange(1)).value == PLUS_INFINITY

    def test_integer_box(self):
        result = minimize(lambda k: np.abs(k - 700.0), IntegerRange(0, 10000))
        assert result.value.value == 0.0
        assert result.argbest == 700.0

    def test_infinite_sample(self):
        result = maximize(lambda k: np.where(k == 3, math.inf, 0.0), IntegerRange(1))
        assert result.value == PLUS_INFINITY
        assert result.argbest == 3.0


class TestGrowth:

    def test_is_growing(self):
        assert is_growing([0, 1, 2, 3, 4], 4)
        assert not is_growing([0, 1, 2, 3, 3], 4)
        assert not is_growing([0, 1, 2], 4)

    def test_shrinking_increments_are_not_growth(self):
        assert not is_growing([0, 1, 1.5, 1.6, 1.61], 4)


class TestIndicatorConditions:

    def test_locate_switch(self):
        conditions = IndicatorConditions(parse("[b < a]"), "b", {"a": np.array([0.3])})
        points = conditions.locate(np.linspace(0, 1, 5), 64)
        assert np.min(np.abs(points - 0.3)) < 1e-15

    def test_no_indicators(self):
        assert not IndicatorConditions(parse("a*b"), "a")
