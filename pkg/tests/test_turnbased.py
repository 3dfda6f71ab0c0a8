"""Turn-based games: constraint maps, worst loss, minimax, pure strategies."""

import math
from dataclasses import replace

import numpy as np
import pytest

from src.core.catalog import sequential
from src.core.domains import FiniteSet, Interval, RealLine
from src.core.errors import OutOfConstraint, StructuralViolation
from src.core.extended import PLUS_INFINITY, ExtendedPayoff
from src.core import turnbased
from src.core.search import SearchBudget
from src.core.turnbased import (
    ConstantMap,
    IntervalMap,
    PointsMap,
    SequentialGame,
    check_pure_sufficiency,
    minimax,
    strategic_form,
    value_function,
    worst_loss,
)

TOL = 1e-9


class TestConstraintMaps:

    def test_interval_map(self):
        phi = IntervalMap.from_text("a - 1", "a + x")
        assert phi.at(0.5, a=1.0) == Interval(0.0, 1.5)
        assert phi.depends_on("a") and phi.depends_on("x")

    def test_degenerate_interval_is_a_point(self):
        phi = IntervalMap.from_text("a", "a")
        assert phi.at(0.0, a=2.0) == FiniteSet((2.0,))

    def test_infinite_ends(self):
        assert IntervalMap.from_text("-inf", "inf").at(0.0) == RealLine()
        assert IntervalMap.from_text("0", "inf").at(0.0) == Interval(0.0, math.inf)

    def test_empty_set(self):
        with pytest.raises(StructuralViolation):
            IntervalMap.from_text("1", "x").at(0.0)

    def test_undefined_endpoint(self):
        with pytest.raises(StructuralViolation):
            IntervalMap.from_text("0", "1/x").at(0.0)

    def test_points_map(self):
        phi = PointsMap.from_text(["x", "[x>0]/(x + [x==0])"])
        assert phi.at(0.5).points == (0.5, 2.0)
        assert phi.at(0.0).points == (0.0,)

    def test_json(self):
        assert IntervalMap.from_text("0", "inf").to_json() == {"kind": "interval", "lo": "0.0", "hi": "inf"}
        assert ConstantMap(Interval(0, 1)).to_json()["domain"] == {"kind": "interval", "lo": 0, "hi": 1}


class TestWorstLoss:

    def test_worst_loss(self, small_search):
        game = sequential("separable")
        assert worst_loss(game, 0.25, 2.0, small_search).value == pytest.approx(4.25, abs=TOL)

    def test_action_outside_constraint(self, small_search):
        game = sequential("reply")
        with pytest.raises(OutOfConstraint):
            worst_loss(game, 0.5, 2.0, small_search)

    def test_state_outside_domain(self, small_search):
        with pytest.raises(OutOfConstraint):
            minimax(sequential("reply"), 2.0, small_search)

    def test_unbounded_reply(self, small_search):
        game = SequentialGame("b", ConstantMap(Interval(0, 1)), ConstantMap(RealLine()))
        assert worst_loss(game, 0.0, 0.5, small_search) == PLUS_INFINITY


class TestValueFunction:

    def test_constrained_minimum(self, small_search):
        record = value_function("(a - x)^2 + 1", ConstantMap(Interval(-1, 1)), 2.0, small_search)
        assert record.value.value == pytest.approx(2.0, abs=TOL)
        assert record.argmin == [1.0]

    def test_callable_objective(self, small_search):
        record = value_function(lambda a: np.abs(a), ConstantMap(FiniteSet.of([-2, 1, 3])), 0.0, small_search)
        assert record.value.value == 1.0


class TestMinimax:

    @pytest.mark.parametrize("x", [0.0, 0.3, 1.0])
    def test_separable(self, x, small_search):
        record = minimax(sequential("separable"), x, small_search)
        assert record.v_sharp.value == pytest.approx(x, abs=TOL)
        assert record.argmin_a_set[0] == pytest.approx(0.0, abs=1e-4)

    @pytest.mark.parametrize("x, expected", [(-0.5, 0.0), (0.0, 0.0), (0.5, 1.0)])
    def test_switch(self, x, expected, small_search):
        assert minimax(sequential("switch"), x, small_search).v_sharp.value == pytest.approx(expected, abs=TOL)

    def test_reply(self, small_search):
        record = minimax(sequential("reply"), 0.5, small_search)
        assert record.v_sharp.value == pytest.approx(0.0, abs=TOL)
        assert record.argmin_a_set == [1.0]
        assert record.argmax_b_for_best_a == [0.0]

    def test_finite_ties(self, small_search):
        record = minimax(sequential("finite"), 0.0, small_search)
        assert record.v_sharp.value == 0.0
        assert record.argmin_a_set == [0.0, 1.0]

    def test_escape(self, small_search):
        game = sequential("escape")
        assert minimax(game, 0.5, small_search).v_sharp.value == pytest.approx(0.5)
        assert minimax(game, 0.0, small_search).v_sharp.value == 0.0

    def test_json(self, small_search):
        record = minimax(sequential("finite"), 0.0, small_search).to_json()
        assert list(record) == ["x", "v_sharp", "argmin_a_set", "argmin_clusters", "argmax_b_for_best_a"]
        assert record["v_sharp"] == {"kind": "finite", "value": 0.0}


class TestPureSufficiency:

    def test_finite_game_matches_strategic_form(self, small_search):
        report = check_pure_sufficiency(sequential("finite"), 0.0, 50, seed=3, budget=small_search)
        assert report.passed
        assert report.lp_gap == pytest.approx(0.0, abs=1e-9)

    def test_continuous_game(self, small_search):
        report = check_pure_sufficiency(sequential("tracking"), 0.4, 40, seed=0, budget=small_search)
        assert report.passed
        assert report.lp_value is None
        assert report.pure_value == pytest.approx(0.0, abs=TOL)

    def test_separable_game(self, small_search):
        report = check_pure_sufficiency(sequential("separable"), 2.0, 100, seed=0, budget=small_search)
        assert report.pure_value == pytest.approx(2.0, abs=TOL)
        assert report.max_violation <= 1e-7
        assert report.passed

    def test_single_point_domains(self, small_search):
        game = SequentialGame("a*b + x", ConstantMap(FiniteSet.of([2])), ConstantMap(FiniteSet.of([3])))
        report = check_pure_sufficiency(game, 1.0, 10, budget=small_search)
        assert report.pure_value == 7.0
        assert report.max_violation == 0.0
        assert report.lp_value == pytest.approx(7.0)

    def test_overstated_pure_value_fails(self, small_search, monkeypatch):
        exact = turnbased.minimax

        def overstated(g, x, budget=None, tie_tol=turnbased.TIE_TOL):
            record = exact(g, x, budget, tie_tol)
            return replace(record, v_sharp=ExtendedPayoff.finite(record.v_sharp.value + 0.5))

        monkeypatch.setattr(turnbased, "minimax", overstated)
        report = check_pure_sufficiency(sequential("tracking"), 0.4, 20, seed=0, budget=small_search)
        assert report.max_violation == pytest.approx(0.5, abs=1e-6)
        assert not report.passed

    def test_understated_worst_loss_fails(self, small_search, monkeypatch):
        exact = turnbased.worst_loss_search

        def understated(g, x, a, budget=None):
            result = exact(g, x, a, budget)
            return replace(result, value=ExtendedPayoff.finite(result.value.value - 0.5))

        monkeypatch.setattr(turnbased, "worst_loss_search", understated)
        report = check_pure_sufficiency(sequential("separable"), 0.0, 20, seed=0, budget=small_search)
        assert report.max_violation == pytest.approx(0.5, abs=1e-6)
        assert not report.passed

    def test_strategic_form_shape(self):
        game = strategic_form(sequential("finite"), 0.0)
        assert game.shape == (3, 8)

    def test_strategic_form_needs_finite_sets(self):
        assert strategic_form(sequential("reply"), 0.5) is None

    def test_seeded(self, small_search):
        first = check_pure_sufficiency(sequential("finite"), 0.0, 20, seed=7, budget=small_search)
        second = check_pure_sufficiency(sequential("finite"), 0.0, 20, seed=7, budget=small_search)
        assert first.to_json() == second.to_json()


class TestShift:

    def test_shift_moves_the_value(self):
        game = sequential("finite").shifted(2.5)
        assert minimax(game, 0.0, SearchBudget()).v_sharp.value == pytest.approx(2.5)
