"""Saddle certificates of continuous and integer games."""

import math

import numpy as np
import pytest

from src.core.catalog import GAMES
from src.core.continuous_game import (
    GrowthStatus,
    RefinementBudget,
    SaddleCertificate,
    SolverProgress,
    lopsided_report,
    player_two_view,
    probe_coercivity,
    solve,
    truncate,
    verify_saddle,
)
from src.core.domains import FiniteSet, IntegerRange, Interval, RealLine
from src.core.errors import BudgetExhausted, CoercivityUnavailable, LambdaTooSmall
from src.core.expr import evaluate_array
from src.core.matrix_game import MatrixGame, solve_lp
from src.core.measures import FiniteSupport, SafetyClass, c_sharp

TOL = 1e-4
CONVEXITY_TOL = 1e-7
CONVEXITY_PAIRS = 25
FULL_CONVEXITY_PAIRS = 1000
DENSE_GRID = 1025


def _solve(name, budget):
    game = GAMES[name]
    return solve(game.payoff, game.A, game.B, tol=TOL, budget=budget)


def _random_strategy(rng, domain):
    """Finite-support strategy on at most four members of ``domain``."""
    size = int(rng.integers(1, 5))
    if isinstance(domain, FiniteSet):
        points = rng.choice(domain.points, size=size)
    elif isinstance(domain, IntegerRange):
        points = rng.integers(1, 6, size=size)
    elif domain.is_compact:
        points = rng.uniform(domain.lower, domain.upper, size)
    else:
        points = rng.uniform(-2, 2, size)
    return FiniteSupport.of(zip(points, rng.dirichlet(np.ones(size))), normalize=True)


class TestCatalogValues:

    @pytest.mark.parametrize("name", ["square_box", "pennies", "bilinear", "quadratic", "integer_race"])
    def test_value(self, name, small_refinement):
        cert = _solve(name, small_refinement)
        assert cert.converged
        assert cert.eps <= TOL
        assert cert.value == pytest.approx(GAMES[name].value, abs=TOL)

    def test_square_box_is_pure(self, small_refinement):
        cert = _solve("square_box", small_refinement)
        assert cert.iterations == 1
        assert cert.piA == FiniteSupport.point_mass(1.0)
        assert cert.piB == FiniteSupport.point_mass(0.0)

    def test_quadratic_truncation_box(self, small_refinement):
        cert = _solve("quadratic", small_refinement)
        assert cert.a_box == pytest.approx((-1.0, 1.0))
        assert cert.lam == pytest.approx(1.0)

    def test_integer_race_pure_saddle(self, small_refinement):
        cert = _solve("integer_race", small_refinement)
        assert cert.a_box == (1.0, 1.0)
        assert cert.piA == FiniteSupport.point_mass(1.0)

    def test_weak_duality(self, small_refinement):
        for name in GAMES:
            cert = _solve(name, small_refinement)
            assert cert.flat <= cert.value <= cert.sharp

    def test_unbounded_quadratic_concentrates_at_the_origin(self):
        cert = solve("a^2 - b^2", RealLine(), RealLine(), tol=TOL)
        assert abs(cert.value) <= TOL
        assert cert.eps <= TOL
        assert cert.piA.mass_within(0.0, 0.05) >= 0.99
        assert cert.piB.mass_within(0.0, 0.05) >= 0.99

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["square_box", "bilinear"])
    def test_agrees_with_a_dense_grid(self, name):
        game = GAMES[name]
        a = np.linspace(game.A.lower, game.A.upper, DENSE_GRID)
        b = np.linspace(game.B.lower, game.B.upper, DENSE_GRID)
        dense = solve_lp(MatrixGame(evaluate_array(game.payoff, a=a[:, None], b=b[None, :]), a, b))
        cert = solve(game.payoff, game.A, game.B, tol=TOL)
        assert cert.value == pytest.approx(dense.value, abs=3 * TOL)

    def test_certificate_json(self, small_refinement):
        record = _solve("square_box", small_refinement).to_json()
        assert list(record)[:6] == ["value", "eps", "sharp", "flat", "sharp_minus_value", "value_minus_flat"]
        assert record["piA"] == {"kind": "finite", "atoms": [[1.0, 1.0]]}


class TestSymmetry:

    @pytest.mark.parametrize("name", ["square_box", "bilinear", "quadratic"])
    def test_swapped_game_negates_value(self, name, small_refinement):
        game = GAMES[name]
        cert = _solve(name, small_refinement)
        swapped = solve(player_two_view(game.payoff), game.B, game.A, tol=TOL, budget=small_refinement)
        assert swapped.value == pytest.approx(-cert.value, abs=2 * TOL)

    def test_certificate_swap(self, small_refinement):
        cert = _solve("square_box", small_refinement)
        swapped = cert.swapped()
        assert swapped.value == -cert.value
        assert swapped.piA == cert.piB
        assert swapped.sharp == -cert.flat


class TestConvexity:

    @pytest.mark.parametrize("name, lo, hi", [
        ("square_box", 1.0, 2.0),
        ("bilinear", -1.0, 1.0),
        ("quadratic", -2.0, 2.0),
    ])
    def test_midpoint_convexity_of_worst_case(self, name, lo, hi, rng, small_search):
        game = GAMES[name]

        def random_strategy():
            size = int(rng.integers(1, 5))
            return FiniteSupport.of(zip(rng.uniform(lo, hi, size), rng.dirichlet(np.ones(size))), normalize=True)

        for _ in range(CONVEXITY_PAIRS):
            first, second = random_strategy(), random_strategy()
            middle = first.mix(second, 0.5)
            values = [c_sharp(game.payoff, pi, game.B, small_search).as_float() for pi in (first, second, middle)]
            assert values[2] <= 0.5 * (values[0] + values[1]) + CONVEXITY_TOL


    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(GAMES))
    def test_midpoint_convexity_per_catalog_game(self, name, rng):
        game = GAMES[name]
        for _ in range(FULL_CONVEXITY_PAIRS):
            first, second = _random_strategy(rng, game.A), _random_strategy(rng, game.A)
            middle = first.mix(second, 0.5)
            values = [c_sharp(game.payoff, pi, game.B).as_float() for pi in (first, second, middle)]
            assert values[2] <= 0.5 * (values[0] + values[1]) + CONVEXITY_TOL

class TestVerification:

    def test_verify_saddle(self, small_refinement):
        game = GAMES["square_box"]
        cert = _solve("square_box", small_refinement)
        assert verify_saddle(game.payoff, cert, game.A, game.B, TOL)

    def test_verification_rejects_a_bad_certificate(self, small_refinement):
        game = GAMES["square_box"]
        cert = _solve("square_box", small_refinement)
        cert.piA = FiniteSupport.point_mass(2.0)
        assert not verify_saddle(game.payoff, cert, game.A, game.B, TOL)

    def test_verify_unbounded_quadratic(self):
        cert = solve("a^2 - b^2", RealLine(), RealLine(), tol=TOL)
        assert verify_saddle("a^2 - b^2", cert, RealLine(), RealLine(), 1e-3)

    def test_verify_rejects_off_center_point_masses(self):
        cert = SaddleCertificate(FiniteSupport.point_mass(1.0), FiniteSupport.point_mass(0.0), 0.5, 1.0, 1.0, 0.0)
        assert not verify_saddle("a^2 - b^2", cert, RealLine(), RealLine(), 1e-3)
        assert verify_saddle("a^2 - b^2", cert, RealLine(), RealLine(), math.inf)

    def test_lopsided_report(self, small_refinement):
        game = GAMES["square_box"]
        cert = _solve("square_box", small_refinement)
        report = lopsided_report(game.payoff, game.A, game.B, cert)
        assert report.attained
        assert report.piA_safety is SafetyClass.SAFE
        assert report.to_json()["upper"] == pytest.approx(1.0)


class TestBudget:

    def test_unconverged_solve_keeps_best_certificate(self, small_search):
        budget = RefinementBudget(max_refine=1, grid_start=5, grid_max=5, search=small_search)
        with pytest.raises(BudgetExhausted) as info:
            solve("(a-0.3)^2 - b^2", Interval(-1, 1), Interval(-1, 1), tol=TOL, budget=budget)
        best = info.value.best
        assert not best.converged
        assert best.eps == pytest.approx(0.04, abs=1e-6)

    def test_exchange_points_close_the_gap(self, small_search):
        budget = RefinementBudget(max_refine=4, grid_start=5, grid_max=5, search=small_search)
        cert = solve("(a-0.3)^2 - b^2", Interval(-1, 1), Interval(-1, 1), tol=TOL, budget=budget)
        assert cert.value == pytest.approx(0.0, abs=TOL)

    def test_level_stays_while_responses_fit(self, small_search):
        budget = RefinementBudget(max_refine=4, grid_start=4, grid_max=4, search=small_search)
        cert = solve("(a-0.3)^2 - b^2", RealLine(), Interval(-1, 1), tol=TOL, budget=budget)
        assert cert.value == pytest.approx(0.0, abs=TOL)
        assert len(cert.history) >= 2
        assert {entry["lambda"] for entry in cert.history} == {cert.lam}

    def test_progress_signal(self, small_refinement):
        progress = SolverProgress()
        seen = []
        progress.iteration_finished.connect(lambda i, eps, value: seen.append((i, value)))
        game = GAMES["square_box"]
        solve(game.payoff, game.A, game.B, tol=TOL, budget=small_refinement, progress=progress)
        assert seen == [(0, 1.0)]


class TestCoercivity:

    def test_quadratic_grows_both_ways(self):
        cert = probe_coercivity("a^2 - b^2", RealLine(), RealLine())
        assert cert.confirmed
        assert set(cert.ends) == {"+", "-"}
        assert cert.anchor_b0 == 0.0

    def test_linear_payoff_is_not_coercive(self):
        cert = probe_coercivity("a*b", RealLine(), RealLine())
        assert not cert.confirmed
        assert GrowthStatus.REFUTED in [r.status for r in cert.ends.values()]
        assert len(cert.attempts) == 8

    def test_compact_side_needs_no_probe(self):
        cert = probe_coercivity("a", Interval(0, 1), RealLine())
        assert cert.confirmed and not cert.ends

    def test_player_two_side(self):
        cert = probe_coercivity(player_two_view("a^2 - b^2"), RealLine(), RealLine())
        assert cert.confirmed

    def test_solve_without_coercivity(self, small_refinement):
        with pytest.raises(CoercivityUnavailable) as info:
            solve("a*b", RealLine(), Interval(-1, 1), budget=small_refinement)
        assert not info.value.certificate.confirmed

    def test_json(self):
        record = probe_coercivity("a^2", RealLine(), RealLine()).to_json()
        assert record["confirmed"] is True
        assert [end["status"] for end in record["ends"]] == ["growth_confirmed"] * 2
        assert math.isfinite(record["anchor_b0"])


class TestTruncation:

    def test_level_four(self):
        cert = probe_coercivity("a^2 - b^2", RealLine(), RealLine(), candidates_b0=[0.0])
        assert truncate(None, cert, 4.0).a_box == pytest.approx((-2.0, 2.0))

    def test_level_zero_is_a_point(self):
        cert = probe_coercivity("a^2 - b^2", RealLine(), RealLine(), candidates_b0=[0.0])
        assert truncate(None, cert, 0.0).a_box == (0.0, 0.0)

    def test_shifted_level_set(self):
        cert = probe_coercivity("(a-3)^2 - b^2", RealLine(), RealLine(), candidates_b0=[0.0])
        assert cert.confirmed
        assert truncate(None, cert, 1.0).a_box == pytest.approx((2.0, 4.0))

    def test_level_below_the_minimum(self):
        cert = probe_coercivity("a^2 + 1 - b^2", RealLine(), RealLine(), candidates_b0=[0.0])
        with pytest.raises(LambdaTooSmall):
            truncate(None, cert, 0.5)
