#!/usr/bin/env python3
# SaddleKit - Bundled Games

"""
Games and families with known answers, shared by the test suite and the
files under games/.
"""

from dataclasses import dataclass

from src.core.domains import FiniteSet, IntegerRange, Interval, RealLine
from src.core.paramlab import FamilyFlags, GameFamily, x_grid
from src.core.turnbased import ConstantMap, IntervalMap, PointsMap, SequentialGame

ALL_FLAGS = FamilyFlags(
    c_lsc=True, c_usc=True, A_lsc_mapping=True, B_lsc_mapping=True,
    B_compact=True, c_bounded_below=True, A_coercive_in_a=True,
)


@dataclass(frozen=True)
class CatalogGame:
    name: str
    payoff: str
    A: object
    B: object
    value: float
    description: str = ""


GAMES = {
    game.name: game
    for game in (
        CatalogGame("quadratic", "a^2 - b^2", RealLine(), RealLine(), 0.0,
                    "convex in a, concave in b; saddle at the origin"),
        CatalogGame("integer_race", "6^a*4^b*[b<a] - 6^b*4^a*[a<b]", IntegerRange(1), IntegerRange(1), 0.0,
                    "antisymmetric integer game with unsafe geometric strategies; saddle at (1, 1)"),
        CatalogGame("square_box", "a^2 - b^2", Interval(1, 2), Interval(0, 1), 1.0,
                    "compact boxes; saddle at (1, 0)"),
        CatalogGame("bilinear", "a*b", Interval(-1, 1), Interval(-1, 1), 0.0,
                    "bilinear on the square"),
        CatalogGame("pennies", "2*[a==b] - 1", FiniteSet.of([0, 1]), FiniteSet.of([0, 1]), 0.0,
                    "matching pennies on two actions"),
    )
}


def _family(name, payoff, grid, phi_b, flags, phi_a=ConstantMap(RealLine())):
    return GameFamily(payoff, grid, phi_a, phi_b, flags, name)


def family(name):
    """A fresh GameFamily from the catalog."""
    factories = {
        "drift": lambda: _family(
            "drift", "(a-x)^2 - b^2", x_grid(-2, 2, 41), ConstantMap(Interval(-1, 1)), ALL_FLAGS,
        ),
        "separable": lambda: _family(
            "separable", "x + a^2 - b^2", x_grid(0, 1, 11), ConstantMap(Interval(-1, 1)), ALL_FLAGS,
        ),
        "switch": lambda: _family(
            "switch", "a^2 + b*[x>0]", x_grid(-1, 1, 41), ConstantMap(Interval(0, 1)),
            FamilyFlags(c_lsc=True, A_lsc_mapping=True, B_lsc_mapping=True, B_compact=True,
                        c_bounded_below=True, A_coercive_in_a=True),
        ),
        "widening": lambda: _family(
            "widening", "a^2 - b^2", x_grid(-1, 1, 11), IntervalMap.from_text("0", "1 + abs(x)"),
            FamilyFlags(c_lsc=True, c_usc=True, A_lsc_mapping=True, B_lsc_mapping=True,
                        c_bounded_below=True, A_coercive_in_a=True),
        ),
    }
    try:
        return factories[name]()
    except KeyError:
        raise KeyError(f"No family named {name!r}") from None


FAMILY_NAMES = ("drift", "separable", "switch", "widening")


def sequential(name):
    """A SequentialGame from the catalog."""
    games = {
        "separable": lambda: SequentialGame(
            "x + a^2 - b^2", ConstantMap(RealLine()), ConstantMap(Interval(-1, 1)),
        ),
        "tracking": lambda: SequentialGame(
            "(a-x)^2 - b^2", ConstantMap(RealLine()), ConstantMap(Interval(-1, 1)),
        ),
        "switch": lambda: SequentialGame(
            "a^2 + b*[x>0]", ConstantMap(RealLine()), ConstantMap(Interval(0, 1)),
        ),
        "reply": lambda: SequentialGame(
            "(b-a)^2 - a", ConstantMap(Interval(0, 1)), IntervalMap.from_text("a - 1", "a + x"),
            Interval(0, 1),
        ),
        "escape": lambda: SequentialGame(
            "b", PointsMap.from_text(["x", "[x>0]/(x + [x==0])"]), IntervalMap.from_text("a", "a"),
            Interval(0, 1),
        ),
        "finite": lambda: SequentialGame(
            "a*b - a", ConstantMap(FiniteSet.of([-1, 0, 1])), ConstantMap(FiniteSet.of([-1, 1])),
        ),
    }
    try:
        return games[name]()
    except KeyError:
        raise KeyError(f"No sequential game named {name!r}") from None


SEQUENTIAL_NAMES = ("separable", "tracking", "switch", "reply", "escape", "finite")
