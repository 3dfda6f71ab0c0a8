#!/usr/bin/env python3
# SaddleKit - Game File Reader

"""
INI-style game files.

    [game]        payoff, a_domain, b_domain, optional x
    [params]      name = number, usable in every expression
    [family]      x_grid = lo:hi:n, optional a_lo/a_hi/b_lo/b_hi in x, profile
    [flags]       continuity-class booleans of a family
    [sequential]  x_domain, a_points or a_lo/a_hi, b_lo/b_hi in (x, a), x_grid

A file has exactly one shape: game-only, family or sequential.
"""

import configparser
import math
from dataclasses import dataclass, field

from src.core.domains import RealLine, parse_domain
from src.core.errors import ExprError, GameFileError, SaddleKitError
from src.core.expr import bind, parse, variables
from src.core.paramlab import FamilyFlags, GameFamily, x_grid
from src.core.turnbased import ConstantMap, IntervalMap, PointsMap, SequentialGame
from src.utils.logger import get_logger

logger = get_logger("game_file")

SECTIONS = ("game", "params", "family", "flags", "sequential")
GAME_KEYS = ("payoff", "a_domain", "b_domain", "x")
FAMILY_KEYS = ("x_grid", "a_lo", "a_hi", "b_lo", "b_hi", "profile")
SEQUENTIAL_KEYS = ("x_domain", "a_points", "a_lo", "a_hi", "b_lo", "b_hi", "x_grid")


@dataclass
class GameSpec:
    """A parsed game file."""

    shape: str
    payoff: object
    A: object
    B: object
    x: float = None
    params: dict = field(default_factory=dict)
    family: GameFamily = None
    sequential: SequentialGame = None
    profile: str = None
    x_grid: object = None
    source: str = "<string>"

    def game_at(self, x=None):
        """(payoff, A, B) of the single game at state ``x``."""
        x = self.x if x is None else x
        if self.shape == "family":
            if x is None:
                raise GameFileError(f"{self.source}: a family needs a state x")
            return self.payoff, self.family.A(x), self.family.B(x)
        if self.shape == "sequential":
            raise GameFileError(f"{self.source}: a sequential game has no simultaneous form")
        if x is None and "x" in variables(self.payoff):
            raise GameFileError(f"{self.source}: payoff uses x but no state is given")
        return self.payoff, self.A, self.B

    def sequential_game(self):
        """The file as a turn-based game; a game-only file plays with constant sets."""
        if self.sequential is not None:
            return self.sequential
        if self.shape == "game":
            return SequentialGame(self.payoff, ConstantMap(self.A), ConstantMap(self.B))
        raise GameFileError(f"{self.source}: a family file has no turn-based form")


def parse_grid(text):
    """'lo:hi:n' -> numpy grid."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise GameFileError(f"Grid must read lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise GameFileError(f"Grid must read lo:hi:n, got {text!r}") from None
    if n < 1 or (n > 1 and not lo < hi) or not (math.isfinite(lo) and math.isfinite(hi)):
        raise GameFileError(f"Grid needs finite lo < hi and n >= 1, got {text!r}")
    return x_grid(lo, hi, n)


def _strip(value):
    return value.strip().strip('"').strip("'")


def _expression(text, params, allowed, where):
    try:
        node = bind(parse(_strip(text), tuple(params)), params)
    except ExprError as e:
        raise GameFileError(f"{where}: {e}") from e
    extra = variables(node) - set(allowed)
    if extra:
        raise GameFileError(f"{where}: may only use {', '.join(allowed)}, found {', '.join(sorted(extra))}")
    return node


def _check_keys(parser, section, known):
    unknown = set(parser[section]) - set(known)
    if unknown:
        raise GameFileError(f"Unknown keys in [{section}]: {', '.join(sorted(unknown))}")


def _params(parser):
    params = {}
    if not parser.has_section("params"):
        return params
    for name, text in parser["params"].items():
        if name in ("x", "a", "b") or not name.isidentifier():
            raise GameFileError(f"Invalid parameter name {name!r}")
        try:
            params[name] = float(_strip(text))
        except ValueError:
            raise GameFileError(f"Parameter {name} is not a number: {text!r}") from None
    return params


def _interval_map(section, lo_key, hi_key, params, allowed, fallback):
    if lo_key not in section and hi_key not in section:
        return ConstantMap(fallback)

    def endpoint(key):
        text = _strip(section.get(key, ""))
        if text.lower() in ("", "inf", "+inf", "-inf"):
            return None
        return _expression(text, params, allowed, f"[{section.name}] {key}")

    return IntervalMap(endpoint(lo_key), endpoint(hi_key))


def _flags(parser):
    if not parser.has_section("flags"):
        return FamilyFlags()
    values = {}
    for name in parser["flags"]:
        try:
            values[name] = parser["flags"].getboolean(name)
        except ValueError:
            raise GameFileError(f"[flags] {name} is not a boolean") from None
    try:
        return FamilyFlags.from_mapping(values)
    except (KeyError, ValueError) as e:
        raise GameFileError(f"[flags] {e}") from None


def loads(text, source="<string>"):
    """Parse game-file text into a GameSpec."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise GameFileError(f"{source}: {e}") from None

    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise GameFileError(f"{source}: unknown sections {', '.join(sorted(unknown))}")
    if not parser.has_section("game"):
        raise GameFileError(f"{source}: missing [game] section")
    if parser.has_section("family") and parser.has_section("sequential"):
        raise GameFileError(f"{source}: a file is either a family or a sequential game, not both")
    if parser.has_section("flags") and not parser.has_section("family"):
        raise GameFileError(f"{source}: [flags] belongs to a [family]")
    _check_keys(parser, "game", GAME_KEYS)

    params = _params(parser)
    game = parser["game"]
    if "payoff" not in game:
        raise GameFileError(f"{source}: [game] needs a payoff")
    payoff = _expression(game["payoff"], params, ("x", "a", "b"), "[game] payoff")

    A = parse_domain(game.get("a_domain", "reals"))
    B = parse_domain(game.get("b_domain", "reals"))
    x = None
    if "x" in game:
        try:
            x = float(_strip(game["x"]))
        except ValueError:
            raise GameFileError(f"{source}: [game] x is not a number") from None

    spec = GameSpec("game", payoff, A, B, x, params, source=source)

    try:
        if parser.has_section("family"):
            _check_keys(parser, "family", FAMILY_KEYS)
            section = parser["family"]
            if "x_grid" not in section:
                raise GameFileError(f"{source}: [family] needs x_grid")
            spec.shape = "family"
            spec.x_grid = parse_grid(_strip(section["x_grid"]))
            spec.profile = _strip(section.get("profile", "lsc"))
            phi_a = _interval_map(section, "a_lo", "a_hi", params, ("x",), A)
            phi_b = _interval_map(section, "b_lo", "b_hi", params, ("x",), B)
            spec.family = GameFamily(payoff, spec.x_grid, phi_a, phi_b, _flags(parser), source)

        elif parser.has_section("sequential"):
            _check_keys(parser, "sequential", SEQUENTIAL_KEYS)
            section = parser["sequential"]
            spec.shape = "sequential"
            if "a_points" in section and ("a_lo" in section or "a_hi" in section):
                raise GameFileError(f"{source}: [sequential] takes a_points or a_lo/a_hi, not both")
            if "a_points" in section:
                points = [p for p in _strip(section["a_points"]).split(";") if p.strip()]
                phi_a = PointsMap(tuple(
                    _expression(p, params, ("x",), "[sequential] a_points") for p in points
                ))
            else:
                phi_a = _interval_map(section, "a_lo", "a_hi", params, ("x",), A)
            phi_b = _interval_map(section, "b_lo", "b_hi", params, ("x", "a"), B)
            x_domain = parse_domain(section.get("x_domain", "reals")) if "x_domain" in section else RealLine()
            if "x_grid" in section:
                spec.x_grid = parse_grid(_strip(section["x_grid"]))
            spec.sequential = SequentialGame(payoff, phi_a, phi_b, x_domain)
    except GameFileError:
        raise
    except SaddleKitError as e:
        raise GameFileError(f"{source}: {e}") from e

    logger.debug(f"Read {spec.shape} game from {source}")
    return spec


def load(path):
    """Read and parse a game file."""
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise GameFileError(f"Cannot read game file {path}: {e}") from None
    return loads(text, str(path))
