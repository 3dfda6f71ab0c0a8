#!/usr/bin/env python3
# SaddleKit - Games With Perfect Information

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from src.core.domains import FiniteSet, Interval, RealLine
from src.core.errors import (
    BudgetExhausted,
    EvaluationError,
    EvaluationOverflow,
    OutOfConstraint,
    StructuralViolation,
)
from src.core.expr import BinOp, Num, as_expr, evaluate, evaluate_array, to_text, variables
from src.core.extended import ExtendedPayoff, PayoffKind
from src.core.matrix_game import MatrixGame, solve_lp
from src.core.search import IndicatorConditions, SearchBudget, maximize, minimize
from src.utils.logger import get_logger

TIE_TOL = 1e-6
PURE_TOL = 1e-7
MAX_MIXED_ATOMS = 5
MAX_STRATEGIC_COLUMNS = 4096
POOL_GRID = 17
POOL_DRAWS = 16

logger = get_logger("turnbased")


# ----------------------------------------------------------------------
# Constraint mappings


class ConstraintMap:
    """Set of admissible actions as a function of the state (and Player I's action)."""

    def at(self, x, a=None):
        raise NotImplementedError

    def depends_on(self, name):
        return False

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantMap(ConstraintMap):
    """The same domain for every state."""

    domain: object

    def at(self, x, a=None):
        return self.domain

    def to_json(self):
        return {"kind": "constant", "domain": self.domain.to_json()}


def _endpoint(node, x, a, default):
    if node is None:
        return default
    try:
        return evaluate(node, x=x, a=a)
    except EvaluationError as e:
        raise StructuralViolation(f"Constraint endpoint {to_text(node)} undefined at x={x!r}, a={a!r}: {e}") from None


@dataclass(frozen=True)
class IntervalMap(ConstraintMap):
    """
    [lo(x, a), hi(x, a)] with expression endpoints; ``None`` stands for an
    infinite end. A degenerate interval becomes a one-point set.
    """

    lo: object = None
    hi: object = None

    @classmethod
    def from_text(cls, lo_text, hi_text, params=()):
        def endpoint(text):
            token = str(text).strip().lower()
            if token in ("inf", "+inf", "-inf", ""):
                return None
            return as_expr(text, params)

        return cls(endpoint(lo_text), endpoint(hi_text))

    def at(self, x, a=None):
        lo = _endpoint(self.lo, x, a, -math.inf)
        hi = _endpoint(self.hi, x, a, math.inf)
        if hi < lo:
            raise StructuralViolation(f"Empty constraint set [{lo!r}, {hi!r}] at x={x!r}, a={a!r}")
        if lo == hi:
            return FiniteSet((float(lo),))
        if lo == -math.inf and hi == math.inf:
            return RealLine()
        return Interval(float(lo), float(hi))

    def depends_on(self, name):
        return any(node is not None and name in variables(node) for node in (self.lo, self.hi))

    def to_json(self):
        return {
            "kind": "interval",
            "lo": to_text(self.lo) if self.lo is not None else "-inf",
            "hi": to_text(self.hi) if self.hi is not None else "inf",
        }


@dataclass(frozen=True)
class PointsMap(ConstraintMap):
    """Finitely many expression-valued points, e.g. {x, 1/x}."""

    points: tuple

    @classmethod
    def from_text(cls, texts, params=()):
        return cls(tuple(as_expr(text, params) for text in texts))

    def at(self, x, a=None):
        values = [_endpoint(node, x, a, math.nan) for node in self.points]
        return FiniteSet.of(values)

    def depends_on(self, name):
        return any(name in variables(node) for node in self.points)

    def to_json(self):
        return {"kind": "points", "points": [to_text(node) for node in self.points]}


# ----------------------------------------------------------------------
# Game and records


@dataclass(frozen=True)
class SequentialGame:
    """
    One-step game with perfect information: at state x Player I picks
    a in A(x), Player II observes it and picks b in B(x, a); I pays f(x, a, b).
    """

    f: object
    phi_a: ConstraintMap
    phi_b: ConstraintMap
    x_domain: object = RealLine()

    def __post_init__(self):
        object.__setattr__(self, "f", as_expr(self.f))

    def shifted(self, kappa):
        """The same game with ``kappa`` added to the payoff."""
        return SequentialGame(BinOp("+", self.f, Num(float(kappa))), self.phi_a, self.phi_b, self.x_domain)

    def a_set(self, x):
        if not self.x_domain.contains(x):
            raise OutOfConstraint(f"State {x!r} lies outside {self.x_domain}")
        return self.phi_a.at(x)

    def b_set(self, x, a):
        return self.phi_b.at(x, a)

    def to_json(self):
        return {
            "payoff": to_text(self.f),
            "x_domain": self.x_domain.to_json(),
            "phi_a": self.phi_a.to_json(),
            "phi_b": self.phi_b.to_json(),
        }


@dataclass
class Cluster:
    """Run of near-optimal samples; ``point`` is the best sample inside it."""

    lo: float
    hi: float
    point: float

    def to_json(self):
        return {"lo": self.lo, "hi": self.hi, "point": self.point}


@dataclass
class ValueRecord:
    """Constrained minimum of a function of (x, a) and where it is attained."""

    x: float
    value: ExtendedPayoff
    argmin: list
    clusters: list
    box: tuple

    def to_json(self):
        return {
            "x": self.x,
            "value": self.value.to_json(),
            "argmin": list(self.argmin),
            "clusters": [c.to_json() for c in self.clusters],
        }


@dataclass
class MinimaxRecord:
    x: float
    v_sharp: ExtendedPayoff
    argmin_a_set: list
    argmin_clusters: list = field(default_factory=list)
    argmax_b_for_best_a: list = field(default_factory=list)
    a_samples: np.ndarray = None
    worst_loss_samples: np.ndarray = None
    a_box: tuple = None

    def to_json(self):
        return {
            "x": self.x,
            "v_sharp": self.v_sharp.to_json(),
            "argmin_a_set": [float(a) for a in self.argmin_a_set],
            "argmin_clusters": [c.to_json() for c in self.argmin_clusters],
            "argmax_b_for_best_a": [float(b) for b in self.argmax_b_for_best_a],
        }


def solution_clusters(result, tie_tol=TIE_TOL, maximizing=False):
    """
    Near-optimal samples of a SearchResult grouped into clusters; samples
    closer than twice the grid step share a cluster.
    """
    if not result.value.is_finite:
        if result.argbest is None:
            return []
        return [Cluster(result.argbest, result.argbest, result.argbest)]

    close = np.abs(result.values - result.value.value) <= tie_tol
    points = result.points[close]
    values = result.values[close]
    if not len(points):
        return []

    merge_gap = 2.0 * result.grid_step
    clusters = []
    start = 0
    for i in range(1, len(points) + 1):
        if i < len(points) and points[i] - points[i - 1] < merge_gap:
            continue
        chunk = values[start:i]
        best = int(np.argmax(chunk) if maximizing else np.argmin(chunk))
        clusters.append(Cluster(float(points[start]), float(points[i - 1]), float(points[start + best])))
        start = i
    return clusters


# ----------------------------------------------------------------------
# Worst loss and minimax


def _payoff_objective(f, x, a):
    def objective(bs):
        try:
            return evaluate_array(f, x=x, a=a, b=bs, signed_overflow=True)
        except EvaluationOverflow:
            return _pointwise(f, x, a, bs)

    return objective


def _pointwise(f, x, a, bs):
    out = np.empty(len(bs))
    for i, b in enumerate(bs):
        try:
            out[i] = evaluate_array(f, x=x, a=a, b=b, signed_overflow=True)
        except EvaluationOverflow:
            out[i] = math.nan
    return out


def worst_loss_search(g, x, a, budget=None):
    """SearchResult of sup over b in B(x, a) of f(x, a, b)."""
    A = g.a_set(x)
    if not A.contains(a):
        raise OutOfConstraint(f"Action {a!r} lies outside A({x!r}) = {A}")
    B = g.b_set(x, a)
    conditions = IndicatorConditions(g.f, "b", {"a": np.array([a])}, x=x)
    return maximize(_payoff_objective(g.f, x, a), B, budget or SearchBudget(), conditions)


def worst_loss(g, x, a, budget=None):
    """f#(x, a): the largest loss Player II can inflict after seeing a."""
    return worst_loss_search(g, x, a, budget).value


def _worst_loss_objective(g, x, budget):
    def objective(actions):
        out = np.empty(len(actions))
        for i, a in enumerate(actions):
            out[i] = worst_loss_search(g, x, float(a), budget).value.as_float()
        return out

    return objective


def _constrained_minimum(f, phi, x, budget, tie_tol):
    domain = phi.at(x)
    if callable(f):
        objective = f
        conditions = None
    else:
        node = as_expr(f)
        objective = _action_objective(node, x)
        conditions = IndicatorConditions(node, "a", x=x)

    result = minimize(objective, domain, budget, conditions)
    clusters = solution_clusters(result, tie_tol)
    return ValueRecord(
        float(x), result.value, [c.point for c in clusters], clusters, result.box,
    ), result


def value_function(f, phi, x, budget=None, tie_tol=TIE_TOL):
    """
    f*(x) = inf over a in phi(x) of f(x, a), with the near-optimal set.

    ``f`` is an expression in x and a, or a callable mapping an array of
    actions to values.
    """
    record, _ = _constrained_minimum(f, phi, x, budget or SearchBudget(), tie_tol)
    return record


def _action_objective(node, x):
    def objective(actions):
        try:
            return evaluate_array(node, x=x, a=actions, signed_overflow=True)
        except EvaluationOverflow:
            out = np.empty(len(actions))
            for i, a in enumerate(actions):
                try:
                    out[i] = evaluate_array(node, x=x, a=a, signed_overflow=True)
                except EvaluationOverflow:
                    out[i] = math.nan
            return out

    return objective


def minimax(g, x, budget=None, tie_tol=TIE_TOL):
    """
    v#(x) = inf over a in A(x) of f#(x, a).

    Raises BudgetExhausted (best = upper bound) when growth along an
    unbounded A(x) can neither be confirmed nor ruled out.
    """
    budget = budget or SearchBudget()
    phi_a = _StateMap(g)
    try:
        record, result = _constrained_minimum(_worst_loss_objective(g, x, budget), phi_a, x, budget, tie_tol)
    except BudgetExhausted as e:
        raise BudgetExhausted(f"Minimax at x={x!r} undecided: {e}", best=e.best) from None

    argmax_b = []
    if record.value.is_finite and result.argbest is not None:
        inner = worst_loss_search(g, x, result.argbest, budget)
        argmax_b = [c.point for c in solution_clusters(inner, tie_tol, maximizing=True)]

    logger.debug(f"Minimax at x={x!r}: {record.value}, argmin {record.argmin}, argmax_b {argmax_b}")
    return MinimaxRecord(
        float(x), record.value, record.argmin, record.clusters, argmax_b,
        result.points, result.values, record.box,
    )


class _StateMap(ConstraintMap):
    """A(x) of a game, with the state check."""

    def __init__(self, game):
        """Initialize the mapping."""
        self.game = game

    def at(self, x, a=None):
        return self.game.a_set(x)


# ----------------------------------------------------------------------
# Pure strategies suffice


@dataclass
class PureSufficiencyReport:
    x: float
    pure_value: float
    max_violation: float
    samples: int
    lp_value: float = None
    lp_gap: float = None

    @property
    def passed(self):
        ok = self.max_violation <= PURE_TOL
        if self.lp_gap is not None:
            ok = ok and self.lp_gap <= PURE_TOL * max(1.0, abs(self.pure_value))
        return ok

    def to_json(self):
        return {
            "x": self.x,
            "pure_value": self.pure_value,
            "max_violation": self.max_violation,
            "samples": self.samples,
            "lp_value": self.lp_value,
            "lp_gap": self.lp_gap,
            "passed": self.passed,
        }


def _random_weights(rng, pool_size):
    """Atoms and Dirichlet weights of a random finite-support mixture over a pool."""
    size = int(rng.integers(1, min(MAX_MIXED_ATOMS, pool_size) + 1))
    chosen = rng.choice(pool_size, size=size, replace=False)
    return chosen, rng.dirichlet(np.ones(size))


def _action_pool(rng, domain, box, extra=()):
    """Discretized members of ``domain`` inside ``box`` plus uniform draws snapped into it."""
    lo, hi = box if box else domain.hull()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        center = domain.reference_point()
        lo, hi = center - 1.0, center + 1.0
    draws = [domain.snap(u) for u in rng.uniform(lo, hi, POOL_DRAWS)]
    candidates = np.concatenate([domain.grid(lo, hi, POOL_GRID), np.array(draws, dtype=float), np.array(extra, dtype=float)])
    return np.array([p for p in np.unique(candidates) if domain.contains(p)])


def _reply_payoffs(g, x, actions, budget):
    """f(x, a, b(a)) with b(a) Player II's best reply, evaluated at the reply itself."""
    payoffs = np.empty(len(actions))
    for i, a in enumerate(actions):
        inner = worst_loss_search(g, x, float(a), budget)
        if inner.value.kind is PayoffKind.PLUS_INFINITY:
            payoffs[i] = math.inf
        elif not inner.value.is_finite or inner.argbest is None:
            payoffs[i] = math.nan
        else:
            payoffs[i] = _pointwise(g.f, x, float(a), np.array([inner.argbest]))[0]
    return payoffs


def strategic_form(g, x):
    """
    Matrix of the game in which Player II commits to a reply for every a;
    None when a constraint set is not finite or the form is too large.
    """
    A = g.a_set(x)
    if not isinstance(A, FiniteSet):
        return None
    replies = []
    for a in A.points:
        B = g.b_set(x, a)
        if not isinstance(B, FiniteSet):
            return None
        replies.append(B.points)
    if math.prod(len(r) for r in replies) > MAX_STRATEGIC_COLUMNS:
        return None

    plans = list(itertools.product(*(range(len(r)) for r in replies)))
    payoff = np.empty((len(A.points), len(plans)))
    for i, a in enumerate(A.points):
        bs = np.array([replies[i][plan[i]] for plan in plans])
        payoff[i] = evaluate_array(g.f, x=x, a=a, b=bs)
    return MatrixGame(payoff, np.array(A.points))


def check_pure_sufficiency(g, x, n_mixed_samples=100, seed=0, budget=None):
    """
    Play random finite-support mixed strategies of both movers against the
    opponent's best reply and report the largest amount by which one of them
    improves on the pure minimax value.

    A mixed strategy of Player I is scored by the payoff at each atom against
    a fresh best reply; a mixed strategy of Player II at a fixed a is scored
    by the payoff at its atoms. Point masses at the reported minimizer and
    at each reported best reply are always among the samples. Finite games
    are cross-checked against the simplex value of their strategic form.
    """
    budget = budget or SearchBudget()
    rng = np.random.default_rng(seed)
    record = minimax(g, x, budget)
    if not record.v_sharp.is_finite:
        raise OutOfConstraint(f"Minimax at x={x!r} is {record.v_sharp}, not finite")
    pure = record.v_sharp.value
    A = g.a_set(x)

    a_pool = _action_pool(rng, A, record.a_box, record.argmin_a_set)
    a_payoffs = _reply_payoffs(g, x, a_pool, budget)
    usable = ~np.isnan(a_payoffs)
    a_pool, a_payoffs = a_pool[usable], a_payoffs[usable]
    if not len(a_pool):
        raise OutOfConstraint(f"No action of A({x!r}) has a defined best reply")

    violation = -math.inf
    if record.argmin_a_set:
        best = np.flatnonzero(a_pool == record.argmin_a_set[0])
        if len(best):
            violation = pure - float(a_payoffs[best[0]])
    for _ in range(n_mixed_samples):
        chosen, weights = _random_weights(rng, len(a_pool))
        if np.all(np.isfinite(a_payoffs[chosen])):
            violation = max(violation, pure - float(weights @ a_payoffs[chosen]))

    probes = list(record.argmin_a_set[:1])
    probes += [float(a) for a in rng.choice(a_pool, size=min(4, len(a_pool)), replace=False)]
    per_probe = max(1, n_mixed_samples // max(1, len(probes)))
    for a in probes:
        inner = worst_loss_search(g, x, float(a), budget)
        if not inner.value.is_finite:
            continue
        b_pool = _action_pool(rng, g.b_set(x, a), inner.box, [inner.argbest])
        reply = _pointwise(g.f, x, float(a), np.array([inner.argbest]))[0]
        violation = max(violation, float(reply) - inner.value.value)
        b_payoffs = _pointwise(g.f, x, float(a), b_pool)
        finite = np.isfinite(b_payoffs)
        b_payoffs = b_payoffs[finite]
        if not len(b_payoffs):
            continue
        for _ in range(per_probe):
            chosen, weights = _random_weights(rng, len(b_payoffs))
            violation = max(violation, float(weights @ b_payoffs[chosen]) - inner.value.value)

    report = PureSufficiencyReport(float(x), pure, max(violation, 0.0), n_mixed_samples)
    game = strategic_form(g, x)
    if game is not None:
        solution = solve_lp(game)
        report.lp_value = solution.value
        report.lp_gap = abs(solution.value - pure)

    logger.debug(f"Pure sufficiency at x={x!r}: violation {report.max_violation!r}, lp gap {report.lp_gap!r}")
    return report
