#!/usr/bin/env python3
# SaddleKit - Lopsided Values of Noncompact Games

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from PyQt6.QtCore import QObject, pyqtSignal

from src.core.domains import FiniteSet
from src.core.errors import (
    BudgetExhausted,
    CoercivityUnavailable,
    LambdaTooSmall,
    NumericalFailure,
)
from src.core.expr import as_expr, evaluate_array, negate, swap_players
from src.core.matrix_game import MatrixGame, solve_lp
from src.core.measures import (
    FiniteSupport,
    SafetyClass,
    c_flat,
    c_flat_search,
    c_sharp,
    c_sharp_search,
    classify_safety,
)
from src.core.search import SearchBudget
from src.utils.logger import get_logger

GROWTH_STEPS = 4
BISECTION_STEPS = 64
FILL_POINTS = 33
EXCHANGE_LIMIT = 64

logger = get_logger("continuous_game")


class GrowthStatus(str, Enum):
    CONFIRMED = "growth_confirmed"
    REFUTED = "growth_refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass
class EndReport:
    """Probe record along one unbounded end of the action set."""

    end: str
    status: GrowthStatus
    radii: list
    values: list
    sample: tuple = None

    def to_json(self):
        return {
            "end": self.end,
            "status": self.status.value,
            "sample": list(self.sample) if self.sample else None,
        }


@dataclass
class CoercivityCertificate:
    """
    Evidence that a -> c(a, b0) grows toward every unbounded end of ``domain``.

    ``expression`` is the payoff as probed (the swapped, negated payoff for
    Player II's side).
    """

    expression: object
    domain: object
    anchor_b0: float | None
    base: float
    ends: dict = field(default_factory=dict)
    attempts: list = field(default_factory=list)

    @property
    def confirmed(self):
        return all(report.status is GrowthStatus.CONFIRMED for report in self.ends.values())

    def to_json(self):
        return {
            "anchor_b0": self.anchor_b0,
            "confirmed": self.confirmed,
            "ends": [self.ends[end].to_json() for end in sorted(self.ends)],
            "candidates_tried": list(self.attempts),
        }


@dataclass
class LevelTruncation:
    lam: float
    a_box: tuple
    b_box: tuple = None

    def to_json(self):
        return {"lambda": self.lam, "a_box": list(self.a_box), "b_box": list(self.b_box) if self.b_box else None}


@dataclass(frozen=True)
class RefinementBudget:
    max_refine: int = 12
    grid_start: int = 33
    grid_max: int = 257
    lp_tol: float = 1e-9
    atom_threshold: float = 1e-12
    search: SearchBudget = SearchBudget()


@dataclass
class SaddleCertificate:
    """
    Finite-support strategy pair with its verified duality gap.

    ``sharp`` is the worst case of ``piA`` over the continuous B-domain and
    ``flat`` the guarantee of ``piB`` over the continuous A-domain; ``eps`` is
    ``sharp - flat``.
    """

    piA: FiniteSupport
    piB: FiniteSupport
    value: float
    eps: float
    sharp: float
    flat: float
    a_box: tuple = None
    b_box: tuple = None
    lam: float = None
    iterations: int = 0
    converged: bool = False
    history: list = field(default_factory=list)

    @property
    def sharp_minus_value(self):
        return self.sharp - self.value

    @property
    def value_minus_flat(self):
        return self.value - self.flat

    def swapped(self):
        """Certificate of the game {B, A, -c with a and b exchanged}."""
        return replace(
            self, piA=self.piB, piB=self.piA, value=-self.value,
            sharp=-self.flat, flat=-self.sharp, a_box=self.b_box, b_box=self.a_box,
        )

    def to_json(self):
        return {
            "value": self.value,
            "eps": self.eps,
            "sharp": self.sharp,
            "flat": self.flat,
            "sharp_minus_value": self.sharp_minus_value,
            "value_minus_flat": self.value_minus_flat,
            "piA": self.piA.to_json(),
            "piB": self.piB.to_json(),
            "a_box": list(self.a_box) if self.a_box else None,
            "b_box": list(self.b_box) if self.b_box else None,
            "lambda": self.lam,
            "iterations": self.iterations,
            "converged": self.converged,
            "history": self.history,
        }


class SolverProgress(QObject):
    """Progress notification of the refinement loop."""

    # Signals
    iteration_finished = pyqtSignal(int, float, float)  # iteration, eps, value


# ----------------------------------------------------------------------
# Coercivity


def _anchor_candidates(B, count=8):
    """Reference point of B, then its doubling neighbours, as members of B."""
    base = B.reference_point()
    seen = [base]
    for j in range(64):
        for sign in (1.0, -1.0):
            point = B.snap(base + sign * (2.0 ** j - 1 if B.discrete else 2.0 ** j))
            if point not in seen and B.contains(point):
                seen.append(point)
            if len(seen) >= count:
                return seen
    return seen


def _base_point(domain):
    if math.isfinite(domain.lower):
        return float(domain.lower)
    if math.isfinite(domain.upper):
        return float(domain.upper)
    return 0.0


def _increasing(left, right):
    return right > left or (right == math.inf and left == math.inf)


def _probe_end(c, domain, end, base, b0, radii, x):
    sign = 1.0 if end == "+" else -1.0
    points = base + sign * np.asarray(radii, dtype=float)
    values = evaluate_array(c, x=x, a=points, b=b0, signed_overflow=True)

    last_refutation = 0
    for i in range(len(values) - 1):
        if not _increasing(values[i], values[i + 1]):
            last_refutation = i + 1

    rises = len(values) - 1 - last_refutation
    if last_refutation == len(values) - 1:
        status = GrowthStatus.REFUTED
        sample = (float(points[-1]), float(values[-1]))
    elif rises >= GROWTH_STEPS:
        status = GrowthStatus.CONFIRMED
        sample = (float(points[last_refutation]), float(values[last_refutation]))
    else:
        status = GrowthStatus.INCONCLUSIVE
        sample = (float(points[-1]), float(values[-1]))

    return EndReport(end, status, [float(r) for r in radii], [float(v) for v in values], sample)


def probe_coercivity(c, A, B=None, candidates_b0=None, radii=None, x=None, max_doublings=40):
    """
    Probe a -> c(a, b0) along every unbounded end of A with doubling radii.

    Picks the first candidate b0 with growth confirmed on all ends; otherwise
    the returned certificate is unconfirmed and keeps the best attempt.
    """
    c = as_expr(c)
    if candidates_b0 is None:
        candidates_b0 = _anchor_candidates(B) if B is not None else [0.0]
    candidates_b0 = [float(b) for b in candidates_b0]
    radii = list(radii) if radii is not None else [2.0 ** j for j in range(max_doublings + 1)]
    base = _base_point(A)

    if not A.unbounded_ends():
        return CoercivityCertificate(c, A, candidates_b0[0] if candidates_b0 else None, base)

    best = None
    tried = []
    for b0 in candidates_b0:
        tried.append(b0)
        ends = {end: _probe_end(c, A, end, base, b0, radii, x) for end in A.unbounded_ends()}
        certificate = CoercivityCertificate(c, A, b0, base, ends, list(tried))
        confirmed = sum(report.status is GrowthStatus.CONFIRMED for report in ends.values())
        logger.debug(f"Coercivity at b0={b0:g}: " + ", ".join(f"{e}:{r.status.value}" for e, r in ends.items()))
        if certificate.confirmed:
            return certificate
        if best is None or confirmed > best[0]:
            best = (confirmed, certificate)

    best[1].attempts = list(tried)
    return best[1]


def player_two_view(c):
    """Payoff of the swapped game, so Player II's side can be probed as Player I's."""
    return negate(swap_players(as_expr(c)))


# ----------------------------------------------------------------------
# Truncation


def _candidate_points(domain, base, radii):
    points = [base]
    for end in domain.unbounded_ends():
        sign = 1.0 if end == "+" else -1.0
        previous = base
        for radius in radii:
            current = base + sign * radius
            points.extend(np.linspace(previous, current, FILL_POINTS)[1:].tolist())
            previous = current
    points = np.array(sorted(set(points)))
    if domain.discrete:
        points = np.unique(np.array([domain.snap(p) for p in points]))
    return points[(points >= domain.lower) & (points <= domain.upper)]


def _bisect_boundary(f, lam, inside, outside, discrete):
    """Move ``inside`` (in the level set) toward ``outside``; returns the inner point."""
    if discrete:
        while abs(outside - inside) > 1:
            middle = math.floor((inside + outside) / 2)
            if f(middle) <= lam:
                inside = middle
            else:
                outside = middle
        return float(inside)

    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (inside + outside)
        if middle == inside or middle == outside:
            break
        if f(middle) <= lam:
            inside = middle
        else:
            outside = middle
    return float(inside)


def truncate(c, cert, lam, x=None):
    """
    Box around {a : c(a, b0) <= lam} over the probe range of ``cert``.

    Finite ends of the domain are kept; each boundary toward an unbounded end
    is located by bisection between the outermost member of the level set and
    the next candidate outside it.
    """
    c = as_expr(cert.expression if c is None else c)
    domain = cert.domain
    if not domain.unbounded_ends():
        return LevelTruncation(lam, domain.hull())

    b0 = cert.anchor_b0
    radii = next(iter(cert.ends.values())).radii if cert.ends else [2.0 ** j for j in range(41)]

    def f(a):
        return float(evaluate_array(c, x=x, a=a, b=b0, signed_overflow=True))

    points = _candidate_points(domain, cert.base, radii)
    values = evaluate_array(c, x=x, a=points, b=b0, signed_overflow=True)
    inside = np.nonzero(values <= lam)[0]
    if not len(inside):
        raise LambdaTooSmall(f"No candidate satisfies c(a, {b0:g}) <= {lam!r}")

    first, last = int(inside[0]), int(inside[-1])
    lo = float(points[first])
    hi = float(points[last])
    if first > 0:
        lo = _bisect_boundary(f, lam, lo, float(points[first - 1]), domain.discrete)
    elif math.isfinite(domain.lower):
        lo = float(domain.lower)
    if last < len(points) - 1:
        hi = _bisect_boundary(f, lam, hi, float(points[last + 1]), domain.discrete)
    elif math.isfinite(domain.upper):
        hi = float(domain.upper)

    return LevelTruncation(lam, (lo, hi))


# ----------------------------------------------------------------------
# Solver


def _grid_size(iteration, budget):
    size = budget.grid_start
    for _ in range(iteration):
        size = 2 * size - 1
    return min(size, budget.grid_max)


def _action_grid(domain, box, size, exchange, tol):
    lo, hi = box
    if isinstance(domain, FiniteSet):
        points = np.array(domain.points)
    else:
        if hi - lo < tol and not domain.discrete:
            lo, hi = lo - tol, hi + tol
        points = domain.grid(lo, hi, size)
    extra = [p for p in exchange if domain.contains(p)]
    return np.unique(np.concatenate([points, np.array(extra, dtype=float)]))


class _Side:
    """Truncation state of one player."""

    def __init__(self, c, domain, other, x, label):
        """Initialize the side."""
        self.domain = domain
        self.label = label
        self.exchange = []
        self.certificate = None
        self.lam = None
        if self.needs_truncation:
            self.certificate = probe_coercivity(c, domain, other, x=x)
            if not self.certificate.confirmed:
                raise CoercivityUnavailable(
                    f"No anchor makes the payoff coercive for Player {label} on {domain}",
                    certificate=self.certificate,
                )

    @property
    def needs_truncation(self):
        return not isinstance(self.domain, FiniteSet) and bool(self.domain.unbounded_ends())

    def start(self, c, x, lambda0):
        if not self.needs_truncation:
            return
        if lambda0 is not None:
            self.lam = float(lambda0)
            return
        reference = self.domain.reference_point()
        start = float(evaluate_array(c, x=x, a=reference, b=self.certificate.anchor_b0, signed_overflow=True))
        self.lam = start + 1.0

    def box(self, x):
        if not self.needs_truncation:
            return self.domain.hull()
        while True:
            try:
                return truncate(None, self.certificate, self.lam, x=x).a_box
            except LambdaTooSmall:
                self.lam = 2 * abs(self.lam) + 1

    def grow(self):
        if self.lam is not None:
            self.lam = 2 * abs(self.lam) + 1

    def grow_if_escaped(self, point, box):
        """Widen the level set when a best response lies outside the current box."""
        if self.lam is None or point is None or box[0] <= point <= box[1]:
            return False
        self.grow()
        return True

    def add_exchange(self, point):
        if point is None or not math.isfinite(point) or point in self.exchange:
            return
        self.exchange.append(float(point))
        del self.exchange[:-EXCHANGE_LIMIT]


def solve(c, A, B, tol=1e-4, budget=None, x=None, lambda0=None, progress=None):
    """
    epsilon-saddle certificate by level-set truncation and grid refinement.

    Each iteration grids the truncation boxes (plus exchange points: best
    responses found while measuring the gap), solves the matrix game, and
    measures the duality gap of the grid strategies against the full domains.
    The level lambda of a side doubles (2|lambda| + 1) only when that side's
    best response falls outside its box, or when the gap stops shrinking on
    the largest grid. Stops once the gap is at most ``tol``; otherwise raises
    BudgetExhausted carrying the best certificate.
    """
    c = as_expr(c)
    budget = budget or RefinementBudget()
    swapped = player_two_view(c)

    side_a = _Side(c, A, B, x, "I")
    side_b = _Side(swapped, B, A, x, "II")
    side_a.start(c, x, lambda0)
    side_b.start(swapped, x, lambda0)

    best = None
    previous_eps = None
    history = []
    for iteration in range(budget.max_refine):
        a_box = side_a.box(x)
        b_box = side_b.box(x)
        size = _grid_size(iteration, budget)
        a_points = _action_grid(A, a_box, size, side_a.exchange, tol)
        b_points = _action_grid(B, b_box, size, side_b.exchange, tol)

        payoff = evaluate_array(c, x=x, a=a_points[:, None], b=b_points[None, :])
        game = MatrixGame(payoff, a_points, b_points)
        try:
            solution = solve_lp(game, budget.lp_tol)
        except NumericalFailure as e:
            if e.best is None:
                raise
            logger.warning(f"Using best simplex iterate: {e}")
            solution = e.best

        piA = FiniteSupport.from_vector(a_points, solution.row_strategy, budget.atom_threshold)
        piB = FiniteSupport.from_vector(b_points, solution.col_strategy, budget.atom_threshold)

        sharp_result = c_sharp_search(c, piA, B, budget.search, x=x)
        flat_result = c_flat_search(c, piB, A, budget.search, x=x)
        sharp = sharp_result.value.as_float()
        flat = flat_result.value.as_float()
        side_b.add_exchange(sharp_result.argbest)
        side_a.add_exchange(flat_result.argbest)

        value = min(max(solution.value, flat), sharp) if flat <= sharp else solution.value
        eps = sharp - flat if math.isfinite(sharp) and math.isfinite(flat) else math.inf

        history.append({
            "iteration": iteration,
            "grid": [len(a_points), len(b_points)],
            "lambda": side_a.lam,
            "value": value,
            "eps": eps,
        })
        logger.debug(
            f"Iteration {iteration}: grid {len(a_points)}x{len(b_points)}, "
            f"a_box {a_box}, b_box {b_box}, value {value!r}, eps {eps!r}"
        )

        certificate = SaddleCertificate(
            piA, piB, value, eps, sharp, flat, a_box, b_box, side_a.lam, iteration + 1,
            eps <= tol, history,
        )
        if best is None or eps < best.eps:
            best = certificate
        else:
            best.iterations = iteration + 1
        if progress is not None:
            progress.iteration_finished.emit(iteration, float(eps), float(value))

        if eps <= tol:
            logger.info(f"Solve converged after {iteration + 1} iterations: value {value!r}, eps {eps!r}")
            return certificate

        # boxes change only when a best response escapes them or the gap stalls
        escaped = side_a.grow_if_escaped(flat_result.argbest, a_box)
        escaped = side_b.grow_if_escaped(sharp_result.argbest, b_box) or escaped
        if not escaped and size >= budget.grid_max and previous_eps is not None and eps >= previous_eps:
            side_a.grow()
            side_b.grow()
        previous_eps = eps

    logger.warning(f"Refinement budget exhausted; best eps {best.eps!r}")
    raise BudgetExhausted(f"Duality gap {best.eps!r} above {tol!r} after {budget.max_refine} iterations", best=best)


def verify_saddle(c, cert, A, B, tol, budget=None, x=None):
    """Recompute both sides of the duality gap with a denser search."""
    if tol == math.inf:
        return True
    budget = (budget or SearchBudget()).denser()
    sharp = c_sharp(c, cert.piA, B, budget, x=x).as_float()
    flat = c_flat(c, cert.piB, A, budget, x=x).as_float()
    if not (math.isfinite(sharp) and math.isfinite(flat)):
        return False
    return sharp - flat <= tol


@dataclass
class LopsidedReport:
    """Upper and lower values read off a certificate, with the safety of its strategies."""

    value: float
    upper: float
    lower: float
    eps: float
    piA_safety: SafetyClass
    piB_safety: SafetyClass

    @property
    def attained(self):
        return self.upper - self.lower <= self.eps

    def to_json(self):
        return {
            "value": self.value,
            "upper": self.upper,
            "lower": self.lower,
            "eps": self.eps,
            "piA_safety": self.piA_safety.value,
            "piB_safety": self.piB_safety.value,
        }


def lopsided_report(c, A, B, cert=None, tol=1e-4, budget=None, x=None):
    """
    inf over Player I of the worst case versus sup over safe finite-support
    Player II strategies of the guarantee, as witnessed by a certificate.
    """
    if cert is None:
        cert = solve(c, A, B, tol=tol, budget=budget, x=x)
    safety_a = classify_safety(c, cert.piA, "A", B, x=x).status
    safety_b = classify_safety(c, cert.piB, "B", A, x=x).status
    return LopsidedReport(cert.value, cert.sharp, cert.flat, cert.eps, safety_a, safety_b)

