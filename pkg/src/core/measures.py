#!/usr/bin/env python3
# SaddleKit - Mixed Strategies and Expected Payoffs

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from src.core.domains import IntegerRange, PlayerTag
from src.core.errors import BudgetExhausted, NonNormalized
from src.core.expr import as_expr, evaluate_array
from src.core.extended import ExtendedPayoff, PayoffKind
from src.core.search import IndicatorConditions, SearchBudget, maximize, minimize
from src.core.series import sum_series
from src.utils.logger import get_logger

NORMALIZATION_TOL = 1e-12
SERIES_TOL = 1e-10
SERIES_MAX_TERMS = 10000
PROBE_BUDGET = 64

logger = get_logger("measures")


# ----------------------------------------------------------------------
# Strategies


class MixedStrategy:
    """Probability measure over one player's actions."""

    def validate_for(self, domain):
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteSupport(MixedStrategy):
    """
    Finitely many atoms ``((point, weight), ...)``, sorted by point.

    Weights are positive and sum to 1 within NORMALIZATION_TOL.
    """

    atoms: tuple

    def __post_init__(self):
        if not self.atoms:
            raise NonNormalized("Finite-support strategy needs at least one atom")
        for point, weight in self.atoms:
            if not math.isfinite(point):
                raise NonNormalized(f"Atom at non-finite point {point!r}")
            if not weight > 0:
                raise NonNormalized(f"Atom weight must be positive, got {weight!r} at {point!r}")
        total = math.fsum(weight for _, weight in self.atoms)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NonNormalized(f"Weights sum to {total!r}, not 1")

    @classmethod
    def of(cls, pairs, normalize=False):
        """Merge duplicate points, sort, and optionally rescale to mass 1."""
        merged = {}
        for point, weight in pairs:
            point = float(point)
            merged[point] = merged.get(point, 0.0) + float(weight)
        atoms = sorted((p, w) for p, w in merged.items() if w > 0)
        if normalize and atoms:
            total = math.fsum(w for _, w in atoms)
            atoms = [(p, w / total) for p, w in atoms]
        return cls(tuple(atoms))

    @classmethod
    def point_mass(cls, point):
        return cls(((float(point), 1.0),))

    @classmethod
    def from_vector(cls, points, weights, threshold=1e-12):
        """Atoms of ``weights`` above ``threshold``, renormalized."""
        points = np.asarray(points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        keep = weights > threshold
        return cls.of(zip(points[keep], weights[keep]), normalize=True)

    @property
    def points(self):
        return np.array([p for p, _ in self.atoms])

    @property
    def weights(self):
        return np.array([w for _, w in self.atoms])

    def mix(self, other, alpha):
        """alpha * self + (1 - alpha) * other."""
        if not 0 <= alpha <= 1:
            raise ValueError(f"Mixing weight must lie in [0, 1], got {alpha!r}")
        pairs = [(p, alpha * w) for p, w in self.atoms]
        pairs += [(p, (1 - alpha) * w) for p, w in other.atoms]
        return FiniteSupport.of(pairs, normalize=True)

    def support_box(self):
        return float(self.atoms[0][0]), float(self.atoms[-1][0])

    def mass_within(self, center, radius):
        return math.fsum(w for p, w in self.atoms if abs(p - center) <= radius)

    def top_atoms(self, count=5):
        """Heaviest atoms first; ties by lowest point."""
        return sorted(self.atoms, key=lambda atom: (-atom[1], atom[0]))[:count]

    def validate_for(self, domain):
        for point, _ in self.atoms:
            if not domain.contains(point):
                raise NonNormalized(f"Atom {point!r} lies outside {domain}")

    def to_json(self):
        return {"kind": "finite", "atoms": [[p, w] for p, w in self.atoms]}


@dataclass(frozen=True)
class GeometricTail(MixedStrategy):
    """
    Weights C * r^k on k = 1, 2, ... with C = (1 - r) / r.

    ``ratio`` is kept exact when given as a Fraction.
    """

    ratio: object

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise NonNormalized(f"Geometric ratio must lie in (0, 1), got {self.ratio!r}")

    @property
    def normalizer(self):
        return (1 - self.ratio) / self.ratio

    def weights(self, ks):
        r = float(self.ratio)
        return float(self.normalizer) * np.power(r, np.asarray(ks, dtype=float))

    def total_mass(self, tol=1e-14):
        """Numerically summed mass; 1 up to rounding."""
        return sum_series(self.weights, tol=tol).value

    def validate_for(self, domain):
        if domain != IntegerRange(1):
            raise NonNormalized(f"Geometric strategies live on integers(1,inf), not {domain}")

    def to_json(self):
        if isinstance(self.ratio, Fraction):
            return {"kind": "geometric", "ratio": f"{self.ratio.numerator}/{self.ratio.denominator}"}
        return {"kind": "geometric", "ratio": float(self.ratio)}

    def __str__(self):
        return f"geometric({self.ratio})"


def parse_ratio(value):
    """'1/12' (or any string) -> Fraction; numbers stay floats."""
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise NonNormalized(f"Not a ratio: {value!r}") from None
    return float(value)


def strategy_from_json(data):
    """Build a strategy from its JSON record."""
    try:
        kind = data["kind"]
        if kind == "finite":
            return FiniteSupport.of([(p, w) for p, w in data["atoms"]])
        if kind == "geometric":
            return GeometricTail(parse_ratio(data["ratio"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise NonNormalized(f"Invalid strategy record {data!r}: {exc}") from None
    raise NonNormalized(f"Unknown strategy kind in {data!r}")


def strategy_to_json(strategy):
    return strategy.to_json()


# ----------------------------------------------------------------------
# Expected payoff


@dataclass(frozen=True)
class PayoffParts:
    """Magnitudes of the positive and the negative part (each possibly +inf)."""

    positive: float
    negative: float

    @property
    def payoff(self):
        return ExtendedPayoff.from_parts(self.positive, self.negative)

    def to_json(self):
        return {"positive": self.positive, "negative": -self.negative}


class _PayoffIntegrator:
    """Nested summation of one part of the payoff over the product measure."""

    def __init__(self, c, piA, piB, x, tol, max_terms):
        """Initialize the integrator."""
        self.c = c
        self.piA = piA
        self.piB = piB
        self.x = x
        self.tol = tol
        self.max_terms = max_terms

    def _clip(self, values, part):
        if part > 0:
            return np.maximum(values, 0.0)
        return np.maximum(-values, 0.0)

    def _weighted(self, weights, magnitudes):
        # an underflowed weight against an overflowed payoff cannot be resolved
        with np.errstate(invalid="ignore", over="ignore"):
            terms = weights * magnitudes
        return np.where(np.isnan(terms), math.inf, terms)

    def _inner(self, a, part):
        if isinstance(self.piB, FiniteSupport):
            values = evaluate_array(self.c, x=self.x, a=a, b=self.piB.points, signed_overflow=True)
            return float(np.sum(self._weighted(self.piB.weights, self._clip(values, part))))

        def terms(ks):
            values = evaluate_array(self.c, x=self.x, a=a, b=ks, signed_overflow=True)
            return self._weighted(self.piB.weights(ks), self._clip(values, part))

        return sum_series(terms, tol=self.tol, max_terms=self.max_terms).magnitude()

    def part(self, part):
        if isinstance(self.piA, FiniteSupport) and isinstance(self.piB, FiniteSupport):
            values = evaluate_array(
                self.c, x=self.x,
                a=self.piA.points[:, None], b=self.piB.points[None, :],
                signed_overflow=True,
            )
            weights = np.outer(self.piA.weights, self.piB.weights)
            return float(np.sum(self._weighted(weights, self._clip(values, part))))

        if isinstance(self.piA, FiniteSupport):
            total = 0.0
            for a, weight in self.piA.atoms:
                magnitude = self._inner(a, part)
                if math.isinf(magnitude):
                    return math.inf
                total += weight * magnitude
            return total

        def terms(ks):
            inner = np.array([self._inner(float(k), part) for k in ks])
            return self._weighted(self.piA.weights(ks), inner)

        return sum_series(terms, tol=self.tol, max_terms=self.max_terms).magnitude()


def expected_payoff_parts(c, piA, piB, x=None, tol=SERIES_TOL, max_terms=SERIES_MAX_TERMS):
    """Positive and negative parts of the expected payoff, computed separately."""
    integrator = _PayoffIntegrator(as_expr(c), piA, piB, x, tol, max_terms)
    parts = PayoffParts(integrator.part(+1), integrator.part(-1))
    return parts


def expected_payoff(c, piA, piB, x=None, tol=SERIES_TOL, max_terms=SERIES_MAX_TERMS):
    """
    Expected payoff to Player II when I plays ``piA`` and II plays ``piB``.

    Finite when both parts are finite, +/-inf when exactly one diverges,
    Undefined when both do.
    """
    return expected_payoff_parts(c, piA, piB, x, tol, max_terms).payoff


# ----------------------------------------------------------------------
# Best pure responses


def _pure_objective(c, strategy, side, x, tol, max_terms):
    """Map opponent pure actions to the expected payoff against ``strategy``."""
    c = as_expr(c)

    if isinstance(strategy, FiniteSupport):
        points, weights = strategy.points, strategy.weights

        def objective(actions):
            if side is PlayerTag.A:
                values = evaluate_array(c, x=x, a=points[:, None], b=actions[None, :], signed_overflow=True)
            else:
                values = evaluate_array(c, x=x, a=actions[None, :], b=points[:, None], signed_overflow=True)
            with np.errstate(invalid="ignore"):
                return weights @ values

        return objective

    def objective(actions):
        out = []
        for action in actions:
            mass = FiniteSupport.point_mass(action)
            pair = (strategy, mass) if side is PlayerTag.A else (mass, strategy)
            out.append(expected_payoff(c, *pair, x=x, tol=tol, max_terms=max_terms).as_float())
        return np.array(out)

    return objective


def _conditions(c, strategy, variable, x):
    if not isinstance(strategy, FiniteSupport):
        return None
    other = "a" if variable == "b" else "b"
    return IndicatorConditions(as_expr(c), variable, {other: strategy.points}, x=x)


def c_sharp_search(c, piA, B, budget=None, x=None, tol=SERIES_TOL, max_terms=SERIES_MAX_TERMS):
    """Search result behind ``c_sharp``: value plus the best response found."""
    objective = _pure_objective(c, piA, PlayerTag.A, x, tol, max_terms)
    return maximize(objective, B, budget or SearchBudget(), _conditions(c, piA, "b", x))


def c_flat_search(c, piB, A, budget=None, x=None, tol=SERIES_TOL, max_terms=SERIES_MAX_TERMS):
    """Search result behind ``c_flat``."""
    objective = _pure_objective(c, piB, PlayerTag.B, x, tol, max_terms)
    return minimize(objective, A, budget or SearchBudget(), _conditions(c, piB, "a", x))


def c_sharp(c, piA, B, budget=None, x=None, tol=SERIES_TOL, max_terms=SERIES_MAX_TERMS):
    """sup over pure b in B of the expected payoff against ``piA``."""
    return c_sharp_search(c, piA, B, budget, x, tol, max_terms).value


def c_flat(c, piB, A, budget=None, x=None, tol=SERIES_TOL, max_terms=SERIES_MAX_TERMS):
    """inf over pure a in A of the expected payoff against ``piB``."""
    return c_flat_search(c, piB, A, budget, x, tol, max_terms).value


# ----------------------------------------------------------------------
# Safety


class SafetyClass(str, Enum):
    SAFE = "safe"
    UNSAFE_WITNESS = "unsafe_witness"
    INCONCLUSIVE = "inconclusive"


@dataclass
class SafetyReport:
    status: SafetyClass
    reason: str
    witness: MixedStrategy | None = None
    witness_parts: PayoffParts | None = None
    probes_used: int = 0
    notes: list = field(default_factory=list)

    def to_json(self):
        return {
            "status": self.status.value,
            "reason": self.reason,
            "witness": self.witness.to_json() if self.witness is not None else None,
            "witness_parts": self.witness_parts.to_json() if self.witness_parts is not None else None,
            "probes_used": self.probes_used,
        }


def witness_ratios():
    """1/2, 1/3, 2/3, 1/4, 3/4, 1/5, 2/5, ... (reduced, by denominator)."""
    q = 2
    while True:
        for p in range(1, q):
            ratio = Fraction(p, q)
            if ratio.denominator == q:
                yield ratio
        q += 1


def _witness_points(domain):
    base = domain.reference_point()
    yield base
    for j in range(64):
        for sign in (1.0, -1.0):
            point = domain.snap(base + sign * 2.0 ** j)
            if domain.contains(point):
                yield point


def _witness_candidates(domain):
    """Opponent strategies to pair against: geometric tails interleaved with point masses."""
    points = _witness_points(domain)
    ratios = witness_ratios() if domain == IntegerRange(1) else None
    seen = set()
    while True:
        if ratios is not None:
            yield GeometricTail(next(ratios))
        for point in points:
            if point not in seen:
                seen.add(point)
                yield FiniteSupport.point_mass(point)
                break
        else:
            if ratios is None:
                return


def _summable_bound(c, pi, side, opponent_domain, part, x, budget, tol, max_terms):
    """
    Whether sum_k w_k * |extremum over the opponent of the clipped payoff| < inf.

    ``part`` = -1 bounds the negative part (inf of min(c, 0)), +1 the positive
    part (sup of max(c, 0)), uniformly over opponent strategies.
    """
    c = as_expr(c)

    def extremum(own_point):
        if side is PlayerTag.B:
            def objective(actions):
                return evaluate_array(c, x=x, a=actions, b=own_point, signed_overflow=True)
        else:
            def objective(actions):
                return evaluate_array(c, x=x, a=own_point, b=actions, signed_overflow=True)

        if part < 0:
            result = minimize(lambda p: np.minimum(objective(p), 0.0), opponent_domain, budget)
        else:
            result = maximize(lambda p: np.maximum(objective(p), 0.0), opponent_domain, budget)
        return abs(result.value.as_float())

    if isinstance(pi, FiniteSupport):
        return all(math.isfinite(extremum(p)) for p in pi.points)

    def terms(ks):
        with np.errstate(invalid="ignore", over="ignore"):
            values = pi.weights(ks) * np.array([extremum(float(k)) for k in ks])
        return np.where(np.isnan(values), math.inf, values)

    return sum_series(terms, tol=tol, max_terms=max_terms).converged


def classify_safety(
    c, pi, side, opponent_domain, probes=PROBE_BUDGET, x=None, own_domain=None,
    budget=None, tol=SERIES_TOL, max_terms=SERIES_MAX_TERMS,
):
    """
    Classify ``pi`` (a strategy of ``side``) as Safe, UnsafeWitness or Inconclusive.

    Safe: finite support, or one part of the payoff is bounded uniformly over
    the opponent's actions with a summable bound. UnsafeWitness: a probed
    opponent strategy makes the expected payoff Undefined.
    """
    c = as_expr(c)
    side = PlayerTag.parse(side) if not isinstance(side, PlayerTag) else side
    budget = budget or SearchBudget()
    if own_domain is not None:
        pi.validate_for(own_domain)

    if isinstance(pi, FiniteSupport):
        return SafetyReport(SafetyClass.SAFE, "finite support")

    notes = []
    for part, name in ((-1, "negative"), (+1, "positive")):
        try:
            if _summable_bound(c, pi, side, opponent_domain, part, x, budget, tol, max_terms):
                return SafetyReport(SafetyClass.SAFE, f"{name} part bounded uniformly over {opponent_domain}")
        except BudgetExhausted as e:
            notes.append(f"{name} bound undecided: {e}")

    used = 0
    for candidate in _witness_candidates(opponent_domain):
        if used >= probes:
            break
        used += 1
        pair = (candidate, pi) if side is PlayerTag.B else (pi, candidate)
        try:
            parts = expected_payoff_parts(c, *pair, x=x, tol=tol, max_terms=max_terms)
        except BudgetExhausted as e:
            notes.append(f"probe {candidate} undecided: {e}")
            continue
        logger.debug(f"Safety probe {candidate}: +{parts.positive!r} / -{parts.negative!r}")
        if parts.payoff.kind is PayoffKind.UNDEFINED:
            return SafetyReport(
                SafetyClass.UNSAFE_WITNESS,
                "both payoff parts diverge",
                witness=candidate,
                witness_parts=parts,
                probes_used=used,
                notes=notes,
            )

    return SafetyReport(
        SafetyClass.INCONCLUSIVE,
        f"no witness among {used} probes",
        probes_used=used,
        notes=notes,
    )
