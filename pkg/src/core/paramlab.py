#!/usr/bin/env python3
# SaddleKit - Parametric Families and Continuity Diagnostics

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from enum import Enum

import numpy as np
from PyQt6.QtCore import QObject, pyqtSignal

from src.core.continuous_game import (
    GrowthStatus,
    RefinementBudget,
    player_two_view,
    probe_coercivity,
    solve,
)
from src.core.domains import FiniteSet
from src.core.errors import (
    AssumptionRefuted,
    BudgetExhausted,
    EmptyCluster,
    EvaluationError,
    SaddleKitError,
    StructuralViolation,
)
from src.core.expr import BinOp, as_expr, evaluate_array, indicators, to_text
from src.core.measures import FiniteSupport
from src.core.search import IndicatorConditions, SearchBudget, minimize
from src.core.turnbased import ConstantMap, minimax
from src.utils.logger import get_logger

SEMICONTINUITY_TOL = 1e-6
SEQUENCE_STEPS = 30
SEQUENCE_TAIL = 4
FLOAT_HALVINGS = 1100
EXCLUDED_MASS = 0.01

PROFILES = {
    "lsc": ("A1", "A4"),
    "continuity": ("A1", "A2", "A3", "A4", "B_compact"),
}

logger = get_logger("paramlab")


# ----------------------------------------------------------------------
# Families


@dataclass(frozen=True)
class FamilyFlags:
    """Continuity-class properties declared for a family."""

    c_lsc: bool = False
    c_usc: bool = False
    A_lsc_mapping: bool = False
    B_lsc_mapping: bool = False
    B_compact: bool = False
    c_bounded_below: bool = False
    A_coercive_in_a: bool = False

    @classmethod
    def from_mapping(cls, values):
        """Build from a name -> bool mapping; names match case-insensitively."""
        known = {f.name.lower(): f.name for f in fields(cls)}
        kwargs = {}
        for name, value in values.items():
            try:
                kwargs[known[name.lower()]] = bool(value)
            except KeyError:
                raise ValueError(f"Unknown flag: {name!r}") from None
        return cls(**kwargs)

    def to_json(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class GameFamily:
    """
    Games {A(x), B(x), c(x, ., .)} over a grid of states. B(x) does not
    depend on Player I's action.
    """

    c: object
    x_grid: np.ndarray
    phi_a: object
    phi_b: object
    flags: FamilyFlags = field(default_factory=FamilyFlags)
    name: str = "family"

    def __post_init__(self):
        self.c = as_expr(self.c)
        self.x_grid = np.asarray(self.x_grid, dtype=float)
        if self.x_grid.ndim != 1 or not len(self.x_grid):
            raise StructuralViolation("State grid must be a nonempty list")
        if np.any(np.diff(self.x_grid) <= 0):
            raise StructuralViolation("State grid must be strictly increasing")
        if self.phi_b.depends_on("a"):
            raise StructuralViolation("B(x) of a family may not depend on a")

    def A(self, x):
        return self.phi_a.at(x)

    def B(self, x):
        return self.phi_b.at(x)

    def to_json(self):
        return {
            "name": self.name,
            "payoff": to_text(self.c),
            "x_grid": [float(x) for x in self.x_grid],
            "phi_a": self.phi_a.to_json(),
            "phi_b": self.phi_b.to_json(),
            "flags": self.flags.to_json(),
        }


def x_grid(lo, hi, n):
    """n evenly spaced states from lo to hi."""
    if n < 1:
        raise ValueError("Grid needs at least one point")
    if n == 1:
        return np.array([float(lo)])
    return np.linspace(float(lo), float(hi), int(n))


@dataclass(frozen=True)
class DiagnosticsBudget:
    diag_tol_factor: float = 5.0
    jump_tol_factor: float = 10.0
    set_tol_factor: float = 100.0
    bisection_depth: int = 6
    excluded_mass: float = EXCLUDED_MASS


# ----------------------------------------------------------------------
# Structural assumptions


class AssumptionStatus(str, Enum):
    DECLARED = "declared_and_unrefuted"
    REFUTED = "refuted"
    NOT_DECLARED = "not_declared"
    STRUCTURAL = "structurally_satisfied"


@dataclass
class AssumptionVerdict:
    name: str
    status: AssumptionStatus
    witness: dict = None
    detail: str = ""

    def to_json(self):
        return {
            "name": self.name,
            "status": self.status.value,
            "witness": self.witness,
            "detail": self.detail,
        }


@dataclass
class StructuralReport:
    verdicts: dict
    definition_violations: list = field(default_factory=list)
    probes_used: int = 0

    def status(self, name):
        return self.verdicts[name].status

    def unmet(self, names):
        """Names whose status is neither declared-and-unrefuted nor structural."""
        ok = (AssumptionStatus.DECLARED, AssumptionStatus.STRUCTURAL)
        return [name for name in names if self.verdicts[name].status not in ok]

    def refuted(self):
        return [name for name, v in self.verdicts.items() if v.status is AssumptionStatus.REFUTED]

    def to_json(self):
        return {
            "assumptions": [self.verdicts[name].to_json() for name in sorted(self.verdicts)],
            "definition_violations": list(self.definition_violations),
            "probes_used": self.probes_used,
        }


def _verdict(name, declared, witness, detail=""):
    if witness:
        return AssumptionVerdict(name, AssumptionStatus.REFUTED, witness, detail)
    if declared:
        return AssumptionVerdict(name, AssumptionStatus.DECLARED)
    return AssumptionVerdict(name, AssumptionStatus.NOT_DECLARED)


def _sample_actions(domain, count=3):
    """A few members of a domain around its reference point."""
    if isinstance(domain, FiniteSet):
        return list(domain.points[:count])
    if domain.is_compact:
        return list(np.unique([domain.snap(p) for p in np.linspace(domain.lower, domain.upper, count)]))
    base = domain.reference_point()
    return sorted({domain.snap(base + offset) for offset in (-1.0, 0.0, 1.0)})


def _sample_states(fam, probes):
    grid = fam.x_grid
    if len(grid) > probes:
        grid = grid[np.unique(np.round(np.linspace(0, len(grid) - 1, probes)).astype(int))]
    xs = list(grid)

    # indicator switches in x between grid nodes
    middle = float(fam.x_grid[len(fam.x_grid) // 2])
    try:
        a_samples = _sample_actions(fam.A(middle))
        b_samples = _sample_actions(fam.B(middle))
    except SaddleKitError:
        return xs
    pairs = [(a, b) for a in a_samples for b in b_samples]
    conditions = IndicatorConditions(
        fam.c, "x", {"a": [p[0] for p in pairs], "b": [p[1] for p in pairs]},
    )
    if conditions and len(fam.x_grid) > 1:
        switches = conditions.locate(fam.x_grid, 64)
        xs.extend(float(s) for s in switches if fam.x_grid[0] <= s <= fam.x_grid[-1])
    return sorted(set(xs))


def _tail_steps(center, scale):
    """The last SEQUENCE_TAIL steps scale * 2^-k that still move ``center``."""
    center = abs(float(center))
    resolution = 64 * np.spacing(center)
    with np.errstate(under="ignore"):
        steps = scale * 2.0 ** -np.arange(FLOAT_HALVINGS, dtype=float)
    steps = steps[steps > resolution]
    if center > 0:
        # a sequence must not cross zero on its way to a nonzero limit
        steps = steps[steps < 0.5 * center]
    return steps[-SEQUENCE_TAIL:]


def _sequence(x0, a0, b0, axis, sign, scale):
    point = np.array([x0, a0, b0], dtype=float)
    steps = _tail_steps(point[axis], scale)
    points = np.repeat(point[None, :], len(steps), axis=0)
    points[:, axis] += sign * steps
    return points


def _in_graph(fam, points):
    for x, a, b in points:
        try:
            if not (fam.A(x).contains(a) and fam.B(x).contains(b)):
                return False
        except SaddleKitError:
            return False
    return True


def _crosses_switch(switches, limit_point, points):
    """True when the sequence changes an indicator the limit point is not on."""
    x0, a0, b0 = limit_point
    for switch in switches:
        try:
            at = float(evaluate_array(switch, x=x0, a=a0, b=b0, signed_overflow=True))
            along = evaluate_array(switch, x=points[:, 0], a=points[:, 1], b=points[:, 2], signed_overflow=True)
        except EvaluationError:
            return True
        if at != 0 and np.any(np.sign(along) != np.sign(at)):
            return True
    return False


def _semicontinuity_witnesses(fam, states, scale):
    """First witness against lower and upper semicontinuity of c, if any."""
    switches = [BinOp("-", ind.left, ind.right) for ind in indicators(fam.c)]
    lsc_witness = None
    usc_witness = None
    count = 0
    for x0 in states:
        try:
            A, B = fam.A(x0), fam.B(x0)
        except SaddleKitError:
            continue
        for a0 in _sample_actions(A):
            for b0 in _sample_actions(B):
                try:
                    limit = float(evaluate_array(fam.c, x=x0, a=a0, b=b0))
                except EvaluationError:
                    continue
                slack = SEMICONTINUITY_TOL * max(1.0, abs(limit))
                for axis in range(3):
                    for sign in (1.0, -1.0):
                        points = _sequence(x0, a0, b0, axis, sign, scale[axis])
                        if not len(points) or not _in_graph(fam, points):
                            continue
                        if _crosses_switch(switches, (x0, a0, b0), points):
                            continue
                        try:
                            values = evaluate_array(fam.c, x=points[:, 0], a=points[:, 1], b=points[:, 2])
                        except EvaluationError:
                            continue
                        count += 1
                        witness = {
                            "limit": [x0, a0, b0],
                            "limit_value": limit,
                            "sequence": points.tolist(),
                            "values": values.tolist(),
                        }
                        if lsc_witness is None and limit > np.max(values) + slack:
                            lsc_witness = witness
                        if usc_witness is None and limit < np.min(values) - slack:
                            usc_witness = witness
    return lsc_witness, usc_witness, count


def _growth_witness(c, domain, anchor, x, label):
    if isinstance(domain, FiniteSet) or not domain.unbounded_ends():
        return None
    certificate = probe_coercivity(c, domain, candidates_b0=[anchor], x=x)
    for end, report in certificate.ends.items():
        if report.status is GrowthStatus.REFUTED:
            return {"x": x, label: anchor, "end": end, "sample": list(report.sample)}
    return None


def _mapping_witness(phi, states, scale):
    """Evidence that x -> phi(x) is not lower semicontinuous at a sampled state."""
    if isinstance(phi, ConstantMap):
        return None
    for x0 in states:
        try:
            target = phi.at(x0)
        except SaddleKitError:
            continue
        points = _target_points(target)
        for sign in (1.0, -1.0):
            xs = x0 + sign * _tail_steps(x0, scale)
            if not len(xs):
                continue
            try:
                sets = [phi.at(float(x)) for x in xs]
            except SaddleKitError:
                continue
            for p in points:
                distances = [_distance_to_set(p, s) for s in sets]
                if min(distances) > SEMICONTINUITY_TOL * max(1.0, abs(p)):
                    return {"x": x0, "point": p, "sequence": xs.tolist(), "distances": distances}
    return None


def _target_points(domain):
    if isinstance(domain, FiniteSet):
        return list(domain.points)
    return [p for p in (domain.lower, domain.upper) if math.isfinite(p)]


def _distance_to_set(p, domain):
    if isinstance(domain, FiniteSet):
        return min(abs(p - q) for q in domain.points)
    if p < domain.lower:
        return domain.lower - p
    if p > domain.upper:
        return p - domain.upper
    return 0.0


def _definition_violations(fam, states):
    """Pure payoffs must stay bounded below in a and bounded above in b."""
    budget = SearchBudget(grid_points=33, golden_iterations=0, refine_cells=1)
    swapped = player_two_view(fam.c)
    violations = []
    for x in states:
        try:
            A, B = fam.A(x), fam.B(x)
        except SaddleKitError as e:
            violations.append({"x": x, "issue": str(e)})
            continue
        checks = (
            (fam.c, A, _sample_actions(B), "b", "inf over a is -inf"),
            (swapped, B, _sample_actions(A), "a", "sup over b is +inf"),
        )
        for expression, domain, anchors, fixed, issue in checks:
            for anchor in anchors:
                def objective(points, expression=expression, anchor=anchor):
                    return evaluate_array(expression, x=x, a=points, b=anchor, signed_overflow=True)

                try:
                    result = minimize(objective, domain, budget)
                except (BudgetExhausted, EvaluationError):
                    continue
                if result.value.as_float() == -math.inf:
                    violations.append({"x": x, fixed: anchor, "issue": issue})
    return violations


def classify_assumptions(fam, probes=64):
    """
    Check the structural assumptions of a family on sampled states.

    Each assumption is Refuted when a sampled witness contradicts it,
    otherwise DeclaredAndUnrefuted or NotDeclared according to the declared
    flags. A-lower semicontinuity of the induced B-mapping holds structurally
    because B(x) does not depend on a.
    """
    flags = fam.flags
    states = _sample_states(fam, probes)
    spacing = float(np.min(np.diff(fam.x_grid))) if len(fam.x_grid) > 1 else 1.0
    scale = (spacing, 1.0, 1.0)

    lsc_witness, usc_witness, count = _semicontinuity_witnesses(fam, states, scale)

    coercive_a = None
    coercive_b = None
    unbounded_b = None
    for x in states:
        try:
            A, B = fam.A(x), fam.B(x)
        except SaddleKitError:
            continue
        if unbounded_b is None and not B.is_compact:
            unbounded_b = {"x": x, "B": B.to_text()}
        if coercive_a is None:
            for b in _sample_actions(B):
                coercive_a = _growth_witness(fam.c, A, b, x, "b")
                if coercive_a:
                    break
        if coercive_b is None:
            for a in _sample_actions(A):
                coercive_b = _growth_witness(player_two_view(fam.c), B, a, x, "a")
                if coercive_b:
                    break

    a1 = lsc_witness or coercive_a
    a2 = usc_witness or coercive_b
    violations = _definition_violations(fam, states)
    unbounded_below = next((v for v in violations if "a" not in v and "b" in v), None)
    verdicts = {
        "A1": _verdict("A1", flags.c_lsc and flags.A_coercive_in_a, a1,
                       "c not lower semicontinuous" if lsc_witness else "no growth in a" if a1 else ""),
        "A2": _verdict("A2", flags.c_usc and flags.B_compact, a2,
                       "c not upper semicontinuous" if usc_witness else "no decay in b" if a2 else ""),
        "A3": _verdict("A3", flags.A_lsc_mapping, _mapping_witness(fam.phi_a, states, spacing),
                       "A(x) not lower semicontinuous"),
        "A4": _verdict("A4", flags.B_lsc_mapping, _mapping_witness(fam.phi_b, states, spacing),
                       "B(x) not lower semicontinuous"),
        "B_compact": _verdict("B_compact", flags.B_compact, unbounded_b, "B(x) unbounded"),
        "c_bounded_below": _verdict(
            "c_bounded_below", flags.c_bounded_below, unbounded_below, "inf over a is -inf",
        ),
        "A_lsc": AssumptionVerdict(
            "A_lsc", AssumptionStatus.STRUCTURAL, detail="B(x) does not depend on a",
        ),
    }
    report = StructuralReport(verdicts, violations, count)
    logger.debug(
        f"Assumptions of {fam.name}: "
        + ", ".join(f"{name}={v.status.value}" for name, v in sorted(verdicts.items()))
    )
    return report


# ----------------------------------------------------------------------
# Set distance


def _atoms(cluster):
    if isinstance(cluster, FiniteSupport):
        return list(cluster.atoms)
    atoms = []
    for item in cluster:
        if isinstance(item, (tuple, list)):
            atoms.append((float(item[0]), float(item[1])))
        else:
            atoms.append((float(item), 1.0))
    return atoms


def set_distance(S1, S2, excluded_mass=EXCLUDED_MASS):
    """
    One-sided distance from S1 to S2: the farthest atom of S1 from the atoms
    of S2, ignoring S1's lightest atoms up to ``excluded_mass`` in total.

    Clusters are FiniteSupport strategies, (point, weight) pairs or bare
    points (equal weights).
    """
    first = _atoms(S1)
    second = _atoms(S2)
    if not first or not second:
        raise EmptyCluster("Set distance needs two nonempty clusters")

    total = math.fsum(w for _, w in first)
    kept = sorted(first, key=lambda atom: (atom[1], atom[0]))
    dropped = 0.0
    while len(kept) > 1 and dropped + kept[0][1] <= excluded_mass * total:
        dropped += kept.pop(0)[1]

    targets = np.array([p for p, _ in second])
    return float(max(np.min(np.abs(targets - p)) for p, _ in kept))


# ----------------------------------------------------------------------
# Sweeps


@dataclass
class SweepRecord:
    x: float
    value: float
    eps: float = math.nan
    sharp: float = math.nan
    flat: float = math.nan
    a_support: FiniteSupport = None
    b_support: FiniteSupport = None
    a_box: tuple = None
    b_box: tuple = None
    error: str = None
    flags: list = field(default_factory=list)

    @property
    def gap_a(self):
        return self.sharp - self.value

    @property
    def gap_b(self):
        return self.value - self.flat

    def support(self):
        return self.a_support

    def to_json(self):
        def summary(strategy):
            if strategy is None:
                return None
            return {
                "support_box": list(strategy.support_box()),
                "top_atoms": [list(atom) for atom in strategy.top_atoms()],
            }

        return {
            "x": self.x,
            "v": self.value,
            "eps": self.eps,
            "gapA": self.gap_a,
            "gapB": self.gap_b,
            "piA": summary(self.a_support),
            "piB": summary(self.b_support),
            "a_box": list(self.a_box) if self.a_box else None,
            "b_box": list(self.b_box) if self.b_box else None,
            "error": self.error,
            "flags": list(self.flags),
        }


@dataclass
class Jump:
    """A suspicious pair of neighbouring states after bisection."""

    index: int
    grid_x: float
    location: float
    left: tuple
    right: tuple
    initial: float
    persistent: bool
    probes: list = field(default_factory=list)

    def to_json(self):
        return {
            "x": self.grid_x,
            "location": self.location,
            "left": list(self.left),
            "right": list(self.right),
            "initial_jump": self.initial,
            "final_jump": abs(self.right[1] - self.left[1]),
            "persistent": self.persistent,
            "probes": [list(p) for p in self.probes],
        }


@dataclass
class SweepReport:
    profile: str
    records: list
    structural: StructuralReport = None
    lsc_violations: list = field(default_factory=list)
    usc_violations: list = field(default_factory=list)
    continuity_failures: list = field(default_factory=list)
    multifunction_usc_violations: list = field(default_factory=list)
    exploratory: bool = False
    unmet_assumptions: list = field(default_factory=list)

    @property
    def lsc_verdict(self):
        return "PASS" if not self.lsc_violations else "FAIL"

    @property
    def continuity_verdict(self):
        return "PASS" if not self.continuity_failures else "FAIL"

    @property
    def errors(self):
        return [r for r in self.records if r.error]

    @property
    def passed(self):
        if self.errors:
            return False
        if self.profile == "lsc":
            return self.lsc_verdict == "PASS"
        return (
            self.lsc_verdict == "PASS"
            and self.continuity_verdict == "PASS"
            and not self.multifunction_usc_violations
        )

    def values(self):
        return np.array([r.value for r in self.records])

    def to_json(self):
        return {
            "profile": self.profile,
            "exploratory": self.exploratory,
            "unmet_assumptions": list(self.unmet_assumptions),
            "structural": self.structural.to_json() if self.structural else None,
            "records": [r.to_json() for r in self.records],
            "diagnostics": {
                "lsc_verdict": self.lsc_verdict,
                "continuity_verdict": self.continuity_verdict,
                "lsc_violations": list(self.lsc_violations),
                "usc_violations": list(self.usc_violations),
                "continuity_failures": [j.to_json() for j in self.continuity_failures],
                "multifunction_usc_violations": list(self.multifunction_usc_violations),
            },
            "passed": self.passed,
        }

    def csv_rows(self):
        """Rows of the values table: x, v, eps, gapA, gapB, flags."""
        return [
            [r.x, r.value, r.eps, r.gap_a, r.gap_b, ";".join(r.flags)]
            for r in self.records
        ]


def map_jobs(function, items, jobs=1):
    """Ordered map, on ``jobs`` worker threads when more than one."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(function, items))


class SweepRunner(QObject):
    """
    Runs per-state solves and the diagnostics fold over a state grid.
    Solves are cached, so bisection probes reuse earlier work.
    """

    # Signals
    record_computed = pyqtSignal(int, float, float)  # index, x, value
    sweep_finished = pyqtSignal(str)  # continuity verdict

    def __init__(self, oracle, tol, diagnostics=None, jobs=1):
        """Initialize the sweep runner."""
        super().__init__()
        self.oracle = oracle
        self.tol = tol
        self.diagnostics = diagnostics or DiagnosticsBudget()
        self.jobs = jobs
        self.cache = {}

    def record(self, x):
        x = float(x)
        if x not in self.cache:
            self.cache[x] = self.oracle(x)
        return self.cache[x]

    def run(self, xs, profile, structural=None, exploratory=False, unmet=()):
        xs = [float(x) for x in xs]
        records = map_jobs(self.oracle, xs, self.jobs)
        for i, (x, record) in enumerate(zip(xs, records)):
            self.cache[x] = record
            self.record_computed.emit(i, x, float(record.value))

        report = SweepReport(profile, records, structural, exploratory=exploratory, unmet_assumptions=list(unmet))
        self._diagnose(report)
        self.sweep_finished.emit(report.continuity_verdict)
        logger.info(
            f"Sweep over {len(xs)} states: lsc {report.lsc_verdict}, continuity {report.continuity_verdict}"
        )
        return report

    # ------------------------------------------------------------------
    # Diagnostics

    def _diagnose(self, report):
        budget = self.diagnostics
        diag_tol = budget.diag_tol_factor * self.tol
        jump_tol = budget.jump_tol_factor * self.tol
        records = report.records
        xs = np.array([r.x for r in records])
        vs = np.array([r.value for r in records])

        for i in _suspicious(xs, vs, jump_tol):
            jump = self._localize(records, int(i), jump_tol)
            if not jump.persistent:
                continue
            report.continuity_failures.append(jump)
            records[jump.index].flags.append("jump")

        for i, j in _neighbour_pairs(len(records)):
            self._one_sided(report, i, j, diag_tol)

        self._multifunction(report)

    def _localize(self, records, i, jump_tol):
        left = (records[i].x, records[i].value)
        right = (records[i + 1].x, records[i + 1].value)
        initial = abs(right[1] - left[1])
        probes = []
        for _ in range(self.diagnostics.bisection_depth):
            middle = 0.5 * (left[0] + right[0])
            value = self.record(middle).value
            probes.append((middle, value))
            if not math.isfinite(value):
                break
            if abs(value - left[1]) >= abs(right[1] - value):
                right = (middle, value)
            else:
                left = (middle, value)

        final = abs(right[1] - left[1])
        persistent = final > jump_tol and final > 0.5 * initial
        location = 0.5 * (left[0] + right[0])
        nearest = i if location - records[i].x <= records[i + 1].x - location else i + 1
        return Jump(nearest, records[nearest].x, location, left, right, initial, persistent, probes)

    def _one_sided(self, report, i, j, diag_tol):
        """
        Compare v(x_i) with the limit of v along x_i + (x_j - x_i) 2^-k.

        The limit is the linear extrapolation of the last two terms, so a
        sloped but continuous side converges while a step keeps its height.
        """
        record = report.records[i]
        neighbour = report.records[j]
        if not (math.isfinite(record.value) and math.isfinite(neighbour.value)):
            return
        if abs(neighbour.value - record.value) <= diag_tol:
            return

        sequence = [(neighbour.x, neighbour.value)]
        limit = neighbour.value
        for k in range(1, self.diagnostics.bisection_depth + 1):
            x = record.x + (neighbour.x - record.x) * 2.0 ** -k
            value = self.record(x).value
            if not math.isfinite(value):
                return
            limit = 2.0 * value - sequence[-1][1]
            sequence.append((x, value))
            if abs(value - record.value) <= diag_tol or abs(limit - record.value) <= diag_tol:
                return

        witness = {
            "x": record.x,
            "value": record.value,
            "side": "left" if j < i else "right",
            "limit": limit,
            "sequence": [list(p) for p in sequence],
        }
        if record.value > limit + diag_tol:
            report.lsc_violations.append(witness)
            _flag(record, "lsc_violation")
        elif record.value < limit - diag_tol:
            report.usc_violations.append(witness)
            _flag(record, "usc_violation")

    def _multifunction(self, report):
        budget = self.diagnostics
        set_tol = budget.set_tol_factor * self.tol
        records = report.records
        if any(r.support() is None for r in records) or len(records) < 2:
            return

        pairs = _neighbour_pairs(len(records))
        distances = np.array([
            set_distance(records[j].support(), records[i].support(), budget.excluded_mass) for i, j in pairs
        ])
        typical = float(np.median(distances))
        for (i, j), distance in zip(pairs, distances):
            if distance <= set_tol or distance <= 2.0 * typical:
                continue
            # shrink the neighbourhood toward x_i
            probes = []
            for k in range(1, budget.bisection_depth + 1):
                x = records[i].x + (records[j].x - records[i].x) * 2.0 ** -k
                probe = self.record(x)
                if probe.support() is None:
                    break
                probes.append((x, set_distance(probe.support(), records[i].support(), budget.excluded_mass)))
            if probes and probes[-1][1] > set_tol:
                report.multifunction_usc_violations.append({
                    "x": records[i].x,
                    "distance": probes[-1][1],
                    "probes": [list(p) for p in probes],
                })
                records[i].flags.append("multifunction_usc")


def _flag(record, flag):
    if flag not in record.flags:
        record.flags.append(flag)


def _suspicious(xs, vs, jump_tol):
    """Neighbouring pairs whose jump exceeds jump_tol and twice the median slope."""
    if len(xs) < 2:
        return []
    h = np.diff(xs)
    with np.errstate(invalid="ignore"):
        jumps = np.abs(np.diff(vs))
    finite = np.isfinite(jumps)
    if not np.any(finite):
        return []
    median_slope = float(np.median(jumps[finite] / h[finite]))
    return np.nonzero(finite & (jumps > jump_tol) & (jumps > 2.0 * median_slope * h))[0]


def _neighbour_pairs(n):
    """(i, j): state i with its left and right grid neighbours j."""
    pairs = []
    for i in range(n):
        if i > 0:
            pairs.append((i, i - 1))
        if i < n - 1:
            pairs.append((i, i + 1))
    return pairs


def _solve_record(fam, tol, budget):
    def oracle(x):
        try:
            cert = solve(fam.c, fam.A(x), fam.B(x), tol=tol, budget=budget, x=x)
        except BudgetExhausted as e:
            cert = e.best
            if cert is None:
                return SweepRecord(x, math.nan, error=str(e), flags=["error"])
            flags = ["unconverged"]
        except SaddleKitError as e:
            logger.warning(f"Solve at x={x!r} failed: {e}")
            return SweepRecord(x, math.nan, error=str(e), flags=["error"])
        else:
            flags = []
        return SweepRecord(
            x, cert.value, cert.eps, cert.sharp, cert.flat, cert.piA, cert.piB,
            cert.a_box, cert.b_box, None, flags,
        )

    return oracle


def sweep(
    fam,
    tol=1e-4,
    profile="lsc",
    budget=None,
    diagnostics=None,
    exploratory=False,
    probes=64,
    jobs=1,
    runner=None,
):
    """
    Solve every game of the family and run the semicontinuity diagnostics.

    The profile's assumptions must be declared and unrefuted unless
    ``exploratory`` is set; a family whose pure payoffs escape to infinity
    aborts with StructuralViolation.
    """
    if profile not in PROFILES:
        raise ValueError(f"Unknown profile: {profile!r}")
    structural = classify_assumptions(fam, probes)
    if structural.definition_violations:
        raise StructuralViolation(
            f"{len(structural.definition_violations)} sampled games have unbounded pure payoffs",
            report=structural,
        )

    unmet = structural.unmet(PROFILES[profile])
    if unmet and not exploratory:
        raise AssumptionRefuted(
            f"Profile {profile} needs {', '.join(unmet)} declared and unrefuted",
            report=structural,
        )
    if unmet:
        logger.info(f"Exploratory {profile} sweep without {', '.join(unmet)}")

    budget = budget or RefinementBudget()
    runner = runner or SweepRunner(None, tol, diagnostics, jobs)
    runner.oracle = _solve_record(fam, tol, budget)
    return runner.run(fam.x_grid, profile, structural, exploratory, unmet)


# ----------------------------------------------------------------------
# Games with perfect information


@dataclass
class _MinimaxRecord(SweepRecord):
    argmin: list = field(default_factory=list)

    def support(self):
        if not self.argmin:
            return None
        return [(a, 1.0) for a in self.argmin]

    def to_json(self):
        return {
            "x": self.x,
            "v": self.value,
            "argmin": list(self.argmin),
            "error": self.error,
            "flags": list(self.flags),
        }


def _minimax_record(game, budget, tie_tol):
    def oracle(x):
        try:
            record = minimax(game, x, budget, tie_tol)
        except SaddleKitError as e:
            logger.warning(f"Minimax at x={x!r} failed: {e}")
            return _MinimaxRecord(x, math.nan, error=str(e), flags=["error"])
        return _MinimaxRecord(x, record.v_sharp.as_float(), 0.0, argmin=list(record.argmin_a_set))

    return oracle


def sweep_sequential(game, xs, tol=1e-4, budget=None, diagnostics=None, tie_tol=1e-6, jobs=1, runner=None):
    """v#(x) over a grid with the same continuity diagnostics as ``sweep``."""
    xs = np.asarray(xs, dtype=float)
    if np.any(np.diff(xs) <= 0):
        raise StructuralViolation("State grid must be strictly increasing")
    runner = runner or SweepRunner(None, tol, diagnostics, jobs)
    runner.oracle = _minimax_record(game, budget or SearchBudget(), tie_tol)
    return runner.run(xs, "sequential")


# ----------------------------------------------------------------------
# A-lower semicontinuity of a sequential game


@dataclass
class ALscReport:
    x0: float
    status: AssumptionStatus
    reason: str
    witness: dict = None

    def to_json(self):
        return {"x0": self.x0, "status": self.status.value, "reason": self.reason, "witness": self.witness}


def _targets_at(game, x0, a0):
    B0 = game.b_set(x0, a0)
    return [(a0, b) for b in _target_points(B0) or [B0.reference_point()]]


def _selection_targets(game, x0, A0, targets, selection):
    """Targets at the limit of a converging selection; every target when it escapes."""
    tail = [a for _, a in selection[-SEQUENCE_TAIL:]]
    limit = tail[-1]
    slack = SEMICONTINUITY_TOL * max(1.0, abs(limit))
    if max(tail) - min(tail) > slack:
        return targets
    a_star = float(A0.snap(limit))
    if abs(a_star - limit) > slack:
        return targets
    return _targets_at(game, x0, a_star)


def classify_sequential_a_lsc(game, x0, steps=SEQUENCE_STEPS, scale=1.0):
    """
    A-lower semicontinuity of B(x, a) at x0.

    Structural when B does not depend on a. Otherwise sequences x_n -> x0
    with the extreme selections a_n of A(x_n) are checked: a target
    b in B(x0, a*) that stays away from every B(x_n, a_n) refutes it, where
    a* is the limit of the selection. A selection without a limit in A(x0)
    is checked against the targets of every sampled a0. An unrefuted game
    whose A(x) is compact along the sequences is structural.
    """
    if not game.phi_b.depends_on("a"):
        return ALscReport(x0, AssumptionStatus.STRUCTURAL, "B(x, a) does not depend on a")

    A0 = game.a_set(x0)
    targets = []
    for a0 in _target_points(A0) or [A0.reference_point()]:
        targets.extend(_targets_at(game, x0, a0))

    compact = A0.is_compact
    offsets = scale * 2.0 ** -np.arange(1, steps + 1)
    for sign in (1.0, -1.0):
        xs = x0 + sign * offsets
        if not all(game.x_domain.contains(x) for x in xs):
            continue
        try:
            sets = [game.a_set(float(x)) for x in xs]
        except SaddleKitError:
            continue
        compact = compact and all(s.is_compact for s in sets)
        for pick in (min, max):
            selection = []
            for x, A in zip(xs, sets):
                candidates = _target_points(A)
                if not candidates:
                    break
                selection.append((float(x), float(pick(candidates))))
            if len(selection) < len(xs):
                continue
            for a0, b in _selection_targets(game, x0, A0, targets, selection):
                distances = [_distance_to_set(b, game.b_set(x, a)) for x, a in selection]
                tail = distances[-SEQUENCE_TAIL:]
                if min(tail) > SEMICONTINUITY_TOL * max(1.0, abs(b)):
                    witness = {
                        "target": {"a": a0, "b": b},
                        "x": [x for x, _ in selection[-SEQUENCE_TAIL:]],
                        "a": [a for _, a in selection[-SEQUENCE_TAIL:]],
                        "distances": tail,
                    }
                    logger.debug(f"A-lsc refuted at x0={x0!r}: {witness}")
                    return ALscReport(x0, AssumptionStatus.REFUTED, "B(x_n, a_n) stays away from a target", witness)

    if compact:
        return ALscReport(x0, AssumptionStatus.STRUCTURAL, "A(x) compact-valued along the sampled sequences")
    return ALscReport(x0, AssumptionStatus.NOT_DECLARED, "no witness found")
