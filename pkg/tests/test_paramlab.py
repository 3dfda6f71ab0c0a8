"""Parametric families: structural assumptions, set distance, sweeps."""

from dataclasses import replace

import numpy as np
import pytest

from src.core.catalog import ALL_FLAGS, family, sequential
from src.core.domains import Interval, RealLine
from src.core.errors import AssumptionRefuted, EmptyCluster, StructuralViolation
from src.core.expr import as_expr, to_text
from src.core.measures import FiniteSupport
from src.core.paramlab import (
    AssumptionStatus,
    FamilyFlags,
    GameFamily,
    SweepRunner,
    classify_assumptions,
    classify_sequential_a_lsc,
    map_jobs,
    set_distance,
    sweep,
    sweep_sequential,
    x_grid,
)
from src.core.turnbased import ConstantMap, IntervalMap

TOL = 1e-4


def _switch():
    return replace(family("switch"), x_grid=x_grid(-1, 1, 9))


class TestFamilies:

    def test_flags_from_mapping(self):
        flags = FamilyFlags.from_mapping({"C_LSC": True, "b_compact": 1})
        assert flags.c_lsc and flags.B_compact
        assert not flags.c_usc

    def test_unknown_flag(self):
        with pytest.raises(ValueError):
            FamilyFlags.from_mapping({"c_smooth": True})

    def test_grid(self):
        grid = x_grid(-1, 1, 9)
        assert grid[4] == 0.0
        assert list(x_grid(3, 5, 1)) == [3.0]

    def test_grid_must_increase(self):
        with pytest.raises(StructuralViolation):
            GameFamily("a", [0.0, 0.0, 1.0], ConstantMap(RealLine()), ConstantMap(Interval(0, 1)))

    def test_b_may_not_depend_on_a(self):
        with pytest.raises(StructuralViolation):
            GameFamily("a", [0.0, 1.0], ConstantMap(RealLine()), IntervalMap.from_text("0", "1 + a^2"))

    def test_json(self):
        document = family("separable").to_json()
        assert document["payoff"] == to_text(as_expr("x + a^2 - b^2"))
        assert document["flags"] == ALL_FLAGS.to_json()


class TestAssumptions:

    def test_separable_family(self):
        report = classify_assumptions(family("separable"))
        for name in ("A1", "A2", "A3", "A4", "B_compact"):
            assert report.status(name) is AssumptionStatus.DECLARED
        assert report.status("A_lsc") is AssumptionStatus.STRUCTURAL
        assert report.definition_violations == []

    def test_switch_is_not_usc(self):
        report = classify_assumptions(_switch())
        assert report.status("A1") is AssumptionStatus.DECLARED
        assert report.status("A2") is AssumptionStatus.REFUTED
        assert report.verdicts["A2"].witness["limit"][0] == 0.0
        assert report.unmet(("A1", "A4")) == []
        assert report.refuted() == ["A2"]

    def test_undeclared(self):
        report = classify_assumptions(family("widening"))
        assert report.status("B_compact") is AssumptionStatus.NOT_DECLARED
        assert set(report.unmet(("A1", "A2", "A3", "A4", "B_compact"))) == {"A2", "B_compact"}

    def test_json(self):
        document = classify_assumptions(family("separable")).to_json()
        names = [entry["name"] for entry in document["assumptions"]]
        assert names == sorted(names)
        assert document["probes_used"] > 0


class TestSetDistance:

    def test_points(self):
        assert set_distance([0.0, 1.0], [0.0]) == 1.0
        assert set_distance([0.0], [0.0, 1.0]) == 0.0

    def test_light_atoms_are_excluded(self):
        cluster = [(0.0, 0.995), (5.0, 0.005)]
        assert set_distance(cluster, [0.0]) == 0.0
        assert set_distance(cluster, [0.0], excluded_mass=0.0) == 5.0

    def test_strategies(self):
        assert set_distance(FiniteSupport.point_mass(2.0), [0.5]) == pytest.approx(1.5)

    def test_empty(self):
        with pytest.raises(EmptyCluster):
            set_distance([], [1.0])


class TestSweep:

    def test_switch_is_lsc(self, small_refinement):
        report = sweep(_switch(), TOL, "lsc", small_refinement)
        assert report.values() == pytest.approx([0, 0, 0, 0, 0, 1, 1, 1, 1], abs=1e-6)
        assert report.lsc_verdict == "PASS"
        assert report.continuity_verdict == "FAIL"
        assert [w["x"] for w in report.usc_violations] == [0.0]
        assert report.passed

    def test_switch_needs_usc_for_continuity(self, small_refinement):
        with pytest.raises(AssumptionRefuted) as excinfo:
            sweep(_switch(), TOL, "continuity", small_refinement)
        assert excinfo.value.report.status("A2") is AssumptionStatus.REFUTED

    def test_exploratory(self, small_refinement):
        report = sweep(_switch(), TOL, "continuity", small_refinement, exploratory=True)
        assert report.exploratory
        assert report.unmet_assumptions == ["A2"]
        assert not report.passed

    def test_drift_is_continuous(self, small_refinement):
        fam = replace(family("drift"), x_grid=x_grid(-2, 2, 5))
        report = sweep(fam, TOL, "continuity", small_refinement)
        assert report.values() == pytest.approx(np.zeros(5), abs=1e-3)
        assert report.continuity_verdict == "PASS"
        assert report.multifunction_usc_violations == []
        assert report.passed

    @pytest.mark.slow
    def test_drift_full_grid(self):
        report = sweep(family("drift"), TOL, "continuity")
        assert report.passed
        assert np.max(np.abs(report.values())) < 1e-3

    def test_drop_below_jump_threshold_is_an_lsc_violation(self, small_refinement):
        fam = GameFamily(
            "a^2 + 0.0008*b*[x<=0]", x_grid(-1, 1, 9), ConstantMap(RealLine()), ConstantMap(Interval(0, 1)), ALL_FLAGS,
        )
        report = sweep(fam, TOL, "lsc", small_refinement, exploratory=True)
        assert report.continuity_failures == []
        assert report.lsc_verdict == "FAIL"
        assert [w["x"] for w in report.lsc_violations] == [0.0]
        witness = report.lsc_violations[0]
        assert witness["side"] == "right"
        assert witness["limit"] == pytest.approx(0.0, abs=TOL)
        assert "lsc_violation" in report.records[4].flags

    def test_sloped_values_are_not_violations(self, small_search):
        report = sweep_sequential(sequential("separable"), x_grid(-1, 1, 5), TOL, small_search)
        assert report.lsc_violations == []
        assert report.usc_violations == []

    def test_unbounded_payoff(self, small_refinement):
        fam = GameFamily("a", x_grid(0, 1, 3), ConstantMap(RealLine()), ConstantMap(Interval(0, 1)), ALL_FLAGS)
        with pytest.raises(StructuralViolation) as excinfo:
            sweep(fam, TOL, "lsc", small_refinement)
        assert excinfo.value.report.definition_violations

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            sweep(_switch(), TOL, "smooth")

    def test_signals(self, small_refinement):
        runner = SweepRunner(None, TOL)
        seen = []
        verdicts = []
        runner.record_computed.connect(lambda i, x, v: seen.append(i))
        runner.sweep_finished.connect(verdicts.append)
        sweep(_switch(), TOL, "lsc", small_refinement, runner=runner)
        assert seen == list(range(9))
        assert verdicts == ["FAIL"]

    def test_report_json(self, small_refinement):
        document = sweep(_switch(), TOL, "lsc", small_refinement).to_json()
        assert document["diagnostics"]["lsc_verdict"] == "PASS"
        assert "jump" in document["records"][4]["flags"]
        assert document["passed"] is True

    def test_jobs_keep_order(self):
        assert map_jobs(lambda v: v * v, range(10), jobs=4) == [v * v for v in range(10)]


class TestSequentialSweep:

    def test_separable(self, small_search):
        report = sweep_sequential(sequential("separable"), x_grid(0, 1, 5), TOL, small_search)
        assert report.values() == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0], abs=1e-9)
        assert report.passed

    def test_switch(self, small_search):
        report = sweep_sequential(sequential("switch"), x_grid(-1, 1, 9), TOL, small_search)
        assert report.profile == "sequential"
        assert report.lsc_violations == []
        assert [w["x"] for w in report.usc_violations] == [0.0]
        assert not report.passed

    def test_grid_must_increase(self):
        with pytest.raises(StructuralViolation):
            sweep_sequential(sequential("separable"), [1.0, 0.0])


class TestALsc:

    def test_action_independent_replies(self):
        report = classify_sequential_a_lsc(sequential("separable"), 0.0)
        assert report.status is AssumptionStatus.STRUCTURAL

    def test_escaping_actions(self):
        report = classify_sequential_a_lsc(sequential("escape"), 0.0)
        assert report.status is AssumptionStatus.REFUTED
        assert report.witness["target"] == {"a": 0.0, "b": 0.0}

    def test_compact_actions(self):
        report = classify_sequential_a_lsc(sequential("reply"), 0.5)
        assert report.status is AssumptionStatus.STRUCTURAL
