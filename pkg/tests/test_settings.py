"""Settings manager and the budgets it hands out."""

import json

import pytest

from src.core.settings import CATEGORIES, SettingsManager


@pytest.fixture
def settings(tmp_path):
    return SettingsManager(str(tmp_path / "settings.json"))


class TestSettings:

    def test_defaults(self, settings):
        assert settings.get_setting("tol") == 1e-4
        assert settings.get_setting("log_level") == "warn"
        assert settings.get_all_settings() == settings.get_default_settings()

    def test_every_category_key_has_a_default(self, settings):
        for keys in CATEGORIES.values():
            for key in keys:
                assert key in settings.get_default_settings()

    def test_unknown_key(self, settings):
        with pytest.raises(KeyError):
            settings.set_setting("colour", "red")

    def test_signal_only_on_change(self, settings):
        seen = []
        settings.setting_changed.connect(lambda key, value: seen.append((key, value)))
        settings.set_setting("tol", 1e-6)
        settings.set_setting("tol", 1e-6)
        assert seen == [("tol", 1e-6)]

    def test_reset(self, settings):
        settings.set_setting("max_refine", 3)
        settings.reset_setting("max_refine")
        assert settings.get_setting("max_refine") == 12

    def test_category(self, settings):
        assert set(settings.get_settings_by_category("logging")) == {"log_level", "log_to_file"}
        assert settings.get_settings_by_category("nothing") == {}


class TestPersistence:

    def test_save_and_load(self, tmp_path):
        path = tmp_path / "nested" / "settings.json"
        first = SettingsManager(str(path))
        first.set_setting("grid_start", 17)
        first.save_settings()

        second = SettingsManager(str(path))
        second.load_settings()
        assert second.get_setting("grid_start") == 17

    def test_persist_on_set(self, tmp_path):
        path = tmp_path / "settings.json"
        SettingsManager(str(path), persist=True).set_setting("tie_tol", 1e-3)
        assert json.loads(path.read_text())["tie_tol"] == 1e-3

    def test_unknown_keys_are_dropped(self, settings, tmp_path):
        path = tmp_path / "extra.json"
        path.write_text(json.dumps({"tol": 0.5, "theme": "dark"}))
        assert settings.import_settings(str(path))
        assert settings.get_setting("tol") == 0.5
        assert "theme" not in settings.get_all_settings()

    def test_broken_file(self, settings, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert not settings.import_settings(str(path))
        settings.settings_file = str(path)
        settings.load_settings()
        assert settings.get_all_settings() == settings.get_default_settings()

    def test_export(self, settings, tmp_path):
        path = tmp_path / "out.json"
        assert settings.export_settings(str(path))
        assert json.loads(path.read_text())["grid_max"] == 257


class TestBudgets:

    def test_search_budget(self, settings):
        settings.set_setting("search_grid", 65)
        budget = settings.search_budget()
        assert budget.grid_points == 65
        assert budget.golden_iterations == 40

    def test_refinement_budget(self, settings):
        budget = settings.refinement_budget()
        assert (budget.max_refine, budget.grid_start, budget.grid_max) == (12, 33, 257)
        assert budget.search.grid_points == 257

    def test_diagnostics_budget(self, settings):
        settings.set_setting("bisection_depth", 3)
        budget = settings.diagnostics_budget()
        assert budget.bisection_depth == 3
        assert budget.jump_tol_factor == 10.0
