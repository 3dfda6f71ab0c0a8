#!/usr/bin/env python3
# SaddleKit - Settings Manager

import os
import json
from PyQt6.QtCore import QObject, pyqtSignal

from src.core.continuous_game import RefinementBudget
from src.core.paramlab import DiagnosticsBudget
from src.core.search import SearchBudget
from src.utils.logger import get_logger

SETTINGS_FILE = os.path.expanduser("~/.saddlekit/settings.json")

CATEGORIES = {
    "solver": ["tol", "max_refine", "grid_start", "grid_max", "lp_tol", "fictitious_iters", "tie_tol"],
    "search": ["search_grid", "golden_iterations", "refine_cells", "max_doublings", "growth_run"],
    "series": ["series_tol", "series_max_terms", "probe_budget"],
    "sweep": ["diag_tol_factor", "jump_tol_factor", "set_tol_factor", "bisection_depth"],
    "logging": ["log_level", "log_to_file"],
}


class SettingsManager(QObject):
    """
    Manages solver settings and configuration.
    Engines never read it directly: it hands out frozen budgets.
    """

    # Signals
    setting_changed = pyqtSignal(str, object)
    settings_loaded = pyqtSignal()
    settings_saved = pyqtSignal()

    def __init__(self, settings_file=None, persist=False):
        """Initialize the settings manager."""
        super().__init__()
        self.logger = get_logger("settings")

        # Settings file
        self.settings_file = settings_file or SETTINGS_FILE
        self.persist = persist

        # Settings
        self.settings = {}

        # Default settings
        self.default_settings = {
            # Solver settings
            "tol": 1e-4,
            "max_refine": 12,
            "grid_start": 33,
            "grid_max": 257,
            "lp_tol": 1e-9,
            "fictitious_iters": 10000,
            "tie_tol": 1e-6,
            # Search settings
            "search_grid": 257,
            "golden_iterations": 40,
            "refine_cells": 3,
            "max_doublings": 40,
            "growth_run": 4,
            # Series settings
            "series_tol": 1e-10,
            "series_max_terms": 10000,
            "probe_budget": 64,
            # Sweep diagnostics
            "diag_tol_factor": 5,
            "jump_tol_factor": 10,
            "set_tol_factor": 100,
            "bisection_depth": 6,
            # Logging
            "log_level": "warn",
            "log_to_file": False,
        }
        self.settings = self.default_settings.copy()

    def load_settings(self):
        """Load settings from file; unreadable files leave the defaults in place."""
        try:
            if os.path.exists(self.settings_file):
                with open(self.settings_file, "r") as f:
                    loaded = json.load(f)
                self.settings = {**self.default_settings, **self._known(loaded)}

            # Emit signal
            self.settings_loaded.emit()

        except (OSError, ValueError) as e:
            self.logger.error(f"Error loading settings: {e}")
            self.settings = self.default_settings.copy()

    def save_settings(self):
        """Save settings to file."""
        try:
            os.makedirs(os.path.dirname(self.settings_file) or ".", exist_ok=True)
            with open(self.settings_file, "w") as f:
                json.dump(self.settings, f, indent=4, sort_keys=True)

            # Emit signal
            self.settings_saved.emit()

        except OSError as e:
            self.logger.error(f"Error saving settings: {e}")

    def _known(self, values):
        known = {}
        for key, value in values.items():
            if key in self.default_settings:
                known[key] = value
            else:
                self.logger.warning(f"Ignoring unknown setting {key!r}")
        return known

    def get_setting(self, key, default=None):
        """Get a setting."""
        return self.settings.get(
            key, default if default is not None else self.default_settings.get(key)
        )

    def set_setting(self, key, value):
        """Set a setting."""
        if key not in self.default_settings:
            raise KeyError(f"Unknown setting: {key!r}")

        # Check if value is different
        if key in self.settings and self.settings[key] == value:
            return

        # Update setting
        self.settings[key] = value

        if self.persist:
            self.save_settings()

        # Emit signal
        self.setting_changed.emit(key, value)

    def reset_setting(self, key):
        """Reset a setting to default."""
        if key in self.default_settings:
            self.set_setting(key, self.default_settings[key])

    def get_all_settings(self):
        """Get all settings."""
        return self.settings

    def get_default_settings(self):
        """Get default settings."""
        return self.default_settings

    def import_settings(self, settings_file):
        """Import settings from a file."""
        try:
            with open(settings_file, "r") as f:
                imported_settings = self._known(json.load(f))

            # Update settings
            self.settings.update(imported_settings)

            if self.persist:
                self.save_settings()

            # Emit signals for all settings
            for key, value in imported_settings.items():
                self.setting_changed.emit(key, value)

            return True

        except (OSError, ValueError) as e:
            self.logger.error(f"Error importing settings: {e}")
            return False

    def export_settings(self, settings_file):
        """Export settings to a file."""
        try:
            with open(settings_file, "w") as f:
                json.dump(self.settings, f, indent=4, sort_keys=True)

            return True

        except OSError as e:
            self.logger.error(f"Error exporting settings: {e}")
            return False

    def get_settings_by_category(self, category):
        """Get settings by category."""
        return {k: self.settings[k] for k in CATEGORIES.get(category, []) if k in self.settings}

    # ------------------------------------------------------------------
    # Budgets

    def search_budget(self):
        return SearchBudget(
            grid_points=int(self.get_setting("search_grid")),
            golden_iterations=int(self.get_setting("golden_iterations")),
            refine_cells=int(self.get_setting("refine_cells")),
            max_doublings=int(self.get_setting("max_doublings")),
            growth_run=int(self.get_setting("growth_run")),
        )

    def refinement_budget(self):
        return RefinementBudget(
            max_refine=int(self.get_setting("max_refine")),
            grid_start=int(self.get_setting("grid_start")),
            grid_max=int(self.get_setting("grid_max")),
            lp_tol=float(self.get_setting("lp_tol")),
            search=self.search_budget(),
        )

    def diagnostics_budget(self):
        return DiagnosticsBudget(
            diag_tol_factor=float(self.get_setting("diag_tol_factor")),
            jump_tol_factor=float(self.get_setting("jump_tol_factor")),
            set_tol_factor=float(self.get_setting("set_tol_factor")),
            bisection_depth=int(self.get_setting("bisection_depth")),
        )
