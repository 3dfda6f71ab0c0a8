#!/usr/bin/env python3
# SaddleKit - Shared Test Fixtures

import pytest

from src.core.continuous_game import RefinementBudget
from src.core.search import SearchBudget


@pytest.fixture
def small_search():
    """Coarse search budget for fast engine tests."""
    return SearchBudget(grid_points=65, golden_iterations=30, refine_cells=2)


@pytest.fixture
def small_refinement(small_search):
    return RefinementBudget(max_refine=6, grid_start=17, grid_max=65, search=small_search)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)
