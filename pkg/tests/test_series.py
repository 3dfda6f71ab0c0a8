"""Series summation with divergence detection."""

import math

import numpy as np
import pytest

from src.core.errors import BudgetExhausted
from src.core.series import SeriesStatus, sum_series

TOL = 1e-10


class TestSumSeries:

    def test_geometric(self):
        verdict = sum_series(lambda ks: 0.5 ** ks, tol=1e-14)
        assert verdict.converged
        assert verdict.value == pytest.approx(1.0, abs=1e-12)
        assert verdict.value <= 1.0 <= verdict.value + verdict.tail_bound + 1e-15

    def test_negative_orientation(self):
        verdict = sum_series(lambda ks: 0.5 ** ks, sign=-1)
        assert verdict.converged
        assert verdict.value == pytest.approx(-1.0, abs=1e-8)

    def test_leading_zeros(self):
        verdict = sum_series(lambda ks: np.where(ks > 20, 0.5 ** (ks - 20), 0.0), tol=TOL)
        assert verdict.converged
        assert verdict.value == pytest.approx(1.0, abs=1e-8)

    def test_all_zero(self):
        verdict = sum_series(lambda ks: np.zeros(len(ks)))
        assert verdict.converged and verdict.value == 0.0

    def test_infinite_term(self):
        verdict = sum_series(lambda ks: np.where(ks == 3, math.inf, 1.0))
        assert verdict.status is SeriesStatus.DIVERGES_PLUS
        assert verdict.magnitude() == math.inf

    def test_growing_terms(self):
        verdict = sum_series(lambda ks: 1.5 ** ks, sign=-1)
        assert verdict.status is SeriesStatus.DIVERGES_MINUS
        assert verdict.value == -math.inf

    def test_constant_terms_diverge(self):
        verdict = sum_series(lambda ks: np.ones(len(ks)))
        assert verdict.status is SeriesStatus.DIVERGES_PLUS

    def test_harmonic_is_undecided(self):
        with pytest.raises(BudgetExhausted) as info:
            sum_series(lambda ks: 1.0 / ks, max_terms=500)
        assert info.value.best > 6.0

    def test_rejects_negative_terms(self):
        with pytest.raises(ValueError):
            sum_series(lambda ks: -np.ones(len(ks)))
