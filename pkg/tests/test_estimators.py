import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eulervar.distributions import Exponential
from eulervar.estimators import (ILL_CONDITIONED, UNDEFINED, DegenerateWeightWarning, delta_allocation,
                                 empirical_quantile, empirical_quantiles, gaussian_closed_form,
                                 malliavin_allocation, tail_mean, weighted_tail_ratio)
from eulervar.models import DrawBatch, IndependentModel

from conftest import DESK_L
from oracles import gaussian_es_component

# closed form for the desk matrix, alpha = 0.99, from 30-digit arithmetic
ALLOC_99 = (1.8664014013460258, 1.7170892892383438, 3.6656123522435948)
VAR_99 = 7.2491030428279644


def batch_of(losses):
    losses = np.asarray(losses, dtype=float)
    return DrawBatch(np.zeros_like(losses), losses)


class TestEmpiricalQuantile:
    def test_examples(self):
        assert empirical_quantile(np.arange(1, 11), 0.9) == 9
        assert empirical_quantile([3, 1, 4, 2], 0.5) == 2
        assert empirical_quantile([5], 0.99) == 5

    def test_exact_ceiling(self):
        # 0.7 * 10 rounds to 7.000000000000001 in floating point
        assert empirical_quantile(np.arange(1, 11), 0.7) == 7
        assert empirical_quantile(np.arange(1, 101), 0.29) == 29

    def test_empty(self):
        with pytest.raises(ValueError):
            empirical_quantile([], 0.5)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5])
    def test_alpha_domain(self, alpha):
        with pytest.raises(ValueError):
            empirical_quantile([1.0, 2.0], alpha)

    @settings(max_examples=200, deadline=None)
    @given(xs=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), alpha=st.floats(1e-6, 1 - 1e-6))
    def test_order_statistic_property(self, xs, alpha):
        q = empirical_quantile(xs, alpha)
        n = len(xs)
        assert sum(x <= q for x in xs) >= math.ceil(alpha * n - 1e-9)
        assert empirical_quantiles(xs, [alpha]) == [q]
        assert empirical_quantile(list(reversed(xs)), alpha) == q


class TestDelta:
    def test_both_in_band(self):
        est = delta_allocation(batch_of([[1, 2], [2, 1]]), 0, 3.0, 3.0)
        assert est.value == 1.5 and est.tail_count == 2 and est.kind == "delta"

    def test_empty_band(self):
        est = delta_allocation(batch_of([[1, 2], [2, 1]]), 0, 4.0, 5.0)
        assert est.value is None and est.status == UNDEFINED and not est.defined

    def test_inverted_band(self):
        with pytest.raises(ValueError):
            delta_allocation(batch_of([[1, 2]]), 0, 1.0, 0.0)

    def test_whole_tail_equals_tail_mean(self, gaussian_model):
        b = gaussian_model.sample(20_000, np.random.default_rng(1))
        var = empirical_quantile(b.portfolio, 0.95)
        for i in range(3):
            assert delta_allocation(b, i, var, np.inf).value == tail_mean(b, i, var).value

    def test_median_symmetric(self, gaussian_model):
        b = gaussian_model.sample(200_000, np.random.default_rng(2))
        _, lo = gaussian_closed_form(DESK_L, 0.5 - 0.01)
        _, hi = gaussian_closed_form(DESK_L, 0.5 + 0.01)
        for i in range(3):
            est = delta_allocation(b, i, lo, hi)
            se = math.sqrt(gaussian_model.covariance[i, i] / est.tail_count)
            assert abs(est.value) < 4 * se


class TestMalliavinRatio:
    def test_equal_weights(self):
        est = weighted_tail_ratio([5, 5], [2, 4], [1, 1], 0.0, warn=False)
        assert est.value == 3.0 and est.degenerate_weight

    def test_weighted(self):
        assert weighted_tail_ratio([5, 5], [2, 4], [1, 3], 0.0).value == 3.5

    def test_negative_rescale(self):
        a = weighted_tail_ratio([5, 5], [2, 4], [1, 3], 0.0).value
        b = weighted_tail_ratio([5, 5], [2, 4], [-3, -9], 0.0).value
        assert a == b

    def test_only_tail_counts(self):
        est = weighted_tail_ratio([1, 5, 6], [100, 2, 4], [7, 1, 3], 4.5)
        assert est.value == 3.5 and est.tail_count == 2

    def test_empty_tail(self):
        est = weighted_tail_ratio([1, 2], [1, 2], [1, 2], 10.0)
        assert est.status == UNDEFINED and est.value is None and est.tail_count == 0

    def test_ill_conditioned(self):
        est = weighted_tail_ratio([5, 5, 5], [1, 2, 3], [1.0, -1.0, 1e-14], 0.0)
        assert est.status == ILL_CONDITIONED and est.value is None and est.tail_count == 3

    def test_failed_weights_excluded(self):
        est = weighted_tail_ratio([5, 5, 5], [2, 4, 1000], [1, 3, np.nan], 0.0)
        assert est.value == 3.5 and est.excluded == 1 and est.tail_count == 2

    def test_excluded_outside_tail_not_counted(self):
        est = weighted_tail_ratio([0, 5, 5], [2, 2, 4], [np.inf, 1, 3], 1.0)
        assert est.excluded == 0

    def test_scale_invariance_exact(self, gaussian_model):
        b = gaussian_model.sample(50_000, np.random.default_rng(3))
        w, ok = gaussian_model.weights(b, 0)
        var = VAR_99
        base = weighted_tail_ratio(b.portfolio, b.losses[:, 0], w, var, ok).value
        # negation and powers of two are exact in binary floating point
        for c in (-1.0, 2.0, -0.5, 1024.0, -2.0**-30):
            assert weighted_tail_ratio(b.portfolio, b.losses[:, 0], c * w, var, ok).value == base
        for c in (-3.0, 0.1, 7e5):
            got = weighted_tail_ratio(b.portfolio, b.losses[:, 0], c * w, var, ok).value
            assert got == pytest.approx(base, rel=1e-13)

    @settings(max_examples=100, deadline=None)
    @given(c=st.floats(-1e6, 1e6).filter(lambda c: abs(c) > 1e-6),
           seed=st.integers(0, 2**32 - 1))
    def test_scale_invariance_property(self, c, seed):
        rng = np.random.default_rng(seed)
        s, y, w = rng.standard_normal(200), rng.standard_normal(200), rng.uniform(0.5, 2.0, 200)
        a = weighted_tail_ratio(s, y, w, 0.0).value
        b = weighted_tail_ratio(s, y, c * w, 0.0).value
        assert b == pytest.approx(a, rel=1e-12, abs=1e-12)


class TestDegeneracy:
    def test_exponential_warns_and_matches_tail_mean(self):
        m = IndependentModel([Exponential(1.0), Exponential(2.0), Exponential(0.5)])
        b = m.sample(20_000, np.random.default_rng(4))
        var = empirical_quantile(b.portfolio, 0.99)
        for i in range(3):
            with pytest.warns(DegenerateWeightWarning):
                est = malliavin_allocation(b, m, i, var)
            assert est.degenerate_weight
            assert est.value == tail_mean(b, i, var).value

    def test_no_warning_when_weights_vary(self, gaussian_model):
        b = gaussian_model.sample(10_000, np.random.default_rng(5))
        with warnings.catch_warnings():
            warnings.simplefilter("error", DegenerateWeightWarning)
            est = malliavin_allocation(b, gaussian_model, 0, VAR_99)
        assert not est.degenerate_weight


class TestGaussianClosedForm:
    def test_desk_values(self):
        alloc, var = gaussian_closed_form(DESK_L, 0.99)
        np.testing.assert_allclose(alloc, ALLOC_99, rtol=0, atol=1e-12)
        assert var == pytest.approx(VAR_99, abs=1e-12)
        assert abs(alloc.sum() - var) < 1e-12

    def test_intermediate_quantities(self):
        sigma = DESK_L @ DESK_L.T
        np.testing.assert_allclose(sigma.sum(axis=1), [2.5, 2.3, 4.91], atol=1e-14)
        assert sigma.sum() == pytest.approx(9.71, abs=1e-13)

    def test_median_zero(self):
        alloc, var = gaussian_closed_form(DESK_L, 0.5)
        assert np.all(alloc == 0.0) and var == 0.0

    @pytest.mark.parametrize("alpha", [0.6, 0.9, 0.999])
    def test_identity_symmetric(self, alpha):
        from scipy.stats import norm
        alloc, _ = gaussian_closed_form(np.eye(2), alpha)
        assert alloc[0] == alloc[1]
        assert alloc[0] == pytest.approx(norm.ppf(alpha) / math.sqrt(2), abs=1e-12)

    def test_exposures_and_location(self, rng):
        lam = np.array([2.0, -1.0, 0.5])
        mu = np.array([0.1, 0.2, -0.3])
        alloc, var = gaussian_closed_form(DESK_L, 0.97, exposures=lam, mu=mu)
        assert abs(lam @ alloc - var) < 1e-12

    def test_zero_exposure(self):
        with pytest.raises(ValueError):
            gaussian_closed_form(DESK_L, 0.9, exposures=np.zeros(3))

    def test_es_exceeds_var_allocation(self, gaussian_model):
        b = gaussian_model.sample(100_000, np.random.default_rng(6))
        tm = tail_mean(b, 0, VAR_99)
        es = gaussian_es_component(2.5, 9.71, 0.99)
        assert es == pytest.approx(2.1382698655039743, abs=1e-9)
        se = math.sqrt(gaussian_model.covariance[0, 0] / tm.tail_count)
        assert abs(tm.value - es) < 4 * se
        assert tm.value > ALLOC_99[0]


class TestMalliavinGaussian:
    def test_replicates_within_3se(self, gaussian_model):
        vals = []
        for r in range(40):
            b = gaussian_model.sample(100_000, np.random.default_rng(1000 + r))
            vals.append(malliavin_allocation(b, gaussian_model, 0, VAR_99).value)
        vals = np.array(vals)
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - ALLOC_99[0]) < 3 * se
