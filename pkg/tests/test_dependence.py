"""Conditional-mean fits between predictors and the correlation matrix."""

import numpy as np
import pytest

from atdev import SimSpec, corr_matrix, fit_dependence, generate
from atdev.data import Dataset
from atdev.dependence import ols_line
from atdev.errors import DataError


def paired(n=50_000, seed=0, slope=0.8, noise=0.0):
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(-1, 1, n)
    x2 = slope * x1 + (rng.normal(0, noise, n) if noise else 0.0)
    return Dataset(names=["x1", "x2"], columns=[x1, np.asarray(x2)])


class TestLinearFit:
    def test_exact_line_recovered(self):
        d = paired(slope=0.8)
        dep = fit_dependence(d, 0)
        assert abs(dep.beta(1) - 0.8) < 1e-10
        assert abs(dep.intercept(1)) < 1e-10
        assert dep.resid_var(1) < 1e-12

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=10_000)
        y = 2.0 * x + rng.normal(size=10_000)
        d = Dataset(names=["a", "b"], columns=[x, y])
        dep = fit_dependence(d, 0)
        want = np.cov(x, y, bias=True)[0, 1] / np.var(x)
        assert abs(dep.beta(1) - want) < 1e-10

    def test_residuals_orthogonal_to_anchor(self):
        d = generate(SimSpec(case="additive_621", n=40_000, seed=2))
        dep = fit_dependence(d, 0)
        for k in (1, 2):
            resid = d.column(k) - (dep.beta(k) * d.column(0) + dep.intercept(k))
            assert abs(float(np.dot(resid, d.column(0)))) < 1e-8 * d.n

    def test_independent_columns_have_null_slope(self):
        rng = np.random.default_rng(2)
        n = 40_000
        x = rng.uniform(-1, 1, n)
        y = rng.uniform(-1, 1, n)
        d = Dataset(names=["a", "b"], columns=[x, y])
        dep = fit_dependence(d, 0)
        resid = y - (dep.beta(1) * x + dep.intercept(1))
        se = float(np.std(resid) / (np.std(x) * np.sqrt(n)))
        assert abs(dep.beta(1)) < 3.0 * se

    def test_strongly_anticorrelated_pair(self):
        d = generate(SimSpec(case="interaction_622", n=100_000, seed=5))
        dep = fit_dependence(d, 0)
        assert abs(dep.beta(1) - (-0.98)) < 0.05

    def test_own_column_slope_is_one(self):
        d = paired(n=1000)
        dep = fit_dependence(d, 0)
        assert np.all(dep.slope_at(0, d.column(0)) == 1.0)

    def test_constant_anchor_rejected(self):
        d = Dataset(names=["a", "b"], columns=[np.ones(50), np.arange(50.0)])
        with pytest.raises(DataError):
            fit_dependence(d, 0)

    def test_unknown_kind_rejected(self):
        d = paired(n=100)
        with pytest.raises(DataError):
            fit_dependence(d, 0, kind="splines")

    def test_anchor_out_of_range(self):
        d = paired(n=100)
        with pytest.raises(DataError):
            fit_dependence(d, 7)


class TestLocalLinearFit:
    def test_exactly_linear_data_reproduces_global_slope(self):
        d = paired(slope=0.8)
        dep = fit_dependence(d, 0, kind="local_linear", bins=25)
        assert np.max(np.abs(dep.bin_slopes[:, 1] - 0.8)) < 1e-10
        # evaluation anywhere on the support agrees too
        probe = np.linspace(-0.99, 0.99, 57)
        assert np.max(np.abs(dep.slope_at(1, probe) - 0.8)) < 1e-10

    def test_piecewise_constant_within_bins(self):
        d = generate(SimSpec(case="additive_621", n=30_000, seed=4))
        dep = fit_dependence(d, 0, kind="local_linear", bins=10)
        mids = (dep.edges[:-1] + dep.edges[1:]) / 2.0
        for frac in (0.2, 0.45):
            inside = mids + frac * np.diff(dep.edges)
            assert np.array_equal(dep.slope_at(1, mids), dep.slope_at(1, inside))

    def test_tracks_a_bending_conditional_mean(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(-1, 1, 80_000)
        y = x * x + rng.normal(0, 0.05, 80_000)
        d = Dataset(names=["a", "b"], columns=[x, y])
        dep = fit_dependence(d, 0, kind="local_linear", bins=25)
        # slope of E[y|x] = 2x: negative on the left, positive on the right
        assert dep.slope_at(1, -0.8)[0] < -1.2
        assert dep.slope_at(1, 0.8)[0] > 1.2
        assert abs(dep.slope_at(1, 0.0)[0]) < 0.4

    def test_finite_everywhere_on_observed_support(self):
        d = generate(SimSpec(case="complex_623", n=20_000, seed=1))
        for j in range(d.p):
            dep = fit_dependence(d, j, kind="local_linear", bins=25)
            for k in range(d.p):
                vals = dep.slope_at(k, d.column(j))
                assert np.all(np.isfinite(vals))


class TestCorrMatrix:
    def test_strong_pairwise_structure(self, d621):
        cm = corr_matrix(d621)
        # signs follow the generating equations; magnitudes are stable
        assert abs(cm.of(0, 1) - 0.9773) < 0.005
        assert abs(cm.of(0, 2) - (-0.9853)) < 0.005
        assert abs(cm.of(1, 2) - (-0.9627)) < 0.005

    def test_symmetric_unit_diagonal(self, d621):
        cm = corr_matrix(d621)
        assert np.allclose(cm.values, cm.values.T, atol=1e-12)
        assert np.allclose(np.diag(cm.values), 1.0)
        assert np.all(np.abs(cm.values) <= 1.0 + 1e-12)

    def test_self_and_mirror(self):
        x = np.random.default_rng(8).normal(size=500)
        d = Dataset(names=["a", "b"], columns=[x, -x])
        cm = corr_matrix(d)
        assert np.isclose(cm.of(0, 0), 1.0)
        assert np.isclose(cm.of(0, 1), -1.0)

    def test_constant_column_rejected(self):
        d = Dataset(names=["a", "b"], columns=[np.zeros(9), np.arange(9.0)])
        with pytest.raises(DataError):
            corr_matrix(d)


class TestOlsLine:
    def test_constant_x(self):
        a, b = ols_line(np.ones(5), np.arange(5.0))
        assert a == 0.0 and b == 2.0

    def test_recovers_line(self):
        x = np.arange(10.0)
        a, b = ols_line(x, 3.0 * x - 1.0)
        assert np.isclose(a, 3.0) and np.isclose(b, -1.0)
