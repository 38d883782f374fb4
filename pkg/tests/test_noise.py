"""Tests for noise generation and the condition diagnostics."""

import numpy as np
import pytest

from simplel import (AlphaGrid, ConditionVariant, ParameterError, add_noise,
                     condition_constant, make_diagonal_problem)


@pytest.fixture
def problem():
    return make_diagonal_problem(200, 2.0, 1.6)


class TestAddNoise:
    def test_exact_relative_level(self, problem):
        data = add_noise(problem, 0.05, 0.6, seed=1)
        achieved = np.linalg.norm(data.noise_coeffs) / np.linalg.norm(problem.ydata_coeffs)
        assert achieved == pytest.approx(0.05, rel=1e-12)
        assert data.abs_delta == np.linalg.norm(data.noise_coeffs)

    def test_same_seed_bitwise_identical(self, problem):
        a = add_noise(problem, 0.01, 0.6, seed=7)
        b = add_noise(problem, 0.01, 0.6, seed=7)
        assert np.array_equal(a.noise_coeffs, b.noise_coeffs)

    def test_different_seeds_differ(self, problem):
        a = add_noise(problem, 0.01, 0.6, seed=7)
        b = add_noise(problem, 0.01, 0.6, seed=8)
        assert not np.array_equal(a.noise_coeffs, b.noise_coeffs)

    def test_data_coeffs_cached_sum(self, problem):
        data = add_noise(problem, 0.01, 0.6, seed=3)
        assert np.array_equal(data.data_coeffs,
                              problem.ydata_coeffs + data.noise_coeffs)

    def test_monte_carlo_first_component(self):
        # undoing the block rescaling must leave standard normal draws
        prob = make_diagonal_problem(1000, 2.0, 1.6)
        weights = np.arange(1, prob.n + 1, dtype=float) ** (-0.6)
        draws = []
        for seed in range(100):
            data = add_noise(prob, 0.01, 0.6, seed=seed)
            tilde = np.random.default_rng(seed).standard_normal(prob.n)
            # noise must be a positive multiple of weights * tilde
            ratio = data.noise_coeffs / (weights * tilde)
            assert np.all(ratio > 0.0)
            assert np.allclose(ratio, ratio[0], rtol=1e-12)
            scale = ratio[0]
            draws.append(data.noise_coeffs[0] / (scale * weights[0]))
        draws = np.array(draws)
        assert abs(np.mean(draws)) < 3.0 / np.sqrt(100)
        assert abs(np.var(draws) - 1.0) < 0.3

    def test_invalid_level(self, problem):
        with pytest.raises(ParameterError):
            add_noise(problem, 0.0, 0.6, seed=1)


class TestConditionConstant:
    def setup_method(self):
        self.lam = np.array([1.0, 0.01])
        self.coeffs = np.array([1.0, 1.0])
        self.grid = np.array([0.1])

    def test_mc1_two_term(self):
        rep = condition_constant(self.coeffs, self.lam, self.grid, ConditionVariant.MC1)
        assert rep.constant == pytest.approx(0.1, abs=1e-15)

    def test_mc2_two_term(self):
        rep = condition_constant(self.coeffs, self.lam, self.grid, ConditionVariant.MC2)
        assert rep.constant == pytest.approx(1.0, abs=1e-15)

    def test_zero_upper_support(self):
        lam = np.array([1e-6, 1e-8])
        coeffs = np.array([1.0, 1.0])
        grid = np.array([1.0, 0.1])
        for variant in (ConditionVariant.MC1, ConditionVariant.MC2):
            rep = condition_constant(coeffs, lam, grid, variant)
            assert rep.constant == 0.0

    def test_unbounded_marker(self):
        # all noise above the split with an empty lower part
        lam = np.array([1.0])
        rep = condition_constant(np.array([1.0]), lam, np.array([0.5]),
                                 ConditionVariant.MC2)
        assert np.isinf(rep.constant)

    def test_empty_grid_rejected(self):
        with pytest.raises(ParameterError):
            condition_constant(self.coeffs, self.lam, np.array([]), ConditionVariant.MC1)

    def test_tie_counted_both_sides(self):
        lam = np.array([1.0, 0.5])
        coeffs = np.array([1.0, 2.0])
        rep = condition_constant(coeffs, lam, np.array([0.5]), ConditionVariant.MC1)
        # upper: lambda in {1.0, 0.5}; lower: lambda = 0.5 only
        expected = (0.5 / 1.0 * 1.0 + 0.5 / 0.5 * 4.0) / 4.0
        assert rep.constant == pytest.approx(expected, abs=1e-15)


class TestConditionInvariants:
    def _measured(self, coeffs, lam, grid, variant):
        return condition_constant(coeffs, lam, grid, variant).constant

    def test_mc2_dominates_mc1(self, problem):
        grid = AlphaGrid.default_for(problem, 60)
        for seed in range(5):
            e = add_noise(problem, 0.01, 0.6, seed=seed).noise_coeffs
            c1 = self._measured(e, problem.lambdas, grid, ConditionVariant.MC1)
            c2 = self._measured(e, problem.lambdas, grid, ConditionVariant.MC2)
            assert np.isfinite(c2)
            assert c1 <= c2 + 1e-12

    def test_reg2_dominates_reg1(self, problem):
        grid = AlphaGrid.default_for(problem, 60)
        x = problem.xdag_coeffs
        d1 = self._measured(x, problem.lambdas, grid, ConditionVariant.REG1)
        d2 = self._measured(x, problem.lambdas, grid, ConditionVariant.REG2)
        assert np.isfinite(d2)
        assert d1 <= d2 + 1e-12

    def test_scale_invariance(self, problem):
        grid = AlphaGrid.default_for(problem, 40)
        e = add_noise(problem, 0.01, 0.6, seed=9).noise_coeffs
        for variant in ConditionVariant:
            base = self._measured(e, problem.lambdas, grid, variant)
            scaled = self._measured(17.5 * e, problem.lambdas, grid, variant)
            assert scaled == pytest.approx(base, rel=1e-12)


def test_condition_report_csv(tmp_path, problem):
    grid = AlphaGrid.default_for(problem, 10)
    data = add_noise(problem, 0.01, 0.6, seed=2)
    rep = condition_constant(data.noise_coeffs, problem.lambdas, grid,
                             ConditionVariant.MC1)
    target = tmp_path / "mc1.csv"
    rep.write_csv(target)
    lines = target.read_text().strip().splitlines()
    assert lines[0] == "alpha,lhs,rhs,ratio"
    assert len(lines) == 11
