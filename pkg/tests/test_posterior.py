"""Tests for the closed-form SP posterior and the TLPa conditionals in services/posterior.py."""

import math

import numpy as np
import pytest

from distributions import StrictPareto
from services.errors import DegenerateExcessError, InsufficientTailError, MeanUndefinedError, TlpaInputError
from services.models import ExceedanceSample, GammaParams, InvGammaParams
from services.posterior import (alpha_conditional, exact_gamma_conditional_mean, expected_alpha,
                                expected_alpha_grid, gamma_conditional_approx, log_one_minus_pow_sum,
                                make_excesses, sp_evi_posterior, sp_posterior, taylor_log_ratio,
                                tlpa_evi_conditional, tlpa_log_joint)


def _random_samples(count=20, size=50):
    return [ExceedanceSample.from_excesses(StrictPareto(gamma=2.0).sample(size, seed=100 + k).values)
            for k in range(count)]


def _reference_rate(log_y, gamma):
    """-sum(log(1 - exp(-2 gamma log y))) term by term with math.fsum."""
    return -math.fsum(math.log(-math.expm1(-2.0 * gamma * v)) for v in log_y)


class TestMakeExcesses:
    def test_relative_excesses(self):
        s = make_excesses([1.0, 2.0, 4.0, 8.0], rank=2)
        assert s.u == 2.0
        assert s.rank == 2
        np.testing.assert_array_equal(s.y, [2.0, 4.0])
        assert s.n == 2
        assert s.log_sum == pytest.approx(math.log(2.0) + math.log(4.0), rel=1e-15)

    def test_ties_with_threshold_are_not_exceedances(self):
        s = make_excesses([1.0, 2.0, 2.0, 4.0, 8.0], rank=2)
        np.testing.assert_array_equal(s.y, [2.0, 4.0])

    def test_scale_invariance(self):
        data = np.sort(StrictPareto(gamma=2.0).sample(40, seed=5).values)
        base = make_excesses(data, 10)
        doubled = make_excesses(2.0 * data, 10)
        np.testing.assert_array_equal(base.y, doubled.y)
        assert doubled.u == 2.0 * base.u
        scaled = make_excesses(3.7 * data, 10)
        np.testing.assert_allclose(scaled.y, base.y, rtol=1e-14)

    def test_all_ties_above_threshold(self):
        with pytest.raises(InsufficientTailError) as excinfo:
            make_excesses([1.0, 2.0, 3.0, 3.0, 3.0], rank=3)
        assert excinfo.value.rank == 3
        assert excinfo.value.n_exceed == 0

    @pytest.mark.parametrize("rank", [0, 4, 10])
    def test_rank_out_of_range(self, rank):
        with pytest.raises(TlpaInputError):
            make_excesses([1.0, 2.0, 3.0, 4.0, 5.0], rank=rank)

    def test_unsorted_data(self):
        with pytest.raises(TlpaInputError):
            make_excesses([3.0, 1.0, 2.0, 4.0], rank=1)

    def test_nonpositive_threshold(self):
        with pytest.raises(TlpaInputError):
            make_excesses([-1.0, 0.0, 1.0, 2.0, 3.0], rank=2)


class TestStrictParetoPosterior:
    def test_three_point_sample(self, three_point_sample):
        fit = sp_posterior(three_point_sample)
        assert fit.posterior.shape == 3.0
        assert fit.posterior.rate == pytest.approx(6.0, rel=1e-12)
        assert fit.gamma_hat == pytest.approx(0.5, rel=1e-12)
        assert fit.evi == pytest.approx(2.0, rel=1e-12)

    def test_single_excess(self):
        fit = sp_posterior(ExceedanceSample.from_excesses([math.e]))
        assert fit.posterior.shape == 1.0
        assert fit.posterior.rate == pytest.approx(1.0, rel=1e-12)
        assert fit.gamma_hat == pytest.approx(1.0, rel=1e-12)
        with pytest.raises(MeanUndefinedError):
            sp_evi_posterior(fit).mean()

    def test_evi_posterior_mean(self, three_point_sample):
        evi_post = sp_evi_posterior(sp_posterior(three_point_sample))
        assert evi_post.mean() == pytest.approx(3.0, rel=1e-12)

    @pytest.mark.parametrize("shape, rate", [(5.0, 10.0), (3.0, 6.0)])
    def test_evi_posterior_mean_by_simulation(self, shape, rate):
        draws = InvGammaParams(shape=shape, rate_sum=rate).sample(np.random.default_rng(42), size=1_000_000)
        assert np.mean(draws) == pytest.approx(rate / (shape - 1.0), rel=0.02)

    def test_log_density_is_gamma_up_to_a_constant(self):
        """(n - 1) log gamma - gamma S differs from Gamma(n, S).logpdf by a constant."""
        for s in _random_samples(count=5):
            gammas = np.linspace(0.1, 10.0, 50)
            kernel = (s.n - 1) * np.log(gammas) - gammas * s.log_sum
            diff = kernel - sp_posterior(s).posterior.logpdf(gammas)
            assert np.ptp(diff) < 1e-9

    def test_credible_interval_contains_mean(self, three_point_sample):
        fit = sp_posterior(three_point_sample)
        lo, hi = fit.interval(0.95)
        assert lo < fit.gamma_hat < hi
        evi_lo, evi_hi = fit.evi_interval(0.95)
        assert evi_lo < 3.0 < evi_hi


class TestInvGamma:
    def test_mean_undefined_at_shape_one(self):
        with pytest.raises(MeanUndefinedError):
            InvGammaParams(shape=1.0, rate_sum=2.0).mean()

    def test_variance(self):
        assert InvGammaParams(shape=5.0, rate_sum=10.0).var() == pytest.approx(100.0 / 48.0)
        with pytest.raises(MeanUndefinedError):
            InvGammaParams(shape=2.0, rate_sum=1.0).var()

    def test_invalid_parameters(self):
        with pytest.raises(TlpaInputError):
            GammaParams(shape=0.0, rate=1.0)
        with pytest.raises(TlpaInputError):
            InvGammaParams(shape=1.0, rate_sum=-1.0)


class TestTLPaLogJoint:
    def test_three_point_sample_value(self, three_point_sample):
        t_sum = math.fsum(math.log(-math.expm1(-2.0 * k)) for k in (1, 2, 3))
        expected = 2.0 * math.log(2.0) + 2.0 * math.log(1.0) - 3.0 * 6.0 + t_sum
        assert tlpa_log_joint(1.0, 2.0, three_point_sample) == pytest.approx(expected, rel=1e-12)

    def test_alpha_one_leaves_the_strict_pareto_kernel(self, three_point_sample):
        s = three_point_sample
        for gamma in (0.1, 0.5, 1.0, 3.0):
            sp_kernel = (s.n - 1) * math.log(gamma) - (2.0 * gamma + 1.0) * s.log_sum
            assert tlpa_log_joint(gamma, 1.0, s) == pytest.approx(sp_kernel, abs=1e-12)

    def test_adding_copies_of_one_excess(self):
        base = [1.5, 2.0, 3.0, 7.0]
        y0, k = 2.5, 3
        gamma, alpha = 0.8, 1.7
        before = tlpa_log_joint(gamma, alpha, ExceedanceSample.from_excesses(base))
        after = tlpa_log_joint(gamma, alpha, ExceedanceSample.from_excesses(base + [y0] * k))
        predicted = k * (math.log(alpha) + math.log(gamma) - (2.0 * gamma + 1.0) * math.log(y0)
                         + (alpha - 1.0) * math.log(-math.expm1(-2.0 * gamma * math.log(y0))))
        assert after - before == pytest.approx(predicted, rel=1e-10)

    def test_alpha_conditional_is_conjugate(self):
        alphas = np.linspace(0.1, 10.0, 50)
        for s in _random_samples():
            for gamma in (0.3, 1.0, 4.0):
                joint = np.array([tlpa_log_joint(gamma, a, s) for a in alphas])
                diff = joint - alpha_conditional(gamma, s).logpdf(alphas)
                assert np.ptp(diff) < 1e-9

    def test_nonpositive_arguments(self, three_point_sample):
        with pytest.raises(TlpaInputError):
            tlpa_log_joint(0.0, 1.0, three_point_sample)
        with pytest.raises(TlpaInputError):
            tlpa_log_joint(1.0, -2.0, three_point_sample)


class TestAlphaConditional:
    def test_three_point_sample(self, three_point_sample):
        post = alpha_conditional(1.0, three_point_sample)
        assert post.shape == 3.0
        assert post.rate == pytest.approx(_reference_rate([1.0, 2.0, 3.0], 1.0), rel=1e-12)
        assert post.rate == pytest.approx(0.166381, abs=1e-6)
        assert post.mean() == pytest.approx(18.03, abs=0.01)

    def test_rate_matches_reference_on_both_branches(self):
        """Terms with 2 gamma log y on either side of log 2."""
        log_y = [0.01, 0.2, 0.4, 1.0, 5.0]
        s = ExceedanceSample.from_excesses(np.exp(log_y))
        for gamma in (0.5, 0.9, 2.0):
            assert -log_one_minus_pow_sum(gamma, s) == pytest.approx(_reference_rate(s.log_y, gamma), rel=1e-12)

    def test_small_gamma_pushes_mean_to_zero(self, three_point_sample):
        rates = [alpha_conditional(g, three_point_sample).rate for g in (1e-6, 1e-3, 1.0)]
        assert rates[0] > rates[1] > rates[2]
        assert alpha_conditional(1e-6, three_point_sample).mean() < 0.1

    def test_degenerate_excess(self):
        s = ExceedanceSample.from_excesses([1.5, 2.0])
        with pytest.raises(DegenerateExcessError):
            alpha_conditional(1e-300, s)
        with pytest.raises(DegenerateExcessError):
            expected_alpha(1e-300, s)


class TestExpectedAlpha:
    def test_matches_conditional_mean(self, three_point_sample):
        for gamma in (0.2, 1.0, 5.0):
            assert expected_alpha(gamma, three_point_sample) == pytest.approx(
                alpha_conditional(gamma, three_point_sample).mean(), rel=1e-14)

    def test_strictly_increasing_in_gamma(self):
        gammas = np.logspace(-2, 1, 100)
        for s in _random_samples():
            values = np.array([expected_alpha(g, s) for g in gammas])
            assert np.all(np.diff(values) > 0)

    def test_large_gamma(self, three_point_sample):
        assert expected_alpha(50.0, three_point_sample) > 1e6

    def test_near_one_at_half_the_strict_pareto_exponent(self):
        s = ExceedanceSample.from_excesses(StrictPareto(gamma=4.0).sample(5000, seed=3).values)
        assert expected_alpha(2.0, s) == pytest.approx(1.0, abs=0.1)

    def test_grid_matches_scalar(self):
        s = _random_samples(count=1)[0]
        gammas = np.logspace(-2, 1, 30)
        np.testing.assert_allclose(expected_alpha_grid(gammas, s),
                                   [expected_alpha(g, s) for g in gammas], rtol=1e-12)

    def test_grid_marks_degenerate_points(self):
        s = ExceedanceSample.from_excesses([1.5, 2.0])
        values = expected_alpha_grid(np.array([1e-300, 1.0]), s)
        assert np.isnan(values[0])
        assert np.isfinite(values[1])


class TestGammaConditional:
    def test_approximation_parameters(self, three_point_sample):
        post = gamma_conditional_approx(1.0, three_point_sample)
        assert post.shape == 3.0
        assert post.rate == pytest.approx(12.0, rel=1e-12)
        assert post.mean() == pytest.approx(0.25)
        assert gamma_conditional_approx(2.0, three_point_sample).mean() == pytest.approx(0.5)

    def test_evi_conditional(self, three_point_sample):
        post = tlpa_evi_conditional(2.0, three_point_sample)
        assert post.shape == 6.0
        assert post.mean() == pytest.approx(6.0 / 5.0)

    def test_approximation_close_to_exact_mean(self):
        s = ExceedanceSample.from_excesses(StrictPareto(gamma=4.0).sample(500, seed=21).values)
        approx = gamma_conditional_approx(1.1, s).mean()
        exact = exact_gamma_conditional_mean(1.1, s)
        assert approx == pytest.approx(exact, rel=0.05)

    def test_exact_mean_at_alpha_one_is_the_approximation(self):
        s = ExceedanceSample.from_excesses(StrictPareto(gamma=4.0).sample(200, seed=8).values)
        assert exact_gamma_conditional_mean(1.0, s) == pytest.approx(gamma_conditional_approx(1.0, s).mean(), rel=1e-6)


class TestTaylorRatio:
    def test_small_for_excesses_near_one(self):
        rng = np.random.default_rng(42)
        s = ExceedanceSample.from_excesses(1.0 + rng.uniform(1e-5, 1e-3, size=200))
        assert np.max(np.abs(taylor_log_ratio(1.0, 2.0, s))) < 0.01

    def test_zero_when_alpha_is_one(self, three_point_sample):
        np.testing.assert_array_equal(taylor_log_ratio(0.7, 1.0, three_point_sample), np.zeros(3))

    def test_accounts_for_kernel_difference(self):
        """Across two gamma values the ratio moves exactly as exact minus approximate log kernel."""
        s = _random_samples(count=1)[0]
        alpha = 1.6

        def kernel_gap(gamma):
            return tlpa_log_joint(gamma, alpha, s) - gamma_conditional_approx(alpha, s).logpdf(gamma)

        g1, g2 = 0.5, 1.5
        expected = kernel_gap(g1) - kernel_gap(g2)
        actual = np.sum(taylor_log_ratio(g1, alpha, s)) - np.sum(taylor_log_ratio(g2, alpha, s))
        assert actual == pytest.approx(expected, abs=1e-9)
