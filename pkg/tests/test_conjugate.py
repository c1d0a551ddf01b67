import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from pseudoexp.conjugate import (
    IMPROPER,
    GammaPosterior,
    IndependentGammaPrior,
    full_model_theta23_kernel,
    posterior_theta1,
    posterior_theta3,
    posterior_theta3_sub1,
    posterior_theta3_sub2,
    predictive_moments,
    predictive_x,
    predictive_y,
    summarize,
)
from pseudoexp.distributions import (
    BivariateSample,
    GammaParams,
    LomaxParams,
    ModelVariant,
    PseudoExpParams,
    gamma_cdf,
    lomax_cdf,
    make_rng,
)
from pseudoexp.errors import ConstraintError, DomainError, ProprietyError
from pseudoexp.likelihood import log_likelihood

positive = st.floats(min_value=1e-2, max_value=1e2)
samples = st.lists(st.tuples(positive, positive), min_size=1, max_size=30).map(BivariateSample.from_pairs)
gammas = st.builds(GammaParams, st.floats(0.1, 50), st.floats(0.1, 50))


def igp(a1=2.0, b1=2.0, a3=4.0, b3=3.0, theta2=None):
    return IndependentGammaPrior(GammaParams(a1, b1), GammaParams(a3, b3), theta2)


class TestTheta1:
    def test_proper_update(self):
        s = BivariateSample.from_pairs([(1.0, 1.0), (2.0, 1.0)])
        post = posterior_theta1(igp(), s)
        assert (post.shape, post.rate) == (4.0, 5.0)
        assert post.mean == 0.8

    def test_improper_update_is_mle(self):
        s = BivariateSample.from_pairs([(1.0, 1.0), (2.0, 1.0)])
        post = posterior_theta1(IMPROPER, s)
        assert (post.shape, post.rate) == (2.0, 3.0)
        assert post.mean == 2 / 3

    def test_no_data(self):
        assert posterior_theta1(igp(), None).gamma == GammaParams(2.0, 2.0)
        with pytest.raises(ProprietyError):
            posterior_theta1(IMPROPER, None)


class TestTheta3:
    def test_submodel1(self, small_sample):
        post = posterior_theta3_sub1(igp(), small_sample)
        assert (post.shape, post.rate) == (6.0, 6.5)
        assert post.mean == pytest.approx(12 / 13, rel=1e-15)

    def test_submodel1_improper(self, small_sample):
        post = posterior_theta3_sub1(IMPROPER, small_sample)
        assert (post.shape, post.rate) == (2.0, 3.5)
        assert post.mean == pytest.approx(0.5714, abs=1e-4)

    def test_submodel2(self, small_sample):
        post = posterior_theta3_sub2(igp(), small_sample)
        assert (post.shape, post.rate, post.mean) == (6.0, 5.0, 1.2)

    def test_submodel2_improper(self, small_sample):
        post = posterior_theta3_sub2(IMPROPER, small_sample)
        assert (post.shape, post.rate, post.mean) == (2.0, 2.0, 1.0)

    def test_no_data_returns_prior(self):
        assert posterior_theta3(igp(), None, ModelVariant.SUB2).gamma == GammaParams(4.0, 3.0)

    def test_full_model_has_no_closed_form(self, small_sample):
        with pytest.raises((ConstraintError, ValueError)):
            posterior_theta3(igp(), small_sample, ModelVariant.FULL)

    @given(gammas, gammas, samples)
    def test_squared_error_loss_estimate(self, g1, g3, sample):
        prior = IndependentGammaPrior(g1, g3)
        post = posterior_theta3(prior, sample, ModelVariant.SUB1)
        assert post.mean == (g3.shape + sample.n) / (g3.rate + (sample.sy + sample.sxy))

    @given(gammas, gammas, samples, positive, positive)
    def test_posterior_is_prior_times_likelihood(self, g1, g3, sample, u, v):
        # log posterior differences equal log prior + log likelihood differences
        prior = IndependentGammaPrior(g1, g3)
        for variant in (ModelVariant.SUB1, ModelVariant.SUB2):
            p1, p3 = posterior_theta1(prior, sample), posterior_theta3(prior, sample, variant)
            build = PseudoExpParams.sub1 if variant is ModelVariant.SUB1 else PseudoExpParams.sub2

            def logpost(a, b):
                return stats.gamma.logpdf(a, p1.shape, scale=1 / p1.rate) + stats.gamma.logpdf(b, p3.shape, scale=1 / p3.rate)

            def unnorm(a, b):
                return (
                    stats.gamma.logpdf(a, g1.shape, scale=1 / g1.rate)
                    + stats.gamma.logpdf(b, g3.shape, scale=1 / g3.rate)
                    + log_likelihood(sample, build(a, b), variant).total
                )

            lhs = logpost(u, v) - logpost(1.0, 1.0)
            rhs = unnorm(u, v) - unnorm(1.0, 1.0)
            assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-7 * max(1.0, abs(rhs)))


class TestFullModelKernel:
    def test_differences_match_log_posterior(self, small_sample):
        prior = igp(theta2=GammaParams(3.0, 1.0))

        def logpost(t2, t3):
            params = PseudoExpParams(1.0, t2, t3)
            return (
                stats.gamma.logpdf(t2, 3.0, scale=1.0)
                + stats.gamma.logpdf(t3, 4.0, scale=1 / 3.0)
                + log_likelihood(small_sample, params, ModelVariant.FULL).conditional_term
            )

        k = lambda a, b: full_model_theta23_kernel(prior, small_sample, a, b)  # noqa: E731
        assert k(0.7, 2.1) - k(1.3, 0.4) == pytest.approx(logpost(0.7, 2.1) - logpost(1.3, 0.4), rel=1e-12)

    def test_theta3_zero_is_gamma_kernel_in_theta2(self, small_sample):
        # a3 = 1 keeps the kernel finite at theta3 = 0
        prior = igp(a3=1.0, theta2=GammaParams(3.0, 1.0))
        shape, rate = 3.0 + small_sample.n, 1.0 + small_sample.sy
        for a, b in ((0.5, 2.0), (1.0, 3.5)):
            lhs = full_model_theta23_kernel(prior, small_sample, a, 0.0) - full_model_theta23_kernel(prior, small_sample, b, 0.0)
            rhs = (shape - 1) * math.log(a / b) - rate * (a - b)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_edges(self, small_sample):
        prior = igp(theta2=GammaParams(3.0, 1.0))
        assert full_model_theta23_kernel(prior, small_sample, 0.0, 1.0) == -math.inf
        with pytest.raises(DomainError):
            full_model_theta23_kernel(prior, small_sample, -1.0, 1.0)
        with pytest.raises(DomainError):
            full_model_theta23_kernel(igp(a3=0.5, theta2=GammaParams(3.0, 1.0)), small_sample, 1.0, 0.0)

    def test_needs_theta2_prior(self, small_sample):
        with pytest.raises(ConstraintError):
            full_model_theta23_kernel(igp(), small_sample, 1.0, 1.0)


class TestPredictive:
    def test_x_predictive(self):
        law = predictive_x(GammaPosterior(4.0, 5.0, "theta1"))
        assert law == LomaxParams(4.0, 5.0)
        mean, var = predictive_moments(law)
        assert mean == pytest.approx(5 / 3, rel=1e-15)
        assert var == pytest.approx(25 * 4 / (9 * 2), rel=1e-15)

    def test_y_predictive_means(self):
        assert predictive_moments(predictive_y(GammaPosterior(6.0, 6.5, "theta3"), ModelVariant.SUB1))[0] == 1.3
        assert predictive_moments(predictive_y(GammaPosterior(6.0, 5.0, "theta3"), ModelVariant.SUB2))[0] == 1.0

    def test_missing_moments_are_none(self):
        assert predictive_moments(LomaxParams(1.0, 2.0)) == (None, None)
        assert predictive_moments(LomaxParams(2.0, 2.0)) == (2.0, None)

    def test_parameter_checks(self):
        with pytest.raises(ConstraintError):
            predictive_x(GammaPosterior(4.0, 5.0, "theta3"))
        with pytest.raises(ConstraintError):
            predictive_y(GammaPosterior(4.0, 5.0, "theta3"), ModelVariant.FULL)

    @pytest.mark.parametrize("shape, rate", [(4.0, 5.0), (6.0, 6.5)])
    def test_compound_draws_follow_lomax(self, shape, rate):
        rng = make_rng(77)
        theta = rng.standard_gamma(shape, 100_000) / rate
        draws = rng.exponential(1.0, 100_000) / theta
        law = LomaxParams(shape, rate)
        assert stats.kstest(draws, lambda t: lomax_cdf(law, t)).statistic < 0.01


class TestSummaries:
    def test_gamma2_interval(self):
        s = summarize(GammaPosterior(2.0, 1.0, "theta1"), 0.95)
        assert s.ci_low == pytest.approx(0.2422, abs=1e-4)
        assert s.ci_high == pytest.approx(5.5716, abs=1e-4)

    def test_mean(self):
        assert summarize(GammaPosterior(22.0, 12.0, "theta1")).mean == 11 / 6

    @given(st.floats(0.2, 300), st.floats(0.01, 100), st.floats(0.5, 0.999))
    def test_interval_mass_equals_level(self, a, b, level):
        post = GammaPosterior(a, b, "theta1")
        s = summarize(post, level)
        mass = gamma_cdf(post.gamma, s.ci_high) - gamma_cdf(post.gamma, s.ci_low)
        assert mass == pytest.approx(level, abs=1e-9)
        assert s.ci_low < s.ci_high

    def test_rejects_bad_level(self):
        with pytest.raises(DomainError):
            summarize(GammaPosterior(2.0, 1.0, "theta1"), 1.0)

    def test_improper_posterior_needs_positive_parameters(self):
        with pytest.raises(ProprietyError):
            GammaPosterior(0.0, 1.0, "theta1")

    def test_sd(self):
        s = summarize(GammaPosterior(4.0, 2.0, "theta1"))
        assert s.sd == pytest.approx(1.0, rel=1e-15)
        assert np.isclose(s.variance, 1.0)
