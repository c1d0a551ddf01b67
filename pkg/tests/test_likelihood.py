import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from pseudoexp.distributions import BivariateSample, ModelVariant, PseudoExpParams, joint_logpdf, make_rng, sample_bivariate
from pseudoexp.likelihood import (
    conditional_gradient,
    conditional_hessian,
    conditional_loglik,
    log_likelihood,
    mle,
    mle_full,
    mle_submodel1,
    mle_submodel2,
)

positive = st.floats(min_value=1e-2, max_value=1e2)
samples = st.lists(st.tuples(positive, positive), min_size=1, max_size=30).map(BivariateSample.from_pairs)


def grid_argmax(sample, lim=3.0, steps=601):
    # brute-force oracle over [0, lim]^2, then a bounded polish with scipy
    g = np.linspace(0, lim, steps)
    a, b = np.meshgrid(g, g, indexing="ij")
    with np.errstate(divide="ignore"):
        values = np.log(a[..., None] + b[..., None] * sample.x).sum(axis=-1) - a * sample.sy - b * sample.sxy
    i, j = np.unravel_index(np.argmax(values), values.shape)
    arg = (g[i], g[j])
    res = optimize.minimize(
        lambda p: -conditional_loglik(sample, *p), arg, method="L-BFGS-B", bounds=[(0, None), (0, None)],
        options={"ftol": 1e-15, "gtol": 1e-12},
    )
    return res.x, -res.fun


class TestLogLikelihood:
    def test_single_point(self):
        ll = log_likelihood(BivariateSample.from_pairs([(1, 1)]), PseudoExpParams(1, 1, 1), ModelVariant.FULL)
        assert ll.marginal_term == -1.0
        assert ll.conditional_term == pytest.approx(math.log(2) - 2, abs=1e-15)

    @given(samples, positive, positive)
    def test_submodel2_conditional_shape(self, sample, t1, t3):
        ll = log_likelihood(sample, PseudoExpParams.sub2(t1, t3), ModelVariant.SUB2)
        expected = sample.n * math.log(t3) + math.fsum(np.log(sample.x)) - t3 * sample.sxy
        assert ll.conditional_term == pytest.approx(expected, rel=1e-11, abs=1e-9)

    @given(samples, positive, st.floats(0, 50), positive)
    def test_factorization_matches_joint_density(self, sample, t1, t2, t3):
        params = PseudoExpParams(t1, t2, t3)
        direct = math.fsum(joint_logpdf(params, ModelVariant.FULL, sample.x, sample.y))
        assert log_likelihood(sample, params, ModelVariant.FULL).total == pytest.approx(direct, rel=1e-12, abs=1e-9)

    @given(samples, st.floats(0.05, 20), st.floats(0.05, 20))
    @settings(max_examples=60)
    def test_gradient_and_hessian_match_finite_differences(self, sample, a, b):
        h = 1e-6
        g = conditional_gradient(sample, a, b)
        fd = np.array([
            (conditional_loglik(sample, a + h, b) - conditional_loglik(sample, a - h, b)) / (2 * h),
            (conditional_loglik(sample, a, b + h) - conditional_loglik(sample, a, b - h)) / (2 * h),
        ])
        scale = max(1.0, np.abs(g).max())
        assert np.allclose(g, fd, rtol=1e-5, atol=1e-5 * scale)
        hess = conditional_hessian(sample, a, b)
        fd_h = np.column_stack([
            (conditional_gradient(sample, a + h, b) - conditional_gradient(sample, a - h, b)) / (2 * h),
            (conditional_gradient(sample, a, b + h) - conditional_gradient(sample, a, b - h)) / (2 * h),
        ])
        assert np.allclose(hess, fd_h, rtol=1e-4, atol=1e-4 * max(1.0, np.abs(hess).max()))

    def test_invalid_points_give_minus_infinity(self, small_sample):
        assert conditional_loglik(small_sample, 0.0, 0.0) == -math.inf
        assert conditional_loglik(small_sample, -1.0, 1.0) == -math.inf


class TestSubmodelMle:
    def test_submodel1_two_points(self, small_sample):
        r = mle_submodel1(small_sample)
        assert r.params.theta1 == 2 / 3
        assert r.params.theta3 == 2 / 3.5
        assert r.params.theta2 == r.params.theta3

    def test_submodel1_single_point(self):
        r = mle_submodel1(BivariateSample.from_pairs([(1, 1)]))
        assert (r.params.theta1, r.params.theta3) == (1.0, 0.5)

    def test_submodel2_two_points(self, small_sample):
        r = mle_submodel2(small_sample)
        assert (r.params.theta1, r.params.theta2, r.params.theta3) == (2 / 3, 0.0, 1.0)

    def test_submodel2_single_point(self):
        r = mle_submodel2(BivariateSample.from_pairs([(2, 3)]))
        assert (r.params.theta1, r.params.theta3) == (0.5, 1 / 6)

    @pytest.mark.parametrize(
        "variant, truth",
        [(ModelVariant.SUB1, PseudoExpParams.sub1(2, 3)), (ModelVariant.SUB2, PseudoExpParams.sub2(2, 5))],
    )
    def test_consistency(self, variant, truth):
        s = sample_bivariate(truth, variant, 100_000, make_rng(31))
        r = mle(s, variant)
        assert r.params.theta1 == pytest.approx(truth.theta1, rel=0.03)
        assert r.params.theta3 == pytest.approx(truth.theta3, rel=0.03)

    @given(samples)
    def test_submodel_mles_are_stationary(self, sample):
        for variant in (ModelVariant.SUB1, ModelVariant.SUB2):
            p = mle(sample, variant).params
            h = 1e-6 * p.theta3
            build = PseudoExpParams.sub1 if variant is ModelVariant.SUB1 else PseudoExpParams.sub2

            def f(t):
                return log_likelihood(sample, build(p.theta1, t), variant).total

            assert (f(p.theta3 + h) - f(p.theta3 - h)) / (2 * h) == pytest.approx(0.0, abs=1e-4 * sample.n / p.theta3)


class TestFullMle:
    def test_boundary_solution(self):
        s = BivariateSample.from_pairs([(1, 1), (2, 1)])
        r = mle_full(s)
        assert r.on_boundary and r.converged
        assert r.params.theta2 == pytest.approx(1.0, abs=1e-8)
        assert r.params.theta3 == 0.0
        arg, best = grid_argmax(s)
        assert np.allclose(arg, [1.0, 0.0], atol=1e-5)
        assert conditional_loglik(s, r.params.theta2, r.params.theta3) >= best - 1e-10

    def test_submodel2_data_drives_theta2_to_zero(self):
        s = sample_bivariate(PseudoExpParams.sub2(2, 5), ModelVariant.SUB2, 20_000, make_rng(8))
        r = mle_full(s)
        assert r.params.theta2 < 0.05
        assert r.params.theta3 == pytest.approx(5.0, rel=0.05)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_grid_oracle(self, seed):
        s = sample_bivariate(PseudoExpParams(2, 0.8, 1.5), ModelVariant.FULL, 60, make_rng(seed))
        r = mle_full(s)
        arg, best = grid_argmax(s, lim=6.0, steps=301)
        assert conditional_loglik(s, r.params.theta2, r.params.theta3) >= best - 1e-9
        assert np.allclose([r.params.theta2, r.params.theta3], arg, atol=1e-3)

    @given(samples)
    @settings(max_examples=60, deadline=None)
    def test_dominates_nested_models(self, sample):
        r = mle_full(sample)
        full = conditional_loglik(sample, r.params.theta2, r.params.theta3)
        s1, s2 = mle_submodel1(sample).params, mle_submodel2(sample).params
        assert full >= conditional_loglik(sample, s1.theta2, s1.theta3) - 1e-9 * max(1.0, abs(full))
        assert full >= conditional_loglik(sample, s2.theta2, s2.theta3) - 1e-9 * max(1.0, abs(full))

    def test_theta1_closed_form(self, small_sample):
        assert mle_full(small_sample).params.theta1 == 2 / 3
