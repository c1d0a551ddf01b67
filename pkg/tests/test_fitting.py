import math

import numpy as np
import pytest

from pseudoexp.conjugate import IMPROPER, IndependentGammaPrior, posterior_theta1, posterior_theta3
from pseudoexp.distributions import GammaParams, ModelVariant, PseudoExpParams, make_rng, sample_bivariate
from pseudoexp.errors import ConstraintError, IncompatibleMethodError, ProprietyError
from pseudoexp.fitting import check_method, fit
from pseudoexp.harm import ChainConfig
from pseudoexp.likelihood import log_likelihood
from pseudoexp.pseudogamma import PseudoGammaPrior, general_posterior_log_kernel
from pseudoexp.targets import initial_point, parameter_names, point_to_params, posterior_target, theta23_target

IGP = IndependentGammaPrior(GammaParams(2, 2), GammaParams(4, 5), GammaParams(3, 1))
PGP = PseudoGammaPrior(2, 4, 2, 1, 3, theta2=GammaParams(3, 1))
SIMPLE = PseudoGammaPrior(2, 4, 2, 0, 3)
FAST = ChainConfig.from_kept(2_000, burn_in=2_000, seed=1)


@pytest.fixture(scope="module")
def full_data():
    return sample_bivariate(PseudoExpParams(2, 1, 3), ModelVariant.FULL, 200, make_rng(13))


class TestTargets:
    def test_names(self):
        assert parameter_names("full") == ("theta1", "theta2", "theta3")
        assert parameter_names("sub2") == ("theta1", "theta3")

    def test_point_round_trip(self):
        assert point_to_params([2.0, 3.0], "sub1") == PseudoExpParams.sub1(2.0, 3.0)
        assert point_to_params([2.0, 1.0, 3.0], "full") == PseudoExpParams(2.0, 1.0, 3.0)

    def test_initial_point_is_interior(self):
        from pseudoexp.distributions import BivariateSample

        s = BivariateSample.from_pairs([(1, 1), (2, 1)])
        p = initial_point(s, "full")
        assert np.all(p > 0)

    @pytest.mark.parametrize("variant", list(ModelVariant))
    @pytest.mark.parametrize("prior", [IGP, PGP])
    def test_target_differences_match_prior_plus_likelihood(self, prior, variant, full_data, sub1_data_30):
        sample = full_data if variant is ModelVariant.FULL else sub1_data_30
        target = posterior_target(prior, sample, variant)
        pts = [np.array(p) for p in ([1.0, 0.5, 2.0], [2.0, 1.3, 3.1])]
        if variant.is_submodel:
            pts = [p[[0, 2]] for p in pts]

        def reference(point):
            theta = point_to_params(point, variant)
            if isinstance(prior, PseudoGammaPrior):
                return general_posterior_log_kernel(prior, sample, variant, theta)
            out = log_likelihood(sample, theta, variant).total
            for g, t in ((prior.theta1, theta.theta1), (prior.theta3, theta.theta3)):
                out += (g.shape - 1) * math.log(t) - g.rate * t
            if variant is ModelVariant.FULL:
                out += (prior.theta2.shape - 1) * math.log(theta.theta2) - prior.theta2.rate * theta.theta2
            return out

        assert target(pts[0]) - target(pts[1]) == pytest.approx(reference(pts[0]) - reference(pts[1]), rel=1e-10)

    def test_improper_full_model_is_rejected(self, full_data):
        with pytest.raises(ProprietyError):
            posterior_target(IMPROPER, full_data, "full")
        with pytest.raises(ProprietyError):
            theta23_target(IMPROPER, full_data)

    def test_full_pseudo_needs_theta2_prior(self, full_data):
        with pytest.raises(ConstraintError):
            posterior_target(SIMPLE, full_data, "full")


class TestMethodSelection:
    def test_auto(self):
        assert check_method(IGP, "sub1", "auto") == "analytic"
        assert check_method(PGP, "sub1", "auto") == "harm"
        assert check_method(IGP, "full", "auto") == "harm"

    @pytest.mark.parametrize(
        "prior, variant, method",
        [
            (IGP, "full", "analytic"),
            (PGP, "sub1", "analytic"),
            (PGP, "sub1", "quadrature"),
            (SIMPLE, "full", "quadrature"),
            (IGP, "sub1", "quadrature"),
            (IGP, "sub1", "newton"),
        ],
    )
    def test_incompatible(self, prior, variant, method):
        with pytest.raises(IncompatibleMethodError):
            check_method(prior, variant, method)


class TestFit:
    def test_analytic_matches_conjugate_updates(self, sub1_data_30):
        r = fit(sub1_data_30, "sub1", IGP, "analytic")
        assert r.summaries["theta1"].mean == posterior_theta1(IGP, sub1_data_30).mean
        assert r.summaries["theta3"].mean == posterior_theta3(IGP, sub1_data_30, "sub1").mean
        assert r.predictive["x"].shape == 2 + 30
        assert r.chain is None

    def test_improper_means_equal_mle(self, sub1_data_30):
        for variant in ("sub1", "sub2"):
            r = fit(sub1_data_30, variant, IMPROPER, "analytic")
            assert r.summaries["theta1"].mean == r.mle.params.theta1
            assert r.summaries["theta3"].mean == r.mle.params.theta3

    def test_harm_agrees_with_analytic(self, sub1_data_30):
        a = fit(sub1_data_30, "sub1", IGP, "analytic")
        h = fit(sub1_data_30, "sub1", IGP, "harm", ChainConfig.from_kept(10_000, seed=2))
        for name in ("theta1", "theta3"):
            assert abs(a.summaries[name].mean - h.summaries[name].mean) < 3 * h.summaries[name].mcse

    def test_full_model_auto_splits_theta1(self, full_data):
        r = fit(full_data, "full", IGP, "auto", FAST)
        assert r.method == "analytic+harm"
        assert r.summaries["theta1"].mcse is None
        assert set(r.summaries) == {"theta1", "theta2", "theta3"}
        assert r.predictive is None
        assert r.chain.draws.shape[1] == 2

    def test_full_model_pseudo_prior(self, full_data):
        r = fit(full_data, "full", PGP, "harm", FAST)
        assert r.method == "harm"
        for name, truth in zip(("theta1", "theta2", "theta3"), (2, 1, 3)):
            s = r.summaries[name]
            assert s.ci_low < s.ci_high
            assert abs(s.mean - truth) < 4 * math.sqrt(s.variance)

    def test_quadrature_fit(self, sub1_data_30):
        r = fit(sub1_data_30, "sub1", SIMPLE, "quadrature")
        assert r.method == "quadrature"
        assert r.predictive is None
        assert all(s.mcse is None for s in r.summaries.values())

    def test_improper_full_model_fails(self, full_data):
        with pytest.raises(ProprietyError):
            fit(full_data, "full", IMPROPER, "auto", FAST)
