import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from pseudoexp.errors import ConvergenceError
from pseudoexp.quadrature import GAUSS_WEIGHTS, KRONROD_NODES, KRONROD_WEIGHTS, gk15, integrate


class TestRule:
    def test_gauss_subrule_matches_legendre(self):
        nodes, weights = np.polynomial.legendre.leggauss(7)
        used = GAUSS_WEIGHTS > 0
        assert np.allclose(np.sort(KRONROD_NODES[used]), np.sort(nodes), atol=1e-15)
        assert np.allclose(GAUSS_WEIGHTS[used][np.argsort(KRONROD_NODES[used])], weights[np.argsort(nodes)], atol=1e-15)

    def test_kronrod_is_exact_to_degree_22(self):
        for k in range(23):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            assert KRONROD_WEIGHTS @ KRONROD_NODES**k == pytest.approx(exact, abs=1e-14)

    def test_weights_sum_to_interval_length(self):
        assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
        assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)

    def test_single_panel_polynomial(self):
        value, err = gk15(lambda t: 3 * t**2, 0.0, 2.0)
        assert value[0] == pytest.approx(8.0, rel=1e-15)
        assert err[0] < 1e-13


class TestAdaptive:
    @pytest.mark.parametrize(
        "f, a, b",
        [
            (np.sin, 0.0, math.pi),
            (lambda t: np.exp(-t) * t**3.5, 0.0, 60.0),
            (lambda t: np.sqrt(t), 0.0, 1.0),
            (lambda t: 1.0 / (1.0 + 1e4 * (t - 0.3) ** 2), 0.0, 1.0),
        ],
    )
    def test_against_scipy_quad(self, f, a, b):
        ref, _ = sp_integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=500)
        res = integrate(f, a, b, abs_tol=1e-13, rel_tol=1e-12)
        assert res.value[0] == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_vector_integrand_and_cumulative(self):
        res = integrate(lambda t: np.vstack([np.exp(-t), t * np.exp(-t)]), 0.0, 40.0)
        assert np.allclose(res.value, [1.0, 1.0], atol=1e-10)
        cum = res.cumulative(0)
        assert np.all(np.diff(cum) >= 0)
        assert np.allclose(cum, 1 - np.exp(-res.edges), atol=1e-12)

    def test_budget_exhaustion(self):
        with pytest.raises(ConvergenceError):
            integrate(lambda t: np.sin(1.0 / t), 1e-6, 1.0, rel_tol=1e-15, abs_tol=1e-15, max_panels=20)

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            integrate(np.sin, 1.0, 1.0)
