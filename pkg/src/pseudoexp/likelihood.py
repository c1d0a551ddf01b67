"""Log-likelihood in its factored form and maximum-likelihood estimation.

The likelihood splits into a factor in ``theta1`` alone (the x marginal)
and a factor in ``(theta2, theta3)`` (the y-given-x conditional).  The
second factor is concave in ``(theta2, theta3)``; the full-model MLE
maximises it by projected Newton over the nonnegative quadrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import BivariateSample, ModelVariant, PseudoExpParams
from .errors import DomainError

__all__ = [
    "FactoredLogLikelihood",
    "MleResult",
    "log_likelihood",
    "conditional_loglik",
    "conditional_gradient",
    "conditional_hessian",
    "mle_submodel1",
    "mle_submodel2",
    "mle_full",
    "mle",
]


@dataclass(frozen=True)
class FactoredLogLikelihood:
    marginal_term: float
    conditional_term: float

    @property
    def total(self) -> float:
        return self.marginal_term + self.conditional_term


@dataclass(frozen=True)
class MleResult:
    params: PseudoExpParams
    loglik_at_max: float
    converged: bool
    iterations: int
    on_boundary: bool
    gradient_norm: float = 0.0


def conditional_loglik(sample: BivariateSample, theta2: float, theta3: float) -> float:
    """``sum log(theta2 + theta3 x_i) - theta2 Sy - theta3 Sxy``; ``-inf`` at the origin."""
    if theta2 < 0 or theta3 < 0:
        return -math.inf
    rates = theta2 + theta3 * sample.x
    if np.any(rates <= 0):
        return -math.inf
    return float(np.sum(np.log(rates))) - theta2 * sample.sy - theta3 * sample.sxy


def conditional_gradient(sample: BivariateSample, theta2: float, theta3: float) -> np.ndarray:
    w = 1.0 / (theta2 + theta3 * sample.x)
    return np.array([w.sum() - sample.sy, (sample.x * w).sum() - sample.sxy])


def conditional_hessian(sample: BivariateSample, theta2: float, theta3: float) -> np.ndarray:
    w2 = (theta2 + theta3 * sample.x) ** -2.0
    xw2 = sample.x * w2
    h01 = -xw2.sum()
    return np.array([[-w2.sum(), h01], [h01, -(sample.x * xw2).sum()]])


def log_likelihood(
    sample: BivariateSample, params: PseudoExpParams, variant: ModelVariant
) -> FactoredLogLikelihood:
    """Evaluate the log-likelihood split into its marginal and conditional terms."""
    params.check(variant)
    rates = params.conditional_rate(sample.x)
    if np.any(rates <= 0):
        raise DomainError("theta2 + theta3 * x_i vanishes for some observation")
    marginal = sample.n * math.log(params.theta1) - params.theta1 * sample.sx
    conditional = (
        float(np.sum(np.log(rates))) - params.theta2 * sample.sy - params.theta3 * sample.sxy
    )
    return FactoredLogLikelihood(marginal, conditional)


def _theta1_mle(sample: BivariateSample) -> float:
    return sample.n / sample.sx


def mle_submodel1(sample: BivariateSample) -> MleResult:
    """Closed-form MLE under ``theta2 == theta3``: ``n/Sx`` and ``n/(Sy + Sxy)``."""
    theta3 = sample.n / (sample.sy + sample.sxy)
    params = PseudoExpParams.sub1(_theta1_mle(sample), theta3)
    ll = log_likelihood(sample, params, ModelVariant.SUB1).total
    return MleResult(params, ll, True, 0, False)


def mle_submodel2(sample: BivariateSample) -> MleResult:
    """Closed-form MLE under ``theta2 == 0``: ``n/Sx`` and ``n/Sxy``."""
    theta3 = sample.n / sample.sxy
    params = PseudoExpParams.sub2(_theta1_mle(sample), theta3)
    ll = log_likelihood(sample, params, ModelVariant.SUB2).total
    return MleResult(params, ll, True, 0, False)


def _projected_gradient(theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
    # a coordinate sitting at zero with an outward-pointing gradient is blocked
    return np.where((theta <= 0) & (grad <= 0), 0.0, grad)


def _maximize_conditional(sample: BivariateSample, tol: float, max_iter: int):
    """Projected Newton with Armijo backtracking on the concave conditional term.

    ``tol`` applies to the projected gradient divided by ``n``.
    """
    n = sample.n
    start = n / (sample.sy + sample.sxy)
    theta = np.array([start, start])
    f = conditional_loglik(sample, *theta)
    grad = conditional_gradient(sample, *theta)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        pg = _projected_gradient(theta, grad)
        if np.linalg.norm(pg) / n <= tol:
            converged = True
            break
        # epsilon-active set: coordinates that are (nearly) at the bound and pushed outward
        eps = min(1e-8 * max(1.0, theta.max()), np.linalg.norm(theta - np.maximum(theta + grad, 0.0)))
        active = (theta <= eps) & (grad <= 0)
        free = ~active
        direction = np.zeros(2)
        hess = conditional_hessian(sample, *theta)
        try:
            sub = hess[np.ix_(free, free)]
            direction[free] = np.linalg.solve(sub, -grad[free])
        except np.linalg.LinAlgError:
            direction[free] = grad[free]
        if not np.all(np.isfinite(direction)) or grad @ direction <= 0:
            direction = np.where(free, grad, 0.0)
        step = 1.0
        accepted = False
        while step > 1e-14:
            cand = np.maximum(theta + step * direction, 0.0)
            f_cand = conditional_loglik(sample, *cand)
            if math.isfinite(f_cand) and f_cand >= f + 1e-4 * grad @ (cand - theta):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no representable ascent left; accept as converged if the gradient is tiny
            converged = np.linalg.norm(pg) / n <= math.sqrt(tol)
            break
        theta, f = cand, f_cand
        grad = conditional_gradient(sample, *theta)
    else:
        pg = _projected_gradient(theta, grad)
        converged = bool(np.linalg.norm(pg) / n <= tol)

    # snap numerically negligible coordinates onto the boundary when that is no worse
    for j in range(2):
        if 0 < theta[j] <= 1e-10 * theta.max():
            snapped = theta.copy()
            snapped[j] = 0.0
            f_snap = conditional_loglik(sample, *snapped)
            if f_snap >= f - 1e-12 * max(1.0, abs(f)):
                theta, f = snapped, f_snap
                grad = conditional_gradient(sample, *theta)
    pg_norm = float(np.linalg.norm(_projected_gradient(theta, grad)) / n)
    return theta, f, converged, iterations, pg_norm


def mle_full(sample: BivariateSample, tol: float = 1e-8, max_iter: int = 200) -> MleResult:
    """Full-model MLE.

    ``theta1`` has the closed form ``n/Sx``; ``(theta2, theta3)`` maximise the
    conditional term over the nonnegative quadrant.  Boundary maximisers
    (``theta2 == 0`` or ``theta3 == 0``) are legitimate and flagged by
    ``on_boundary``.  If ``max_iter`` is exhausted the best iterate is
    returned with ``converged=False``.
    """
    theta, _, converged, iterations, pg_norm = _maximize_conditional(sample, tol, max_iter)
    params = PseudoExpParams(_theta1_mle(sample), float(theta[0]), float(theta[1]))
    ll = log_likelihood(sample, params, ModelVariant.FULL).total
    return MleResult(
        params=params,
        loglik_at_max=ll,
        converged=bool(converged),
        iterations=iterations,
        on_boundary=bool(theta[0] == 0.0 or theta[1] == 0.0),
        gradient_norm=pg_norm,
    )


def mle(sample: BivariateSample, variant: ModelVariant) -> MleResult:
    variant = ModelVariant.parse(variant)
    if variant is ModelVariant.SUB1:
        return mle_submodel1(sample)
    if variant is ModelVariant.SUB2:
        return mle_submodel2(sample)
    return mle_full(sample)
