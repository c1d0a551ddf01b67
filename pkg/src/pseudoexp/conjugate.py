"""Exact gamma posteriors under independent gamma (or improper) priors.

Posterior updates::

    theta1           ~ Gamma(alpha1 + n, beta1 + Sx)          every variant
    theta3 (sub I)   ~ Gamma(alpha3 + n, beta3 + Sy + Sxy)
    theta3 (sub II)  ~ Gamma(alpha3 + n, beta3 + Sxy)

``(theta2, theta3)`` in the full model has no closed form; only its log
kernel is provided here (sample it with :mod:`pseudoexp.harm`).

Posterior-predictive laws are Lomax with shape equal to the posterior
shape and scale equal to the posterior rate.  The y-predictive mixes
``theta3 * exp(-theta3 t)`` over the theta3 posterior, i.e. it describes
the baseline rate without the ``(1 + x)`` / ``x`` covariate factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .distributions import (
    BivariateSample,
    GammaParams,
    LomaxParams,
    ModelVariant,
    gamma_quantile,
    lomax_mean,
    lomax_variance,
)
from .errors import ConstraintError, DomainError, MomentError, ProprietyError

__all__ = [
    "IndependentGammaPrior",
    "ImproperPrior",
    "IMPROPER",
    "PriorSpec",
    "GammaPosterior",
    "PosteriorSummary",
    "posterior_theta1",
    "posterior_theta3_sub1",
    "posterior_theta3_sub2",
    "posterior_theta3",
    "full_model_theta23_kernel",
    "predictive_x",
    "predictive_y",
    "predictive_moments",
    "summarize",
]


@dataclass(frozen=True)
class IndependentGammaPrior:
    """Independent gamma priors on each parameter; ``theta2`` is only used by the full model."""

    theta1: GammaParams
    theta3: GammaParams
    theta2: GammaParams | None = None


@dataclass(frozen=True)
class ImproperPrior:
    """The ``alpha = beta = 0`` limit of every gamma component."""


IMPROPER = ImproperPrior()

PriorSpec = Union[IndependentGammaPrior, ImproperPrior]


@dataclass(frozen=True)
class GammaPosterior:
    shape: float
    rate: float
    parameter: str

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ProprietyError(f"posterior for {self.parameter} is improper: Gamma({self.shape}, {self.rate})")

    @property
    def gamma(self) -> GammaParams:
        return GammaParams(self.shape, self.rate)

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2


@dataclass(frozen=True)
class PosteriorSummary:
    """Point summary of one parameter's posterior.

    ``mcse`` is the Monte Carlo standard error of ``mean``; it is ``None``
    for exact (analytic or quadrature) summaries.
    """

    parameter: str
    mean: float
    variance: float
    ci_low: float
    ci_high: float
    level: float
    mcse: float | None = None

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def _prior_component(prior: PriorSpec, name: str) -> tuple[float, float]:
    if isinstance(prior, ImproperPrior):
        return 0.0, 0.0
    component = getattr(prior, name)
    if component is None:
        raise ConstraintError(f"prior has no component for {name}")
    return component.shape, component.rate


def _update(prior: PriorSpec, name: str, sample: BivariateSample | None, statistic) -> GammaPosterior:
    shape, rate = _prior_component(prior, name)
    if sample is None:
        if isinstance(prior, ImproperPrior):
            raise ProprietyError("an improper prior needs at least one observation")
        return GammaPosterior(shape, rate, name)
    stat = statistic(sample)
    if isinstance(prior, ImproperPrior) and not stat > 0:
        raise ProprietyError(f"improper-prior posterior for {name} needs a positive statistic")
    return GammaPosterior(shape + sample.n, rate + stat, name)


def posterior_theta1(prior: PriorSpec, sample: BivariateSample | None) -> GammaPosterior:
    """``Gamma(alpha1 + n, beta1 + Sx)``; ``sample=None`` returns the prior."""
    return _update(prior, "theta1", sample, lambda s: s.sx)


def posterior_theta3_sub1(prior: PriorSpec, sample: BivariateSample | None) -> GammaPosterior:
    return _update(prior, "theta3", sample, lambda s: s.sy + s.sxy)


def posterior_theta3_sub2(prior: PriorSpec, sample: BivariateSample | None) -> GammaPosterior:
    return _update(prior, "theta3", sample, lambda s: s.sxy)


def posterior_theta3(prior: PriorSpec, sample: BivariateSample | None, variant: ModelVariant) -> GammaPosterior:
    variant = ModelVariant.parse(variant)
    if variant is ModelVariant.SUB1:
        return posterior_theta3_sub1(prior, sample)
    if variant is ModelVariant.SUB2:
        return posterior_theta3_sub2(prior, sample)
    raise ConstraintError("theta3 has no closed-form posterior in the full model")


def _log_gamma_kernel_term(shape: float, value: float, name: str) -> float:
    # (shape - 1) * log(value) with the limits at value == 0 made explicit
    if value > 0:
        return (shape - 1.0) * math.log(value)
    if shape == 1.0:
        return 0.0
    if shape > 1.0:
        return -math.inf
    raise DomainError(f"posterior kernel diverges at {name} = 0 when its prior shape is < 1")


def full_model_theta23_kernel(
    prior: PriorSpec, sample: BivariateSample | None, theta2: float, theta3: float
) -> float:
    """Log kernel of the full-model ``(theta2, theta3)`` posterior, up to an additive constant.

    ``sum log(theta2 + theta3 x_i) + (a2-1) log theta2 + (a3-1) log theta3
    - theta2 (b2 + Sy) - theta3 (b3 + Sxy)``.  Returns ``-inf`` where the
    kernel vanishes.
    """
    theta2, theta3 = float(theta2), float(theta3)
    if theta2 < 0 or theta3 < 0 or theta2 + theta3 <= 0:
        raise DomainError("theta2, theta3 must be >= 0 and not both zero")
    a2, b2 = _prior_component(prior, "theta2")
    a3, b3 = _prior_component(prior, "theta3")
    out = _log_gamma_kernel_term(a2, theta2, "theta2") + _log_gamma_kernel_term(a3, theta3, "theta3")
    out -= theta2 * b2 + theta3 * b3
    if sample is not None:
        out += float(np.sum(np.log(theta2 + theta3 * sample.x)))
        out -= theta2 * sample.sy + theta3 * sample.sxy
    return out


def predictive_x(posterior: GammaPosterior) -> LomaxParams:
    """Posterior predictive of a new x: ``Lomax(alpha1 + n, beta1 + Sx)``."""
    if posterior.parameter != "theta1":
        raise ConstraintError("the x-predictive needs the theta1 posterior")
    return LomaxParams(posterior.shape, posterior.rate)


def predictive_y(posterior: GammaPosterior, variant: ModelVariant) -> LomaxParams:
    """Posterior predictive for y built from the theta3 posterior of a sub-model.

    This is the law of a new ``Exp(theta3)`` draw, ``Lomax(shape, rate)``
    of the theta3 posterior, without the covariate factor of the
    conditional rate.  Its mean is the Lomax mean ``rate / (shape - 1)``;
    the closed form sometimes quoted, ``rate / shape``, is not a moment of
    this law.
    """
    variant = ModelVariant.parse(variant)
    if posterior.parameter != "theta3":
        raise ConstraintError("the y-predictive needs the theta3 posterior")
    if not variant.is_submodel:
        raise ConstraintError("the y-predictive is defined for the sub-models only")
    return LomaxParams(posterior.shape, posterior.rate)


def predictive_moments(params: LomaxParams) -> tuple[float | None, float | None]:
    """Mean and variance, with ``None`` for moments that do not exist."""
    try:
        mean = lomax_mean(params)
    except MomentError:
        mean = None
    try:
        var = lomax_variance(params)
    except MomentError:
        var = None
    return mean, var


def summarize(posterior: GammaPosterior, level: float = 0.95) -> PosteriorSummary:
    """Mean, variance and equal-tail credible interval of a gamma posterior."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    lo, hi = gamma_quantile(posterior.gamma, [(1 - level) / 2, (1 + level) / 2])
    return PosteriorSummary(posterior.parameter, posterior.mean, posterior.variance, float(lo), float(hi), level)

