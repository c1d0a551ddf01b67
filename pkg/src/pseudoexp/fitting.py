"""One entry point that fits a dataset under a chosen variant, prior and method.

Methods:

``analytic``
    Closed-form gamma posteriors; independent-gamma or improper prior on a sub-model.
``quadrature``
    Quadrature-normalised marginals; pseudo-gamma prior with ``psi2 == 0`` on a sub-model.
``harm``
    Hit-and-run Metropolis on the joint posterior; any combination with a proper posterior.
``auto``
    ``analytic`` where conjugate, otherwise ``harm``; in the full model with a
    gamma prior, ``theta1`` stays analytic and only ``(theta2, theta3)`` is sampled
    (reported as ``analytic+harm``).
"""

from __future__ import annotations

from dataclasses import dataclass

from .conjugate import (
    GammaPosterior,
    ImproperPrior,
    IndependentGammaPrior,
    PosteriorSummary,
    posterior_theta1,
    posterior_theta3,
    predictive_x,
    predictive_y,
    summarize,
)
from .distributions import BivariateSample, LomaxParams, ModelVariant
from .errors import IncompatibleMethodError
from .harm import ChainConfig, ChainResult, run_chain, summarize_chain
from .likelihood import MleResult, mle
from .pseudogamma import PseudoGammaPrior, marginal_theta1, marginal_theta3
from .targets import posterior_target, theta23_target

__all__ = ["METHODS", "FitResult", "fit", "check_method"]

METHODS = ("analytic", "quadrature", "harm", "auto")


@dataclass(frozen=True)
class FitResult:
    variant: ModelVariant
    prior: object
    method: str
    level: float
    summaries: dict[str, PosteriorSummary]
    posteriors: dict[str, GammaPosterior]
    mle: MleResult
    predictive: dict[str, LomaxParams] | None
    chain: ChainResult | None = None


def _is_conjugate(prior) -> bool:
    return isinstance(prior, (IndependentGammaPrior, ImproperPrior))


def check_method(prior, variant: ModelVariant, method: str) -> str:
    """Validate the method for the prior/variant pair and resolve ``auto``."""
    variant = ModelVariant.parse(variant)
    if method not in METHODS:
        raise IncompatibleMethodError(f"unknown method {method!r}")
    if method == "auto":
        return "analytic" if _is_conjugate(prior) and variant.is_submodel else "harm"
    if method == "analytic":
        if not _is_conjugate(prior):
            raise IncompatibleMethodError("the analytic method needs an independent-gamma or improper prior")
        if not variant.is_submodel:
            raise IncompatibleMethodError(
                "the analytic method is unavailable for the full model: (theta2, theta3) has no closed-form posterior"
            )
    if method == "quadrature":
        if not isinstance(prior, PseudoGammaPrior) or not prior.is_simple:
            raise IncompatibleMethodError("the quadrature method needs a pseudo-gamma prior with psi2 = 0")
        if not variant.is_submodel:
            raise IncompatibleMethodError("the quadrature method is available for the sub-models only")
    return method


def _analytic_posteriors(prior, sample, variant) -> dict[str, GammaPosterior]:
    out = {"theta1": posterior_theta1(prior, sample)}
    if variant.is_submodel:
        out["theta3"] = posterior_theta3(prior, sample, variant)
    return out


def fit(
    sample: BivariateSample,
    variant: ModelVariant,
    prior,
    method: str = "auto",
    chain: ChainConfig | None = None,
    level: float = 0.95,
    *,
    conditional_normalizer: bool = True,
) -> FitResult:
    """Fit ``sample`` and return per-parameter posterior summaries.

    ``chain`` configures the sampler when one is needed (defaults to
    :class:`ChainConfig` defaults).
    """
    variant = ModelVariant.parse(variant)
    requested = method
    method = check_method(prior, variant, method)
    chain = chain or ChainConfig()
    posteriors: dict[str, GammaPosterior] = {}
    if _is_conjugate(prior) and not (variant is ModelVariant.FULL and isinstance(prior, ImproperPrior)):
        posteriors = _analytic_posteriors(prior, sample, variant)

    summaries: dict[str, PosteriorSummary] = {}
    result = None
    if method == "analytic":
        summaries = {name: summarize(post, level) for name, post in posteriors.items()}
    elif method == "quadrature":
        for build in (marginal_theta1, marginal_theta3):
            marginal = build(prior, sample, variant, conditional_normalizer=conditional_normalizer)
            summaries[marginal.parameter] = marginal.summary(level)
    elif requested == "auto" and variant is ModelVariant.FULL and _is_conjugate(prior):
        method = "analytic+harm"
        summaries["theta1"] = summarize(posterior_theta1(prior, sample), level)
        result = run_chain(theta23_target(prior, sample), chain)
        for s in summarize_chain(result, level):
            summaries[s.parameter] = s
    else:
        result = run_chain(posterior_target(prior, sample, variant), chain)
        summaries = {s.parameter: s for s in summarize_chain(result, level)}

    predictive = None
    if variant.is_submodel and _is_conjugate(prior):
        predictive = {
            "x": predictive_x(posteriors["theta1"]),
            "y": predictive_y(posteriors["theta3"], variant),
        }
    return FitResult(
        variant=variant,
        prior=prior,
        method=method,
        level=level,
        summaries=summaries,
        posteriors=posteriors,
        mle=mle(sample, variant),
        predictive=predictive,
        chain=result,
    )
