"""Posterior log targets for the sampler, one per (variant, prior) combination.

Points are ``(theta1, theta3)`` for the sub-models and
``(theta1, theta2, theta3)`` for the full model.  Sub-model targets are
evaluated from sufficient statistics; the full model needs one pass over
the x values per evaluation.
"""

from __future__ import annotations

import math

import numpy as np

from .conjugate import ImproperPrior, IndependentGammaPrior, full_model_theta23_kernel
from .distributions import BivariateSample, ModelVariant, PseudoExpParams
from .errors import ConstraintError, ProprietyError
from .harm import LogTarget
from .likelihood import mle
from .pseudogamma import PseudoGammaPrior

__all__ = [
    "parameter_names",
    "point_to_params",
    "params_to_point",
    "posterior_target",
    "theta23_target",
    "initial_point",
]


def parameter_names(variant: ModelVariant) -> tuple[str, ...]:
    variant = ModelVariant.parse(variant)
    if variant is ModelVariant.FULL:
        return ("theta1", "theta2", "theta3")
    return ("theta1", "theta3")


def point_to_params(point, variant: ModelVariant) -> PseudoExpParams:
    variant = ModelVariant.parse(variant)
    if variant is ModelVariant.FULL:
        return PseudoExpParams(*map(float, point))
    if variant is ModelVariant.SUB1:
        return PseudoExpParams.sub1(float(point[0]), float(point[1]))
    return PseudoExpParams.sub2(float(point[0]), float(point[1]))


def params_to_point(params: PseudoExpParams, variant: ModelVariant) -> np.ndarray:
    if ModelVariant.parse(variant) is ModelVariant.FULL:
        return np.array(params.as_tuple())
    return np.array([params.theta1, params.theta3])


def _stats(sample: BivariateSample | None, variant: ModelVariant):
    if sample is None:
        return 0, 0.0, 0.0
    if variant is ModelVariant.SUB1:
        return sample.n, sample.sx, sample.sy + sample.sxy
    return sample.n, sample.sx, sample.sxy


def initial_point(sample: BivariateSample | None, variant: ModelVariant) -> np.ndarray:
    """MLE of the variant, nudged off the boundary; ones without data."""
    variant = ModelVariant.parse(variant)
    if sample is None:
        return np.ones(len(parameter_names(variant)))
    point = params_to_point(mle(sample, variant).params, variant)
    positive = point[point > 0]
    floor = 0.05 * positive.min() if positive.size else 1.0
    return np.where(point > 0, point, floor)


def _gamma_pair(prior, name):
    if isinstance(prior, ImproperPrior):
        return 0.0, 0.0
    component = getattr(prior, name)
    if component is None:
        raise ConstraintError(f"prior has no component for {name}")
    return component.shape, component.rate


def _independent_target(prior, sample, variant) -> LogTarget:
    names = parameter_names(variant)
    a1, b1 = _gamma_pair(prior, "theta1")
    n = 0 if sample is None else sample.n
    sx = 0.0 if sample is None else sample.sx
    s1, r1 = a1 + n - 1.0, b1 + sx
    if variant is ModelVariant.FULL:
        if isinstance(prior, ImproperPrior):
            raise ProprietyError(
                "the full-model (theta2, theta3) posterior is improper under the improper prior"
            )

        def evaluate(p):
            return (
                s1 * math.log(p[0]) - r1 * p[0]
                + full_model_theta23_kernel(prior, sample, p[1], p[2])
            )
    else:
        a3, b3 = _gamma_pair(prior, "theta3")
        _, _, stat = _stats(sample, variant)
        s3, r3 = a3 + n - 1.0, b3 + stat
        if isinstance(prior, ImproperPrior) and (n == 0 or not (sx > 0 and stat > 0)):
            raise ProprietyError("the improper prior needs data with positive statistics")

        def evaluate(p):
            return s1 * math.log(p[0]) - r1 * p[0] + s3 * math.log(p[1]) - r3 * p[1]

    return LogTarget(len(names), evaluate, names, initial_point(sample, variant))


def _pseudo_target(prior: PseudoGammaPrior, sample, variant) -> LogTarget:
    names = parameter_names(variant)
    n = 0 if sample is None else sample.n
    sx = 0.0 if sample is None else sample.sx
    tau1, tau2, psi1, psi2, psi3 = prior.tau1, prior.tau2, prior.psi1, prior.psi2, prior.psi3
    s1 = tau2 + n - 1.0

    def dependence(t3):
        return tau2 * math.log(t3) if psi2 == 0.0 else tau2 * math.log(psi2 + psi3 * t3)

    if variant is ModelVariant.FULL:
        if prior.theta2 is None:
            raise ConstraintError("the full model needs a gamma prior for theta2 (PseudoGammaPrior.theta2)")
        a2, b2 = prior.theta2.shape, prior.theta2.rate
        x = None if sample is None else sample.x
        sy = 0.0 if sample is None else sample.sy
        sxy = 0.0 if sample is None else sample.sxy

        def evaluate(p):
            t1, t2, t3 = p[0], p[1], p[2]
            out = (
                dependence(t3) + s1 * math.log(t1) - t1 * (psi2 + psi3 * t3 + sx)
                + (tau1 - 1.0) * math.log(t3) - psi1 * t3
                + (a2 - 1.0) * math.log(t2) - b2 * t2
            )
            if x is not None:
                out += float(np.sum(np.log(t2 + t3 * x))) - t2 * sy - t3 * sxy
            return out
    else:
        _, _, stat = _stats(sample, variant)
        s3 = tau1 + n - 1.0
        c = psi1 + stat

        def evaluate(p):
            t1, t3 = p[0], p[1]
            return dependence(t3) + s1 * math.log(t1) - t1 * (psi2 + psi3 * t3 + sx) + s3 * math.log(t3) - t3 * c

    return LogTarget(len(names), evaluate, names, initial_point(sample, variant))


def posterior_target(prior, sample: BivariateSample | None, variant: ModelVariant) -> LogTarget:
    """Joint posterior log kernel over all free parameters of ``variant``."""
    variant = ModelVariant.parse(variant)
    if isinstance(prior, PseudoGammaPrior):
        return _pseudo_target(prior, sample, variant)
    if isinstance(prior, (IndependentGammaPrior, ImproperPrior)):
        return _independent_target(prior, sample, variant)
    raise TypeError(f"unsupported prior type {type(prior).__name__}")


def theta23_target(prior, sample: BivariateSample | None) -> LogTarget:
    """The full-model ``(theta2, theta3)`` factor alone (``theta1`` is conjugate)."""
    if isinstance(prior, ImproperPrior):
        raise ProprietyError("the full-model (theta2, theta3) posterior is improper under the improper prior")

    def evaluate(p):
        return full_model_theta23_kernel(prior, sample, p[0], p[1])

    start = initial_point(sample, ModelVariant.FULL)[1:] if sample is not None else np.ones(2)
    return LogTarget(2, evaluate, ("theta2", "theta3"), start)
