"""Dependent pseudo-gamma priors and their posteriors.

The prior puts ``theta3 ~ Gamma(tau1, psi1)`` and, given ``theta3``,
``theta1 ~ Gamma(tau2, psi2 + psi3 * theta3)``.  With ``psi2 == 0`` the
sub-model posteriors have one-dimensional marginal kernels that are
normalised here by adaptive quadrature; for ``psi2 > 0`` only log kernels
are provided and sampling (:mod:`pseudoexp.harm`) is the designated route.

For the full model, ``theta2`` gets an independent gamma prior
(``PseudoGammaPrior.theta2``) multiplying the ``(theta1, theta3)`` prior.

Kernels drop every additive constant that depends only on the data or
the hyper-parameters, so only differences of log kernels are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .conjugate import PosteriorSummary
from .distributions import BivariateSample, GammaParams, ModelVariant, PseudoExpParams
from .errors import ConstraintError, ConvergenceError, DomainError
from .likelihood import log_likelihood
from .quadrature import gk15, integrate

__all__ = [
    "PseudoGammaPrior",
    "MarginalPosterior",
    "prior_log_kernel",
    "posterior_log_kernel",
    "general_posterior_log_kernel",
    "marginal_theta1",
    "marginal_theta3",
]

# relative tail mass of the gamma envelope left beyond the integration limit
TAIL_MASS = 1e-12


@dataclass(frozen=True)
class PseudoGammaPrior:
    tau1: float
    tau2: float
    psi1: float
    psi2: float
    psi3: float
    theta2: GammaParams | None = None

    def __post_init__(self):
        for name in ("tau1", "tau2", "psi1", "psi2", "psi3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConstraintError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if not (self.tau1 > 0 and self.tau2 > 0 and self.psi1 > 0):
            raise ConstraintError("tau1, tau2 and psi1 must be > 0")
        # psi3 == 0 is admitted as the decoupled limit
        if self.psi2 < 0 or self.psi3 < 0:
            raise ConstraintError("psi2 and psi3 must be >= 0")

    @property
    def is_simple(self) -> bool:
        return self.psi2 == 0.0


def _positive(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be > 0")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def _dependence_term(prior: PseudoGammaPrior, theta3):
    # tau2 * log(psi2 + psi3 theta3); for psi2 == 0 the constant tau2 log psi3 is dropped
    if prior.psi2 == 0.0:
        return prior.tau2 * np.log(theta3)
    return prior.tau2 * np.log(prior.psi2 + prior.psi3 * theta3)


def prior_log_kernel(prior: PseudoGammaPrior, theta1, theta3):
    """Log kernel of the joint ``(theta1, theta3)`` prior.

    ``tau2 log(psi2 + psi3 t3) + (tau2 - 1) log t1 - (psi2 + psi3 t3) t1
    + (tau1 - 1) log t3 - psi1 t3``.  When ``psi2 == 0`` the first term is
    taken as ``tau2 log t3``, so the power of ``theta3`` becomes
    ``tau1 + tau2 - 1``.
    """
    t1 = _positive("theta1", theta1)
    t3 = _positive("theta3", theta3)
    out = (
        _dependence_term(prior, t3)
        + (prior.tau2 - 1.0) * np.log(t1)
        - (prior.psi2 + prior.psi3 * t3) * t1
        + (prior.tau1 - 1.0) * np.log(t3)
        - prior.psi1 * t3
    )
    return _out(out)


def _submodel_statistic(sample: BivariateSample | None, variant: ModelVariant) -> float:
    if sample is None:
        return 0.0
    if variant is ModelVariant.SUB1:
        return sample.sy + sample.sxy
    if variant is ModelVariant.SUB2:
        return sample.sxy
    raise ConstraintError("closed-form pseudo-gamma posteriors exist for the sub-models only")


def _require_simple_submodel(prior: PseudoGammaPrior, variant) -> ModelVariant:
    variant = ModelVariant.parse(variant)
    if not prior.is_simple:
        raise ConstraintError("posterior marginals are only available for psi2 == 0")
    if not variant.is_submodel:
        raise ConstraintError("posterior marginals are only available for the sub-models")
    return variant


def posterior_log_kernel(
    prior: PseudoGammaPrior,
    sample: BivariateSample | None,
    variant: ModelVariant,
    theta1,
    theta3,
    *,
    conditional_normalizer: bool = True,
):
    """Joint posterior log kernel of ``(theta1, theta3)`` under a ``psi2 == 0`` prior.

    ``(tau2 + n - 1) log t1 - t1 (Sx + psi3 t3) + (tau1 + tau2 + n - 1) log t3 - t3 (psi1 + C)``
    where ``C = Sy + Sxy`` (sub-model I) or ``Sxy`` (sub-model II).

    ``conditional_normalizer=False`` drops the ``t3**tau2`` factor that the
    gamma normaliser of ``theta1 | theta3`` contributes.  That variant is
    not the Bayes posterior of the stated prior; it is kept for comparison
    with closed forms that omit the factor.
    """
    variant = _require_simple_submodel(prior, variant)
    t1 = _positive("theta1", theta1)
    t3 = _positive("theta3", theta3)
    n = 0 if sample is None else sample.n
    sx = 0.0 if sample is None else sample.sx
    c = prior.psi1 + _submodel_statistic(sample, variant)
    t3_power = prior.tau1 + n - 1.0 + (prior.tau2 if conditional_normalizer else 0.0)
    out = (
        (prior.tau2 + n - 1.0) * np.log(t1)
        - t1 * (sx + prior.psi3 * t3)
        + t3_power * np.log(t3)
        - t3 * c
    )
    return _out(out)


def general_posterior_log_kernel(
    prior: PseudoGammaPrior,
    sample: BivariateSample | None,
    variant: ModelVariant,
    theta: PseudoExpParams,
) -> float:
    """Prior log kernel plus the full log-likelihood, for any ``psi2`` and variant.

    In the full model ``theta2`` carries the independent gamma prior
    ``prior.theta2``.
    """
    variant = ModelVariant.parse(variant)
    theta.check(variant)
    out = float(prior_log_kernel(prior, theta.theta1, theta.theta3))
    if variant is ModelVariant.FULL:
        if prior.theta2 is None:
            raise ConstraintError("the full model needs a gamma prior for theta2 (PseudoGammaPrior.theta2)")
        a2, b2 = prior.theta2.shape, prior.theta2.rate
        if theta.theta2 > 0:
            out += (a2 - 1.0) * math.log(theta.theta2) - b2 * theta.theta2
        elif a2 > 1.0:
            return -math.inf
        elif a2 < 1.0:
            raise DomainError("kernel diverges at theta2 = 0 when its prior shape is < 1")
    if sample is not None:
        out += log_likelihood(sample, theta, variant).total
    return out


class MarginalPosterior:
    """A one-dimensional posterior known through its log kernel, normalised by quadrature.

    The integration range is ``(0, T)`` where ``T`` leaves relative tail
    mass below ``1e-12`` under ``envelope``, a gamma law whose kernel
    dominates ``exp(log_kernel)`` up to a constant with a nonincreasing
    ratio.  Instances are immutable once built.
    """

    def __init__(
        self,
        parameter: str,
        log_kernel,
        envelope: GammaParams,
        *,
        rel_tol: float = 1e-10,
        initial_panels: int = 32,
        max_panels: int = 4000,
    ):
        self.parameter = parameter
        self.log_kernel = log_kernel
        self.envelope = envelope
        self.upper = float(special.gammainccinv(envelope.shape, TAIL_MASS) / envelope.rate)
        grid = np.linspace(0.0, self.upper, 4097)[1:]
        self._offset = float(np.max(log_kernel(grid)))
        opts = dict(abs_tol=1e-14 * self.upper, rel_tol=rel_tol, initial_panels=initial_panels, max_panels=max_panels)

        def moments(t):
            k = self._scaled_kernel(t)
            return np.vstack([k, t * k])

        res = integrate(moments, 0.0, self.upper, **opts)
        z = float(res.value[0])
        if not (z > 0 and math.isfinite(z)):
            raise ConvergenceError(f"marginal kernel of {parameter} has no finite positive mass")
        self._z = z
        self.log_normalizer = math.log(z) + self._offset
        self.mean = float(res.value[1]) / z
        m = self.mean
        central = integrate(lambda t: (t - m) ** 2 * self._scaled_kernel(t), 0.0, self.upper, **opts)
        self.variance = float(central.value[0]) / z
        self.n_panels = res.n_panels
        self._edges = res.edges
        self._cdf_at_edges = res.cumulative(0) / z

    def _scaled_kernel(self, t):
        return np.exp(self.log_kernel(t) - self._offset)

    def logpdf(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t > 0, self.log_kernel(np.where(t > 0, t, 1.0)) - self.log_normalizer, -np.inf)
        return _out(out)

    def pdf(self, t):
        return _out(np.exp(self.logpdf(t)))

    def _cdf_scalar(self, t: float) -> float:
        if t <= 0:
            return 0.0
        if t >= self.upper:
            return 1.0
        j = int(np.searchsorted(self._edges, t, side="right")) - 1
        lo = self._edges[j]
        partial = 0.0 if t == lo else float(gk15(self._scaled_kernel, lo, t)[0][0]) / self._z
        return min(1.0, max(0.0, self._cdf_at_edges[j] + partial))

    def cdf(self, t):
        return _out(np.vectorize(self._cdf_scalar, otypes=[float])(np.asarray(t, dtype=float)))

    def _quantile_scalar(self, p: float) -> float:
        if not 0 < p < 1:
            raise DomainError("quantile level must lie in (0, 1)")
        cum = self._cdf_at_edges
        j = int(np.clip(np.searchsorted(cum, p) - 1, 0, len(cum) - 2))
        lo, hi = float(self._edges[j]), float(self._edges[j + 1])
        # monotone interpolation within the panel as the starting point
        span = cum[j + 1] - cum[j]
        x = lo + (hi - lo) * ((p - cum[j]) / span if span > 0 else 0.5)
        for _ in range(200):
            if self._cdf_scalar(x) < p:
                lo = x
            else:
                hi = x
            x = 0.5 * (lo + hi)
            if hi - lo <= 1e-12 * x:
                break
        return x

    def quantile(self, level):
        return _out(np.vectorize(self._quantile_scalar, otypes=[float])(np.asarray(level, dtype=float)))

    def summary(self, level: float = 0.95) -> PosteriorSummary:
        lo, hi = self.quantile([(1 - level) / 2, (1 + level) / 2])
        return PosteriorSummary(self.parameter, self.mean, self.variance, float(lo), float(hi), level)


def _marginal_inputs(prior, sample, variant):
    variant = _require_simple_submodel(prior, variant)
    if sample is None:
        raise ValueError("marginal posteriors need data")
    return variant, prior.psi1 + _submodel_statistic(sample, variant)


def marginal_theta1(
    prior: PseudoGammaPrior,
    sample: BivariateSample,
    variant: ModelVariant,
    *,
    conditional_normalizer: bool = True,
    **quad_options,
) -> MarginalPosterior:
    """Marginal posterior of ``theta1``: kernel ``t^(tau2+n-1) e^(-t Sx) (C + psi3 t)^-(tau1+tau2+n)``.

    With ``conditional_normalizer=False`` the exponent of ``(C + psi3 t)``
    is ``tau1 + n``.
    """
    _, c = _marginal_inputs(prior, sample, variant)
    shape = prior.tau2 + sample.n
    power = prior.tau1 + sample.n + (prior.tau2 if conditional_normalizer else 0.0)
    sx, psi3 = sample.sx, prior.psi3

    def log_kernel(t):
        return (shape - 1.0) * np.log(t) - t * sx - power * np.log(c + psi3 * t)

    return MarginalPosterior("theta1", log_kernel, GammaParams(shape, sx), **quad_options)


def marginal_theta3(
    prior: PseudoGammaPrior,
    sample: BivariateSample,
    variant: ModelVariant,
    *,
    conditional_normalizer: bool = True,
    **quad_options,
) -> MarginalPosterior:
    """Marginal posterior of ``theta3``: kernel ``t^(tau1+tau2+n-1) e^(-t C) (Sx + psi3 t)^-(tau2+n)``.

    With ``conditional_normalizer=False`` the power of ``t`` is ``tau1 + n - 1``.
    """
    _, c = _marginal_inputs(prior, sample, variant)
    shape = prior.tau1 + sample.n + (prior.tau2 if conditional_normalizer else 0.0)
    power = prior.tau2 + sample.n
    sx, psi3 = sample.sx, prior.psi3

    def log_kernel(t):
        return (shape - 1.0) * np.log(t) - t * c - power * np.log(sx + psi3 * t)

    return MarginalPosterior("theta3", log_kernel, GammaParams(shape, c), **quad_options)
