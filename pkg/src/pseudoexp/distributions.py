"""Bivariate pseudo-exponential model and the helper distributions around it.

The model is ``X ~ Exp(theta1)`` and ``Y | X = x ~ Exp(theta2 + theta3 * x)``.
Two sub-models are used throughout the package:

* ``SUB1``: ``theta2 == theta3`` so the conditional rate is ``theta3 * (1 + x)``.
* ``SUB2``: ``theta2 == 0`` so the conditional rate is ``theta3 * x``.

All densities are computed in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np
from scipy import special

from .errors import ConstraintError, ConvergenceError, DomainError, MomentError

__all__ = [
    "ModelVariant",
    "PseudoExpParams",
    "GammaParams",
    "LomaxParams",
    "BivariateSample",
    "make_rng",
    "joint_logpdf",
    "joint_pdf",
    "sample_bivariate",
    "exponential_sample",
    "gamma_logpdf",
    "gamma_pdf",
    "gamma_cdf",
    "gamma_sample",
    "gamma_quantile",
    "lomax_logpdf",
    "lomax_pdf",
    "lomax_cdf",
    "lomax_quantile",
    "lomax_mean",
    "lomax_variance",
]


class ModelVariant(str, Enum):
    FULL = "full"
    SUB1 = "sub1"
    SUB2 = "sub2"

    @property
    def is_submodel(self) -> bool:
        return self is not ModelVariant.FULL

    @classmethod
    def parse(cls, value: "str | ModelVariant") -> "ModelVariant":
        if isinstance(value, cls):
            return value
        aliases = {
            "full": cls.FULL,
            "sub1": cls.SUB1,
            "submodel1": cls.SUB1,
            "submodeli": cls.SUB1,
            "sub2": cls.SUB2,
            "submodel2": cls.SUB2,
            "submodelii": cls.SUB2,
        }
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown model variant {value!r}") from None


@dataclass(frozen=True)
class PseudoExpParams:
    """Parameter triple of the pseudo-exponential model.

    Use :meth:`sub1` / :meth:`sub2` to build parameters that satisfy the
    sub-model constraints exactly.
    """

    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConstraintError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.theta1 <= 0:
            raise ConstraintError(f"theta1 must be > 0, got {self.theta1}")
        if self.theta2 < 0 or self.theta3 < 0:
            raise ConstraintError("theta2 and theta3 must be >= 0")
        if self.theta2 + self.theta3 <= 0:
            raise ConstraintError("theta2 + theta3 must be > 0")

    @classmethod
    def sub1(cls, theta1: float, theta3: float) -> "PseudoExpParams":
        return cls(theta1, theta3, theta3)

    @classmethod
    def sub2(cls, theta1: float, theta3: float) -> "PseudoExpParams":
        return cls(theta1, 0.0, theta3)

    def check(self, variant: ModelVariant) -> None:
        """Raise :class:`ConstraintError` unless the triple belongs to ``variant``."""
        variant = ModelVariant.parse(variant)
        if variant is ModelVariant.SUB1 and self.theta2 != self.theta3:
            raise ConstraintError("sub-model I requires theta2 == theta3")
        if variant is ModelVariant.SUB2 and self.theta2 != 0.0:
            raise ConstraintError("sub-model II requires theta2 == 0")
        if variant is not ModelVariant.FULL and self.theta3 <= 0:
            raise ConstraintError("sub-models require theta3 > 0")

    def conditional_rate(self, x):
        return self.theta2 + self.theta3 * np.asarray(x, dtype=float)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)


@dataclass(frozen=True)
class GammaParams:
    """Gamma distribution in the shape/rate parameterisation."""

    shape: float
    rate: float

    def __post_init__(self):
        shape, rate = float(self.shape), float(self.rate)
        if not (shape > 0 and rate > 0 and math.isfinite(shape) and math.isfinite(rate)):
            raise ConstraintError(f"gamma shape and rate must be finite and > 0, got ({shape}, {rate})")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "rate", rate)

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2


@dataclass(frozen=True)
class LomaxParams:
    """Pareto distribution of the second kind with density ``a l^a / (l + t)^(a+1)``."""

    shape: float
    scale: float

    def __post_init__(self):
        shape, scale = float(self.shape), float(self.scale)
        if not (shape > 0 and scale > 0 and math.isfinite(shape) and math.isfinite(scale)):
            raise ConstraintError(f"Lomax shape and scale must be finite and > 0, got ({shape}, {scale})")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "scale", scale)


@dataclass(frozen=True, eq=False)
class BivariateSample:
    """Observed pairs ``(x_i, y_i)`` with cached sufficient statistics.

    The sums are computed with :func:`math.fsum`, so they are correctly
    rounded and independent of the order of the pairs.
    """

    x: np.ndarray
    y: np.ndarray
    n: int = field(init=False)
    sx: float = field(init=False)
    sy: float = field(init=False)
    sxy: float = field(init=False)

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        if x.size < 1:
            raise ValueError("a sample needs at least one pair")
        bad = np.flatnonzero(~(np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)))
        if bad.size:
            rows = ", ".join(str(i + 1) for i in bad[:10])
            raise DomainError(f"all x and y must be finite and > 0 (offending pairs: {rows})")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "n", int(x.size))
        object.__setattr__(self, "sx", math.fsum(x))
        object.__setattr__(self, "sy", math.fsum(y))
        object.__setattr__(self, "sxy", math.fsum(x * y))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "BivariateSample":
        pairs = list(pairs)
        if not pairs:
            raise ValueError("a sample needs at least one pair")
        x, y = zip(*pairs)
        return cls(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def concat(self, other: "BivariateSample") -> "BivariateSample":
        return BivariateSample(np.concatenate([self.x, other.x]), np.concatenate([self.y, other.y]))

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def __len__(self) -> int:
        return self.n


def make_rng(seed=None) -> np.random.Generator:
    """Counter-based (Philox) 64-bit generator; accepts an int or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be > 0")
    return arr


def _scalar_or_array(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def joint_logpdf(params: PseudoExpParams, variant: ModelVariant, x, y):
    """Log joint density ``log theta1 - theta1 x + log(rate) - rate y`` with rate = theta2 + theta3 x."""
    params.check(variant)
    x = _check_positive("x", x)
    y = _check_positive("y", y)
    rate = params.theta2 + params.theta3 * x
    out = math.log(params.theta1) - params.theta1 * x + np.log(rate) - rate * y
    return _scalar_or_array(out)


def joint_pdf(params: PseudoExpParams, variant: ModelVariant, x, y):
    return _scalar_or_array(np.exp(joint_logpdf(params, variant, x, y)))


def exponential_sample(rate, size, rng: np.random.Generator):
    """Inverse-CDF exponential draws ``-log(1 - U) / rate``.

    ``rate`` broadcasts against ``size``.
    """
    u = rng.random(size)
    return -np.log1p(-u) / rate


def sample_bivariate(
    params: PseudoExpParams, variant: ModelVariant, n: int, rng: np.random.Generator
) -> BivariateSample:
    """Draw ``n`` pairs by composition: x from Exp(theta1), then y from Exp(theta2 + theta3 x)."""
    params.check(variant)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    x = exponential_sample(params.theta1, n, rng)
    y = exponential_sample(params.conditional_rate(x), n, rng)
    return BivariateSample(x, y)


# ---------------------------------------------------------------------------
# gamma helpers


def gamma_logpdf(params: GammaParams, t):
    t = np.asarray(t, dtype=float)
    a, b = params.shape, params.rate
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a * math.log(b) - special.gammaln(a) + special.xlogy(a - 1.0, t) - b * t
    out = np.where(t > 0, out, -np.inf)
    if a == 1.0:
        out = np.where(t == 0, math.log(b), out)
    elif a < 1.0:
        out = np.where(t == 0, np.inf, out)
    return _scalar_or_array(out)


def gamma_pdf(params: GammaParams, t):
    return _scalar_or_array(np.exp(gamma_logpdf(params, t)))


def gamma_cdf(params: GammaParams, t):
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    return _scalar_or_array(special.gammainc(params.shape, params.rate * t))


def gamma_sample(params: GammaParams, size, rng: np.random.Generator):
    """Gamma draws via numpy's Marsaglia-Tsang sampler (boosted for shape < 1)."""
    return rng.standard_gamma(params.shape, size) / params.rate


def _standard_gamma_quantile(a: float, p: float) -> float:
    x = float(special.gammaincinv(a, p))
    if not (x > 0 and math.isfinite(x)):
        raise ConvergenceError(f"gamma quantile inversion failed for shape={a}, p={p}")
    # Safeguarded Newton polish on P(a, x) - p.
    lo, hi = 0.0, math.inf
    log_norm = special.gammaln(a)
    for _ in range(50):
        resid = special.gammainc(a, x) - p
        if resid > 0:
            hi = x
        else:
            lo = x
        dens = math.exp((a - 1.0) * math.log(x) - x - log_norm)
        if dens <= 0 or not math.isfinite(dens):
            break
        step = resid / dens
        new = x - step
        if not (lo < new < hi):
            new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * x
        if abs(new - x) <= 4 * np.finfo(float).eps * x:
            x = new
            break
        x = new
    if abs(special.gammainc(a, x) - p) > 1e-10:
        raise ConvergenceError(f"gamma quantile did not converge for shape={a}, p={p}")
    return x


def gamma_quantile(params: GammaParams, level):
    """Inverse of the regularized lower incomplete gamma function, scaled by 1/rate."""
    levels = np.asarray(level, dtype=float)
    if np.any(~((levels > 0) & (levels < 1))):
        raise DomainError("quantile level must lie in (0, 1)")
    out = np.vectorize(lambda p: _standard_gamma_quantile(params.shape, float(p)), otypes=[float])(levels)
    return _scalar_or_array(out / params.rate)


# ---------------------------------------------------------------------------
# Lomax (Pareto II) helpers


def _check_nonnegative(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t >= 0)):
        raise DomainError("t must be >= 0")
    return t


def lomax_logpdf(params: LomaxParams, t):
    t = _check_nonnegative(t)
    a, lam = params.shape, params.scale
    out = math.log(a) + a * math.log(lam) - (a + 1.0) * np.log(lam + t)
    return _scalar_or_array(out)


def lomax_pdf(params: LomaxParams, t):
    return _scalar_or_array(np.exp(lomax_logpdf(params, t)))


def lomax_cdf(params: LomaxParams, t):
    t = _check_nonnegative(t)
    a, lam = params.shape, params.scale
    # 1 - (lam / (lam + t))^a, written to keep precision for small t
    out = -np.expm1(-a * np.log1p(t / lam))
    return _scalar_or_array(out)


def lomax_quantile(params: LomaxParams, level):
    p = np.asarray(level, dtype=float)
    if np.any(~((p >= 0) & (p < 1))):
        raise DomainError("quantile level must lie in [0, 1)")
    out = params.scale * np.expm1(-np.log1p(-p) / params.shape)
    return _scalar_or_array(out)


def lomax_mean(params: LomaxParams) -> float:
    if params.shape <= 1:
        raise MomentError(f"Lomax mean requires shape > 1, got {params.shape}")
    return params.scale / (params.shape - 1.0)


def lomax_variance(params: LomaxParams) -> float:
    a = params.shape
    if a <= 2:
        raise MomentError(f"Lomax variance requires shape > 2, got {a}")
    return params.scale**2 * a / ((a - 1.0) ** 2 * (a - 2.0))
