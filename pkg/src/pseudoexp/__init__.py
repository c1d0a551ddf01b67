"""Bayesian inference for the bivariate pseudo-exponential distribution.

``X ~ Exp(theta1)`` and ``Y | X = x ~ Exp(theta2 + theta3 x)``, with the
sub-models ``theta2 = theta3`` (sub1) and ``theta2 = 0`` (sub2).
"""

__version__ = "0.1.0"

from .conjugate import (
    IMPROPER,
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
from .distributions import (
    BivariateSample,
    GammaParams,
    LomaxParams,
    ModelVariant,
    PseudoExpParams,
    joint_logpdf,
    joint_pdf,
    make_rng,
    sample_bivariate,
)
from .errors import (
    ConstraintError,
    ConvergenceError,
    DomainError,
    IncompatibleMethodError,
    MomentError,
    ProprietyError,
    PseudoExpError,
)
from .fitting import FitResult, fit
from .harm import ChainConfig, ChainResult, LogTarget, run_chain
from .likelihood import log_likelihood, mle
from .pseudogamma import PseudoGammaPrior, marginal_theta1, marginal_theta3
from .study import StudyConfig, StudyRow, default_study_config, export_study, read_study, run_study

__all__ = [
    "__version__",
    "IMPROPER", "GammaPosterior", "ImproperPrior", "IndependentGammaPrior", "PosteriorSummary",
    "posterior_theta1", "posterior_theta3", "predictive_x", "predictive_y", "summarize",
    "BivariateSample", "GammaParams", "LomaxParams", "ModelVariant", "PseudoExpParams",
    "joint_logpdf", "joint_pdf", "make_rng", "sample_bivariate",
    "ConstraintError", "ConvergenceError", "DomainError", "IncompatibleMethodError",
    "MomentError", "ProprietyError", "PseudoExpError",
    "FitResult", "fit", "ChainConfig", "ChainResult", "LogTarget", "run_chain",
    "log_likelihood", "mle", "PseudoGammaPrior", "marginal_theta1", "marginal_theta3",
    "StudyConfig", "StudyRow", "default_study_config", "export_study", "read_study", "run_study",
]
