"""Command-line front end.

Exit codes: 0 success, 1 I/O or runtime failure, 2 invalid flags,
configuration or method choice, 3 invalid dataset rows.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .conjugate import IMPROPER, ImproperPrior, IndependentGammaPrior, posterior_theta1, posterior_theta3
from .distributions import (
    GammaParams,
    LomaxParams,
    ModelVariant,
    PseudoExpParams,
    gamma_pdf,
    lomax_cdf,
    lomax_mean,
    lomax_pdf,
    lomax_quantile,
    lomax_variance,
    make_rng,
    sample_bivariate,
)
from .errors import ConvergenceError, MomentError, PseudoExpError
from .fitting import METHODS, fit
from .harm import ChainConfig
from .pseudogamma import PseudoGammaPrior, marginal_theta1, marginal_theta3
from .serialization import (
    DatasetError,
    atomic_write_text,
    dataset_text,
    dumps_json,
    format_float,
    read_dataset,
    write_dataset,
)
from .study import export_study, parse_study_config, run_study
from .targets import posterior_target

SCHEMA_VERSION = 1
HYPER_DEFAULTS = {
    "alpha1": 2.0, "beta1": 2.0, "alpha2": 3.0, "beta2": 1.0, "alpha3": 4.0, "beta3": 5.0,
    "tau1": 2.0, "tau2": 4.0, "psi1": 2.0, "psi2": 0.0, "psi3": 3.0,
}


class UsageError(Exception):
    """Flag validation failure (exit 2)."""


# ---------------------------------------------------------------------------
# shared helpers


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _config_hash(config: dict) -> str:
    return _sha256_text(json.dumps(config, sort_keys=True, separators=(",", ":")))


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _parse_range(text: str, flag: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"{flag} must look like LO:HI, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and 0 <= lo < hi):
        raise UsageError(f"{flag} needs 0 <= LO < HI, got {text!r}")
    return lo, hi


def _build_prior(args):
    variant = ModelVariant.parse(args.model)
    h = {k: getattr(args, k) for k in HYPER_DEFAULTS}
    theta2 = GammaParams(h["alpha2"], h["beta2"])
    if args.prior == "independent":
        prior = IndependentGammaPrior(
            GammaParams(h["alpha1"], h["beta1"]),
            GammaParams(h["alpha3"], h["beta3"]),
            theta2 if variant is ModelVariant.FULL else None,
        )
        echo = {"type": "independent", **{k: h[k] for k in ("alpha1", "beta1", "alpha3", "beta3")}}
    elif args.prior == "improper":
        prior, echo = IMPROPER, {"type": "improper"}
    else:
        prior = PseudoGammaPrior(
            h["tau1"], h["tau2"], h["psi1"], h["psi2"], h["psi3"],
            theta2 if variant is ModelVariant.FULL else None,
        )
        echo = {"type": "pseudo", **{k: h[k] for k in ("tau1", "tau2", "psi1", "psi2", "psi3")}}
    if variant is ModelVariant.FULL and args.prior != "improper":
        echo.update(alpha2=h["alpha2"], beta2=h["beta2"])
    return variant, prior, echo


def _add_model_flags(p, with_method=True):
    p.add_argument("--model", default="sub1", help="full, sub1 (theta2 = theta3) or sub2 (theta2 = 0)")
    p.add_argument("--prior", choices=("independent", "improper", "pseudo"), default="independent")
    if with_method:
        p.add_argument("--method", choices=METHODS, default="auto")
    for key, default in HYPER_DEFAULTS.items():
        p.add_argument(f"--{key}", type=float, default=default)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    variant = ModelVariant.parse(args.model)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if variant is ModelVariant.FULL:
        if args.theta2 is None:
            raise UsageError("--theta2 is required for the full model")
        params = PseudoExpParams(args.theta1, args.theta2, args.theta3)
    else:
        if args.theta2 is not None:
            fixed = "equal to theta3" if variant is ModelVariant.SUB1 else "0"
            raise UsageError(f"--theta2 is not allowed for {variant.value}: it is fixed {fixed}")
        build = PseudoExpParams.sub1 if variant is ModelVariant.SUB1 else PseudoExpParams.sub2
        params = build(args.theta1, args.theta3)
    seed = args.seed if args.seed is not None else int(np.random.SeedSequence().entropy % 2**63)
    sample = sample_bivariate(params, variant, args.n, make_rng(np.random.SeedSequence(seed)))
    if args.out:
        write_dataset(sample, args.out)
    else:
        sys.stdout.write(dataset_text(sample))
    print(f"seed: {seed}", file=sys.stderr if not args.out else sys.stdout)
    return 0


# ---------------------------------------------------------------------------
# fit


def _gamma_block(post):
    return {"family": "gamma", "shape": post.shape, "rate": post.rate}


def _lomax_block(params: LomaxParams):
    try:
        mean = lomax_mean(params)
    except MomentError:
        mean = None
    try:
        var = lomax_variance(params)
    except MomentError:
        var = None
    return {"family": "lomax", "shape": params.shape, "scale": params.scale, "mean": mean, "variance": var}


def build_fit_report(args, data_text: str) -> dict:
    variant, prior, echo = _build_prior(args)
    sample = read_dataset(args.data)
    chain_seed = np.random.SeedSequence(args.seed, spawn_key=(2,))
    chain = ChainConfig.from_kept(args.kept_draws, thinning=args.thinning, burn_in=args.burn_in, seed=chain_seed)
    result = fit(
        sample, variant, prior, args.method, chain, args.level,
        conditional_normalizer=args.normalizer == "consistent",
    )
    config = {
        "model": variant.value, "prior": echo, "method": args.method, "level": args.level,
        "seed": args.seed, "kept_draws": args.kept_draws, "thinning": args.thinning,
        "burn_in": args.burn_in, "normalizer": args.normalizer,
    }
    parameters = {}
    for name, s in result.summaries.items():
        post = result.posteriors.get(name) if result.method in ("analytic", "analytic+harm") else None
        parameters[name] = {
            "mean": s.mean, "variance": s.variance, "ci_low": s.ci_low, "ci_high": s.ci_high,
            "mcse": s.mcse, "posterior": _gamma_block(post) if post is not None else None,
        }
    m = result.mle
    diagnostics = None
    if result.chain is not None:
        diagnostics = {
            "acceptance_rate": result.chain.acceptance_rate,
            "burn_in_acceptance": result.chain.burn_in_acceptance,
            "ess": {name: float(e) for name, e in zip(result.chain.names, result.chain.ess)},
            "kept_draws": result.chain.n_kept,
            "thinning": args.thinning,
            "burn_in": args.burn_in,
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "model": variant.value,
        "prior": echo,
        "method": result.method,
        "level": args.level,
        "n": sample.n,
        "parameters": parameters,
        "mle": {
            "theta1": m.params.theta1, "theta2": m.params.theta2, "theta3": m.params.theta3,
            "loglik": m.loglik_at_max, "converged": m.converged, "on_boundary": m.on_boundary,
        },
        "predictive": None if result.predictive is None else {
            k: _lomax_block(v) for k, v in result.predictive.items()
        },
        "diagnostics": diagnostics,
        "provenance": {
            "seed": args.seed,
            "config_hash": _config_hash(config),
            "tool_version": __version__,
            "data_sha256": _sha256_text(data_text),
        },
    }


def cmd_fit(args) -> int:
    data_text = Path(args.data).read_text(encoding="utf-8")
    report = build_fit_report(args, data_text)
    _emit(dumps_json(report), args.out)
    return 0


# ---------------------------------------------------------------------------
# predict


def _predictive_from_report(path) -> dict[str, LomaxParams]:
    try:
        report = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not a JSON fit report ({exc})") from None
    block = report.get("predictive") if isinstance(report, dict) else None
    if not block:
        raise UsageError(f"{path}: the fit report has no predictive block (full model or pseudo-gamma prior)")
    try:
        return {k: LomaxParams(float(v["shape"]), float(v["scale"])) for k, v in block.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: malformed predictive block ({exc})") from None


def _parse_levels(text: str) -> list[float]:
    try:
        levels = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--quantiles must be comma-separated numbers, got {text!r}") from None
    if any(not 0 < p < 1 for p in levels):
        raise UsageError("quantile levels must lie in (0, 1)")
    return levels


def cmd_predict(args) -> int:
    laws = _predictive_from_report(args.fit)
    if args.quantiles is None and args.grid is None:
        raise UsageError("nothing to do: pass --quantiles and/or --grid")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    if args.quantiles is not None:
        levels = _parse_levels(args.quantiles)
        out = {
            "schema_version": SCHEMA_VERSION,
            "quantiles": [
                {"level": p, **{k: float(lomax_quantile(law, p)) for k, law in laws.items()}} for p in levels
            ],
        }
        sys.stdout.write(dumps_json(out))
    if args.grid is not None:
        lo, hi = _parse_range(args.grid, "--grid")
        t = np.linspace(lo, hi, args.steps)
        lines = ["variable,t,pdf,cdf"]
        for k, law in laws.items():
            pdf, cdf = lomax_pdf(law, t), lomax_cdf(law, t)
            lines += [f"{k},{format_float(a)},{format_float(b)},{format_float(c)}" for a, b, c in zip(t, pdf, cdf)]
        text = "\n".join(lines) + "\n"
        if args.out:
            atomic_write_text(args.out, text)
        elif args.quantiles is None:
            sys.stdout.write(text)
        else:
            raise UsageError("--out is required when both --quantiles and --grid are given")
    return 0


# ---------------------------------------------------------------------------
# study


def cmd_study(args) -> int:
    text = Path(args.config).read_text(encoding="utf-8")
    config = parse_study_config(text)
    if args.fast:
        config = config.fast()
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    rows = run_study(config)
    export_study(rows, args.out)
    failed = [
        {"n": r.n, "parameter": r.parameter, "prior": r.prior, "error": r.error} for r in rows if r.error
    ]
    provenance = {
        "schema_version": SCHEMA_VERSION,
        "seed": config.seed,
        "config_hash": _sha256_text(text),
        "tool_version": __version__,
        "fast": bool(args.fast),
        "kept_draws": config.kept_draws,
        "thinning": config.thinning,
        "burn_in": config.burn_in,
        "replications": config.replications,
        "rows": len(rows),
        "failed_cells": failed,
    }
    atomic_write_text(f"{args.out}.provenance.json", dumps_json(provenance))
    for cell in failed:
        print(f"warning: n={cell['n']} {cell['parameter']} {cell['prior']}: {cell['error']}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.out} (kept draws {config.kept_draws})")
    return 0


# ---------------------------------------------------------------------------
# density grids


def _pseudo_prior_marginal(prior: PseudoGammaPrior, parameter: str):
    if parameter == "theta3":
        g = GammaParams(prior.tau1, prior.psi1)
        return lambda t: gamma_pdf(g, t)
    if prior.psi2 != 0.0 or prior.psi3 == 0.0:
        raise UsageError("the theta1 prior marginal is tabulated for psi2 = 0 and psi3 > 0 only")
    # psi3 * theta1 / psi1 is beta-prime(tau2, tau1) distributed
    law = stats.betaprime(prior.tau2, prior.tau1, scale=prior.psi1 / prior.psi3)
    return law.pdf


def _marginal_density(args, variant, prior, sample, parameter):
    if parameter == "theta3" and variant is ModelVariant.FULL:
        raise UsageError("theta3 marginals are tabulated for the sub-models only")
    if isinstance(prior, (IndependentGammaPrior, ImproperPrior)):
        if sample is None:
            if isinstance(prior, ImproperPrior):
                raise UsageError("the improper prior has no density to tabulate")
            g = getattr(prior, parameter)
        else:
            post = posterior_theta1(prior, sample) if parameter == "theta1" else posterior_theta3(prior, sample, variant)
            g = post.gamma
        return lambda t: gamma_pdf(g, t)
    if sample is None:
        return _pseudo_prior_marginal(prior, parameter)
    if not prior.is_simple or not variant.is_submodel:
        raise UsageError("pseudo-gamma posterior marginals need psi2 = 0 and a sub-model")
    build = marginal_theta1 if parameter == "theta1" else marginal_theta3
    return build(prior, sample, variant, conditional_normalizer=args.normalizer == "consistent").pdf


def _joint_values(args, variant, prior, sample, t1, t3):
    """Return ``(values, normalized)`` on the product grid."""
    if isinstance(prior, ImproperPrior) and sample is None:
        raise UsageError("the improper prior has no density to tabulate")
    if isinstance(prior, (IndependentGammaPrior, ImproperPrior)):
        if sample is None:
            g1, g3 = prior.theta1, prior.theta3
        else:
            if not variant.is_submodel:
                raise UsageError("joint posterior grids are available for the sub-models only")
            g1 = posterior_theta1(prior, sample).gamma
            g3 = posterior_theta3(prior, sample, variant).gamma
        return gamma_pdf(g1, t1) * gamma_pdf(g3, t3), True
    if sample is None:
        # theta3 ~ Gamma(tau1, psi1), theta1 | theta3 ~ Gamma(tau2, psi2 + psi3 theta3)
        rate = prior.psi2 + prior.psi3 * t3
        with np.errstate(divide="ignore", invalid="ignore"):
            cond = np.exp(
                prior.tau2 * np.log(rate) + (prior.tau2 - 1) * np.log(t1) - rate * t1 - math.lgamma(prior.tau2)
            )
        cond = np.where((t1 > 0) & (rate > 0), cond, 0.0)
        return gamma_pdf(GammaParams(prior.tau1, prior.psi1), t3) * cond, True
    if not variant.is_submodel:
        raise UsageError("joint posterior grids are available for the sub-models only")
    target = posterior_target(prior, sample, variant)
    logv = np.full(t1.shape, -math.inf)
    for idx in np.ndindex(t1.shape):
        if t1[idx] > 0 and t3[idx] > 0:
            logv[idx] = target.evaluate(np.array([t1[idx], t3[idx]]))
    return np.exp(logv - logv.max()), False


def cmd_grid(args) -> int:
    variant, prior, _ = _build_prior(args)
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    lo, hi = _parse_range(args.range, "--range")
    sample = read_dataset(args.data) if args.data else None
    if args.what == "posterior" and sample is None:
        raise UsageError("--what posterior needs --data")
    if args.what == "prior":
        sample = None
    if args.what == "marginal":
        t = np.linspace(lo, hi, args.steps)
        density = _marginal_density(args, variant, prior, sample, args.parameter)
        values = np.asarray(density(t), dtype=float)
        kind = "posterior" if sample is not None else "prior"
        lines = [f"# normalization: normalized ({kind} marginal density of {args.parameter})", f"{args.parameter},density"]
        lines += [f"{format_float(a)},{format_float(b)}" for a, b in zip(t, values)]
    else:
        lo3, hi3 = _parse_range(args.range3, "--range3") if args.range3 else (lo, hi)
        t1 = np.linspace(lo, hi, args.steps)
        t3 = np.linspace(lo3, hi3, args.steps)
        g1, g3 = np.meshgrid(t1, t3, indexing="ij")
        values, normalized = _joint_values(args, variant, prior, sample, g1, g3)
        label = "normalized" if normalized else "kernel (unnormalized, scaled to max 1)"
        lines = [f"# normalization: {label} ({args.what} density of theta1, theta3)", "theta1,theta3,value"]
        lines += [
            f"{format_float(a)},{format_float(b)},{format_float(c)}"
            for a, b, c in zip(g1.ravel(), g3.ravel(), values.ravel())
        ]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudoexp", description="Bayesian inference for the bivariate pseudo-exponential distribution."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an x,y dataset")
    p.add_argument("--model", default="sub1")
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--theta2", type=float, default=None)
    p.add_argument("--theta3", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help="random seed (fresh entropy when omitted; printed)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a dataset and write a JSON report")
    p.add_argument("--data", required=True)
    _add_model_flags(p)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--kept-draws", type=int, default=10_000)
    p.add_argument("--thinning", type=int, default=10)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalizer", choices=("consistent", "printed"), default="consistent",
                   help="pseudo-gamma quadrature posterior: keep (consistent) or drop (printed) the theta3**tau2 factor")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="posterior-predictive quantiles and density grids")
    p.add_argument("--fit", required=True, help="JSON report written by 'fit'")
    p.add_argument("--quantiles", default=None, help="comma-separated levels, e.g. 0.05,0.5,0.95")
    p.add_argument("--grid", default=None, help="t range LO:HI")
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("study", help="run a simulation study from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--fast", action="store_true", help="1,000 kept draws and a shorter burn-in")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("grid", help="density grid for plotting")
    p.add_argument("--what", choices=("prior", "posterior", "marginal"), required=True)
    _add_model_flags(p, with_method=False)
    p.add_argument("--data", default=None)
    p.add_argument("--parameter", choices=("theta1", "theta3"), default="theta1")
    p.add_argument("--range", default="0.01:6", help="theta1 (or marginal) range LO:HI")
    p.add_argument("--range3", default=None, help="theta3 range for joint grids (defaults to --range)")
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--normalizer", choices=("consistent", "printed"), default="consistent")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, PseudoExpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
