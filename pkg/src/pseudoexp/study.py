"""Simulation-study harness.

A study simulates one dataset per ``(replication, n)`` cell from the true
parameters, fits it under every configured prior and tabulates posterior
means and equal-tail intervals.  Conjugate priors on the sub-models are
summarised in closed form; everything else goes through the sampler.

Seeds are derived by fixed splitting of ``StudyConfig.seed``: the dataset
of a cell depends only on ``(replication, n)`` so all priors see the same
data, and each chain gets its own stream keyed by the prior's position.
Results are merged by cell key, so running cells in parallel never changes
the output.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .conjugate import IMPROPER, IndependentGammaPrior
from .distributions import GammaParams, ModelVariant, PseudoExpParams, make_rng, sample_bivariate
from .errors import PseudoExpError
from .fitting import fit
from .harm import ChainConfig
from .pseudogamma import PseudoGammaPrior
from .serialization import atomic_write_text, format_float
from .targets import parameter_names

__all__ = [
    "PriorEntry",
    "StudyConfig",
    "StudyRow",
    "StudyConfigError",
    "FAST_KEPT_DRAWS",
    "FAST_BURN_IN",
    "DEFAULT_SAMPLE_SIZES",
    "default_priors",
    "default_study_config",
    "parse_study_config",
    "run_study",
    "export_study",
    "read_study",
    "STUDY_HEADER",
]

DEFAULT_SAMPLE_SIZES = (20, 30, 50, 100, 200, 500)
FAST_KEPT_DRAWS = 1_000
FAST_BURN_IN = 2_000
STUDY_HEADER = ("n", "parameter", "prior", "mean", "ci_low", "ci_high")
STUDY_METHODS = ("auto", "harm")


class StudyConfigError(PseudoExpError, ValueError):
    """Invalid study configuration; ``line`` is the 1-based line of the offending entry, if any."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class PriorEntry:
    label: str
    prior: object


@dataclass(frozen=True)
class StudyConfig:
    variant: ModelVariant
    true_params: PseudoExpParams
    sample_sizes: tuple[int, ...]
    priors: tuple[PriorEntry, ...]
    replications: int = 1
    kept_draws: int = 10_000
    thinning: int = 10
    burn_in: int = 10_000
    seed: int = 0
    method: str = "auto"
    level: float = 0.95
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "variant", ModelVariant.parse(self.variant))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "priors", tuple(self.priors))
        self.true_params.check(self.variant)
        if not self.sample_sizes:
            raise StudyConfigError("sample_sizes must be nonempty")
        if any(n < 1 for n in self.sample_sizes):
            raise StudyConfigError("sample sizes must be >= 1")
        if len(set(self.sample_sizes)) != len(self.sample_sizes):
            raise StudyConfigError("sample sizes must be distinct")
        if not self.priors:
            raise StudyConfigError("at least one prior is required")
        labels = [p.label for p in self.priors]
        if len(set(labels)) != len(labels):
            raise StudyConfigError("prior labels must be distinct")
        if self.replications < 1:
            raise StudyConfigError("replications must be >= 1")
        if self.kept_draws < 2 or self.thinning < 1 or self.burn_in < 0:
            raise StudyConfigError("need kept_draws >= 2, thinning >= 1 and burn_in >= 0")
        if self.method not in STUDY_METHODS:
            raise StudyConfigError(f"method must be one of {', '.join(STUDY_METHODS)}")
        if not 0 < self.level < 1:
            raise StudyConfigError("level must lie in (0, 1)")
        if self.workers < 1:
            raise StudyConfigError("workers must be >= 1")

    def chain_config(self, seed) -> ChainConfig:
        return ChainConfig.from_kept(self.kept_draws, thinning=self.thinning, burn_in=self.burn_in, seed=seed)

    def fast(self) -> "StudyConfig":
        return replace(self, kept_draws=FAST_KEPT_DRAWS, burn_in=FAST_BURN_IN)


@dataclass(frozen=True)
class StudyRow:
    n: int
    parameter: str
    prior: str
    mean: float
    ci_low: float
    ci_high: float
    method: str = ""
    mcse: float | None = None
    error: str | None = field(default=None, compare=False)

    @property
    def ok(self) -> bool:
        return self.error is None


def default_priors(
    alpha=(2.0, 3.0, 4.0),
    beta=(2.0, 1.0, 5.0),
    tau1=2.0,
    tau2=4.0,
    psi1=2.0,
    psi3=3.0,
    psi2_values=(1.0, 0.0, 7.0),
) -> tuple[PriorEntry, ...]:
    """IGP, ImP and one pseudo-gamma prior per ``psi2`` value (labelled PGP1, PGP2, ...)."""
    theta2 = GammaParams(alpha[1], beta[1])
    entries = [
        PriorEntry(
            "IGP",
            IndependentGammaPrior(GammaParams(alpha[0], beta[0]), GammaParams(alpha[2], beta[2]), theta2),
        ),
        PriorEntry("ImP", IMPROPER),
    ]
    for i, psi2 in enumerate(psi2_values, start=1):
        entries.append(PriorEntry(f"PGP{i}", PseudoGammaPrior(tau1, tau2, psi1, psi2, psi3, theta2)))
    return tuple(entries)


def _default_truth(variant: ModelVariant) -> PseudoExpParams:
    if variant is ModelVariant.FULL:
        return PseudoExpParams(2.0, 1.0, 3.0)
    if variant is ModelVariant.SUB1:
        return PseudoExpParams.sub1(2.0, 3.0)
    return PseudoExpParams.sub2(2.0, 3.0)


def default_study_config(variant=ModelVariant.SUB1, fast: bool = False, seed: int = 0, **overrides) -> StudyConfig:
    """True ``theta1 = 2, theta3 = 3`` (and ``theta2 = 1`` in the full model), sizes 20 to 500, the five-prior set.

    ``overrides`` replace any :class:`StudyConfig` field.
    """
    variant = ModelVariant.parse(variant)
    fields = dict(
        variant=variant,
        true_params=_default_truth(variant),
        sample_sizes=DEFAULT_SAMPLE_SIZES,
        priors=default_priors(),
        seed=seed,
    )
    if fast:
        fields.update(kept_draws=FAST_KEPT_DRAWS, burn_in=FAST_BURN_IN)
    fields.update(overrides)
    return StudyConfig(**fields)


# ---------------------------------------------------------------------------
# running


def _data_seed(config: StudyConfig, rep: int, n: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(config.seed, spawn_key=(0, rep, n))


def _chain_seed(config: StudyConfig, rep: int, n: int, prior_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(config.seed, spawn_key=(1, rep, n, prior_index))


def _run_cell(config: StudyConfig, rep: int, n: int) -> dict:
    """Fit every prior on the cell's dataset; values are ``(mean, lo, hi, method, mcse, error)``."""
    sample = sample_bivariate(config.true_params, config.variant, n, make_rng(_data_seed(config, rep, n)))
    names = parameter_names(config.variant)
    out = {}
    for k, entry in enumerate(config.priors):
        chain = config.chain_config(_chain_seed(config, rep, n, k))
        try:
            result = fit(sample, config.variant, entry.prior, config.method, chain, config.level)
        except (PseudoExpError, ValueError) as exc:
            for name in names:
                out[(entry.label, name)] = (math.nan, math.nan, math.nan, "", None, f"{type(exc).__name__}: {exc}")
            continue
        for name in names:
            s = result.summaries[name]
            out[(entry.label, name)] = (s.mean, s.ci_low, s.ci_high, result.method, s.mcse, None)
    return out


def _combine(values: list[tuple]) -> tuple:
    """Average replications of one cell; any failed replication marks the cell as failed."""
    errors = [v[5] for v in values if v[5] is not None]
    if errors:
        return math.nan, math.nan, math.nan, values[0][3], None, errors[0]
    r = len(values)
    mean = math.fsum(v[0] for v in values) / r
    lo = math.fsum(v[1] for v in values) / r
    hi = math.fsum(v[2] for v in values) / r
    mcses = [v[4] for v in values]
    mcse = None if any(m is None for m in mcses) else math.sqrt(math.fsum(m * m for m in mcses)) / r
    return mean, lo, hi, values[0][3], mcse, None


def run_study(config: StudyConfig) -> list[StudyRow]:
    """One row per ``(n, parameter, prior)``, ordered by ``n``, then parameter, then prior order."""
    keys = [(rep, n) for rep in range(config.replications) for n in config.sample_sizes]
    if config.workers > 1 and len(keys) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {key: pool.submit(_run_cell, config, *key) for key in keys}
            cells = {key: fut.result() for key, fut in futures.items()}
    else:
        cells = {key: _run_cell(config, *key) for key in keys}

    rows = []
    for n in sorted(config.sample_sizes):
        for name in parameter_names(config.variant):
            for entry in config.priors:
                values = [cells[(rep, n)][(entry.label, name)] for rep in range(config.replications)]
                mean, lo, hi, method, mcse, error = _combine(values)
                rows.append(StudyRow(n, name, entry.label, mean, lo, hi, method, mcse, error))
    return rows


# ---------------------------------------------------------------------------
# table I/O


def _study_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STUDY_HEADER)
    for r in rows:
        writer.writerow([r.n, r.parameter, r.prior, format_float(r.mean), format_float(r.ci_low), format_float(r.ci_high)])
    return buf.getvalue()


def export_study(rows, destination) -> None:
    """Write the study table as CSV (numbers at 17 significant digits); failed cells are written as ``nan``."""
    rows = list(rows)
    if not rows:
        raise ValueError("no study rows to export")
    atomic_write_text(destination, _study_text(rows))


def read_study(path) -> list[StudyRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != STUDY_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [
            StudyRow(int(n), parameter, prior, float(mean), float(lo), float(hi))
            for n, parameter, prior, mean, lo, hi in reader
        ]


# ---------------------------------------------------------------------------
# configuration files

_FLOAT_KEYS = (
    "theta1", "theta2", "theta3", "alpha1", "beta1", "alpha2", "beta2", "alpha3", "beta3",
    "tau1", "tau2", "psi1", "psi3", "level",
)
_INT_KEYS = ("replications", "kept_draws", "thinning", "burn_in", "seed", "workers")
_KNOWN_KEYS = set(_FLOAT_KEYS) | set(_INT_KEYS) | {"variant", "sample_sizes", "priors", "method"}
_REQUIRED_KEYS = ("variant", "sample_sizes")


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;" or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise StudyConfigError(f"expected key = value, got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise StudyConfigError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise StudyConfigError(f"duplicate key {key!r} (first set on line {entries[key][1]})", lineno)
        entries[key] = (value, lineno)
    return entries


def _parse_prior_list(value: str, lineno: int, hypers: dict) -> tuple[PriorEntry, ...]:
    alpha = (hypers["alpha1"], hypers["alpha2"], hypers["alpha3"])
    beta = (hypers["beta1"], hypers["beta2"], hypers["beta3"])
    theta2 = GammaParams(alpha[1], beta[1])
    entries, pseudo_count = [], 0
    for token in (t.strip() for t in value.split(",")):
        kind, _, arg = token.partition(":")
        kind = kind.strip().lower()
        if kind == "independent" and not arg:
            entries.append(PriorEntry(
                "IGP", IndependentGammaPrior(GammaParams(alpha[0], beta[0]), GammaParams(alpha[2], beta[2]), theta2)
            ))
        elif kind == "improper" and not arg:
            entries.append(PriorEntry("ImP", IMPROPER))
        elif kind == "pseudo":
            try:
                psi2 = float(arg) if arg else 0.0
            except ValueError:
                raise StudyConfigError(f"pseudo prior needs a numeric psi2, got {arg!r}", lineno) from None
            pseudo_count += 1
            entries.append(PriorEntry(
                f"PGP{pseudo_count}",
                PseudoGammaPrior(hypers["tau1"], hypers["tau2"], hypers["psi1"], psi2, hypers["psi3"], theta2),
            ))
        else:
            raise StudyConfigError(
                f"unknown prior {token!r}; use independent, improper or pseudo:<psi2>", lineno
            )
    return tuple(entries)


def parse_study_config(text: str) -> StudyConfig:
    """Parse a flat ``key = value`` study file.

    Required keys are ``variant`` and ``sample_sizes``.  ``priors`` is a
    comma-separated list of ``independent``, ``improper`` and
    ``pseudo:<psi2>`` (default: the five-prior set).  Lines starting with
    ``#`` or ``;`` and ``[section]`` headers are ignored.
    """
    entries = _parse_lines(text)
    for key in _REQUIRED_KEYS:
        if key not in entries:
            raise StudyConfigError(f"missing required key {key!r}")

    def number(key, cast, default):
        if key not in entries:
            return default
        value, lineno = entries[key]
        try:
            return cast(value)
        except ValueError:
            raise StudyConfigError(f"{key} must be {'an integer' if cast is int else 'a number'}, got {value!r}", lineno) from None

    value, lineno = entries["variant"]
    try:
        variant = ModelVariant.parse(value)
    except ValueError as exc:
        raise StudyConfigError(str(exc), lineno) from None

    value, lineno = entries["sample_sizes"]
    try:
        sizes = tuple(int(v) for v in value.split(","))
    except ValueError:
        raise StudyConfigError(f"sample_sizes must be comma-separated integers, got {value!r}", lineno) from None

    hyper_defaults = dict(alpha1=2.0, beta1=2.0, alpha2=3.0, beta2=1.0, alpha3=4.0, beta3=5.0, tau1=2.0, tau2=4.0, psi1=2.0, psi3=3.0)
    hypers = {k: number(k, float, d) for k, d in hyper_defaults.items()}
    truth = _default_truth(variant)
    theta1 = number("theta1", float, truth.theta1)
    theta3 = number("theta3", float, truth.theta3)
    if variant.is_submodel and "theta2" in entries:
        raise StudyConfigError(f"theta2 is fixed by variant {variant.value}", entries["theta2"][1])

    try:
        if variant is ModelVariant.FULL:
            true_params = PseudoExpParams(theta1, number("theta2", float, truth.theta2), theta3)
        elif variant is ModelVariant.SUB1:
            true_params = PseudoExpParams.sub1(theta1, theta3)
        else:
            true_params = PseudoExpParams.sub2(theta1, theta3)
        if "priors" in entries:
            priors = _parse_prior_list(*entries["priors"], hypers)
        else:
            priors = default_priors(
                alpha=(hypers["alpha1"], hypers["alpha2"], hypers["alpha3"]),
                beta=(hypers["beta1"], hypers["beta2"], hypers["beta3"]),
                tau1=hypers["tau1"], tau2=hypers["tau2"], psi1=hypers["psi1"], psi3=hypers["psi3"],
            )
        method = entries["method"][0] if "method" in entries else "auto"
        return StudyConfig(
            variant=variant,
            true_params=true_params,
            sample_sizes=sizes,
            priors=priors,
            method=method,
            level=number("level", float, 0.95),
            **{k: number(k, int, d) for k, d in (
                ("replications", 1), ("kept_draws", 10_000), ("thinning", 10),
                ("burn_in", 10_000), ("seed", 0), ("workers", 1),
            )},
        )
    except StudyConfigError:
        raise
    except ValueError as exc:
        raise StudyConfigError(str(exc)) from None
