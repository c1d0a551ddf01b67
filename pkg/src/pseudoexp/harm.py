"""Hit-and-run Metropolis sampling on the positive orthant.

Each step draws a direction uniformly on the unit sphere and a signed
Gaussian step length, scales the move per dimension, and accepts by the
plain Metropolis rule.  Proposals that leave the open orthant or land on
zero target density are rejected, which keeps the proposal symmetric.

During burn-in the global step size follows a Robbins-Monro recursion on
the log scale toward the target acceptance rate, and the per-dimension
scales are reset once from the burn-in spread.  Everything is frozen
before the kept part of the chain starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .conjugate import PosteriorSummary
from .distributions import make_rng
from .errors import DomainError

__all__ = [
    "LogTarget",
    "ChainConfig",
    "ChainResult",
    "harm_step",
    "run_chain",
    "summarize_chain",
    "effective_sample_size",
]


@dataclass(frozen=True)
class LogTarget:
    """A log density kernel on the positive orthant (``-inf`` for zero density)."""

    dimension: int
    evaluate: Callable[[np.ndarray], float]
    names: tuple[str, ...] = ()
    initial_point: np.ndarray | None = None

    def __call__(self, point) -> float:
        return self.evaluate(np.asarray(point, dtype=float))


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 100_000
    burn_in: int = 10_000
    thinning: int = 10
    initial_point: Sequence[float] | None = None
    step_scale: Sequence[float] | None = None
    seed: int | np.random.SeedSequence | None = 0
    adapt: bool = True
    target_acceptance: float = 0.35

    def __post_init__(self):
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.iterations < self.thinning:
            raise ValueError("iterations must be >= thinning")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if not 0 < self.target_acceptance < 1:
            raise ValueError("target_acceptance must lie in (0, 1)")

    @classmethod
    def from_kept(cls, kept: int, thinning: int = 10, burn_in: int = 10_000, **kwargs) -> "ChainConfig":
        return cls(iterations=kept * thinning, burn_in=burn_in, thinning=thinning, **kwargs)


@dataclass(frozen=True)
class ChainResult:
    draws: np.ndarray
    acceptance_rate: float
    ess: np.ndarray
    step_scale: np.ndarray
    burn_in_acceptance: float = float("nan")
    names: tuple[str, ...] = field(default=())

    @property
    def n_kept(self) -> int:
        return self.draws.shape[0]


def _propose(current, direction, length, step_scale):
    return current + length * step_scale * direction


def _metropolis(current, current_logp, proposal, target, log_u):
    """Shared accept/reject rule; returns ``(point, logp, accepted)``."""
    if np.any(proposal <= 0):
        return current, current_logp, False
    logp = target.evaluate(proposal)
    if not logp > -math.inf:
        return current, current_logp, False
    delta = logp - current_logp
    if delta >= 0 or log_u < delta:
        return proposal, logp, True
    return current, current_logp, False


def _unit_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal(dim)
    norm = np.linalg.norm(z)
    while norm == 0:
        z = rng.standard_normal(dim)
        norm = np.linalg.norm(z)
    return z / norm


def harm_step(current, target: LogTarget, step_scale, rng: np.random.Generator, current_logp: float | None = None):
    """One hit-and-run Metropolis transition; returns ``(next_point, accepted)``."""
    current = np.asarray(current, dtype=float)
    if np.any(current <= 0):
        raise DomainError("the current point must be strictly positive")
    if current_logp is None:
        current_logp = target.evaluate(current)
    if not math.isfinite(current_logp):
        raise DomainError("the current point must be strictly positive with a finite target value")
    direction = _unit_direction(rng, current.size)
    length = rng.standard_normal()
    log_u = math.log1p(-rng.random())
    proposal = _propose(current, direction, length, np.asarray(step_scale, dtype=float))
    nxt, _, accepted = _metropolis(current, current_logp, proposal, target, log_u)
    return nxt, accepted


def _default_start(target: LogTarget, config: ChainConfig) -> np.ndarray:
    if config.initial_point is not None:
        return np.asarray(config.initial_point, dtype=float)
    if target.initial_point is not None:
        return np.asarray(target.initial_point, dtype=float)
    return np.ones(target.dimension)


def run_chain(target: LogTarget, config: ChainConfig) -> ChainResult:
    """Run burn-in (with adaptation) then keep every ``thinning``-th state.

    Exactly ``iterations // thinning`` draws are kept.  The run is a pure
    function of ``(target, config)``.
    """
    dim = target.dimension
    point = _default_start(target, config)
    if point.shape != (dim,):
        raise ValueError(f"initial point must have shape ({dim},)")
    if np.any(point <= 0) or not math.isfinite(logp := target.evaluate(point)):
        raise DomainError("initial point must be strictly positive with a finite target value")

    if config.step_scale is not None:
        scale = np.broadcast_to(np.asarray(config.step_scale, dtype=float), (dim,)).copy()
    else:
        scale = 0.1 * point
    if np.any(~(scale > 0)):
        raise ValueError("step_scale must be strictly positive")

    rng = make_rng(config.seed)
    target_rate = config.target_acceptance
    log_gain = 0.0

    # burn-in: Welford running moments, one reset of the per-dimension scales at the midpoint
    burn = config.burn_in
    mean = np.zeros(dim)
    m2 = np.zeros(dim)
    count = 0
    burn_accepts = 0
    for t in range(burn):
        direction = _unit_direction(rng, dim)
        length = rng.standard_normal()
        log_u = math.log1p(-rng.random())
        proposal = _propose(point, direction, length, math.exp(log_gain) * scale)
        point, logp, accepted = _metropolis(point, logp, proposal, target, log_u)
        burn_accepts += accepted
        if config.adapt:
            log_gain += (t + 1) ** -0.6 * (float(accepted) - target_rate)
            if t >= burn // 4:
                count += 1
                delta = point - mean
                mean += delta / count
                m2 += delta * (point - mean)
            if t == burn // 2 and count > 10:
                spread = np.sqrt(m2 / (count - 1))
                if np.all(spread > 0):
                    # keep the overall step length, change only its shape across dimensions
                    current = math.exp(log_gain) * scale
                    new_scale = spread * (np.linalg.norm(current) / np.linalg.norm(spread))
                    scale = new_scale
                    log_gain = 0.0
    final_scale = math.exp(log_gain) * scale

    kept = config.iterations // config.thinning
    draws = np.empty((kept, dim))
    accepts = 0
    # random numbers drawn in blocks; a zero-length direction yields a NaN proposal, which is rejected
    block = 4096
    done = 0
    while done < config.iterations:
        m = min(block, config.iterations - done)
        z = rng.standard_normal((m, dim))
        lengths = rng.standard_normal(m)
        log_us = np.log1p(-rng.random(m))
        with np.errstate(invalid="ignore", divide="ignore"):
            moves = (lengths / np.linalg.norm(z, axis=1))[:, None] * z * final_scale
        for i in range(m):
            point, logp, accepted = _metropolis(point, logp, point + moves[i], target, log_us[i])
            accepts += accepted
            done += 1
            if done % config.thinning == 0:
                draws[done // config.thinning - 1] = point
    draws.setflags(write=False)
    ess = np.array([effective_sample_size(draws[:, j]) for j in range(dim)])
    return ChainResult(
        draws=draws,
        acceptance_rate=accepts / config.iterations,
        ess=ess,
        step_scale=final_scale,
        burn_in_acceptance=burn_accepts / burn if burn else float("nan"),
        names=tuple(target.names),
    )


def effective_sample_size(x) -> float:
    """ESS with Geyer's initial positive sequence truncation of the autocorrelations."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    xc = x - x.mean()
    var = float(xc @ xc) / n
    if var <= 0:
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    rho = acov / acov[0]
    # sums of adjacent pairs; stop at the first nonpositive pair
    total = 0.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        total += pair
    tau = -1.0 + 2.0 * total
    return float(n / max(tau, 1.0 / n))


def summarize_chain(result: ChainResult, level: float = 0.95) -> list[PosteriorSummary]:
    """Per-dimension mean, variance, equal-tail empirical interval and Monte Carlo error."""
    if result.n_kept < 2:
        raise ValueError("need at least two kept draws")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    names = result.names or tuple(f"x{j}" for j in range(result.draws.shape[1]))
    out = []
    for j, name in enumerate(names):
        col = result.draws[:, j]
        var = float(np.var(col, ddof=1))
        lo, hi = np.quantile(col, [(1 - level) / 2, (1 + level) / 2])
        mcse = math.sqrt(var / result.ess[j]) if result.ess[j] > 0 else float("nan")
        out.append(PosteriorSummary(name, float(col.mean()), var, float(lo), float(hi), level, mcse))
    return out
