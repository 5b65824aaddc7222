"""Seeded, batch-partitioned Monte Carlo plumbing.

Every estimator in the package counts Bernoulli successes over ``samples``
independent trials.  Trials are cut into fixed-size batches and batch ``k``
always draws from ``SeedSequence(seed).spawn(...)[k]``, so the result
depends only on ``(seed, samples, batch_size)`` and never on how many
worker threads ran the batches.
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np
from scipy.stats import norm

DEFAULT_BATCH = 1 << 14


@dataclasses.dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings.

    ``step`` is only read by path simulators (``None`` means horizon / 1e4).
    ``method`` selects the Brownian path estimator: ``"euler"`` checks the
    boundary on the discrete skeleton only, ``"bridge"`` adds the exact
    Brownian-bridge crossing probability between skeleton points.
    """

    samples: int = 100_000
    seed: int = 0
    step: float | None = None
    batch_size: int = DEFAULT_BATCH
    workers: int = 1
    confidence: float = 0.99
    method: str = "euler"

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.method not in ("euler", "bridge"):
            raise ValueError(f"unknown MC method {self.method!r}")

    def replace(self, **kw) -> "MCConfig":
        return dataclasses.replace(self, **kw)


@dataclasses.dataclass(frozen=True)
class MCEstimate:
    mean: float
    ci_low: float
    ci_high: float
    samples: int
    seed: int
    hits: int = 0

    def __post_init__(self):
        if not (self.ci_low <= self.mean <= self.ci_high):
            raise ValueError("MCEstimate interval must contain the mean")

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.ci_low - slack <= value <= self.ci_high + slack

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def wilson_interval(hits: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    z = norm.ppf(0.5 + confidence / 2.0)
    p = hits / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, float(centre - half)), min(1.0, float(centre + half))


def estimate_from_hits(hits: int, n: int, seed: int, confidence: float = 0.99) -> MCEstimate:
    lo, hi = wilson_interval(hits, n, confidence)
    mean = hits / n
    # guard against rounding at the 0/1 edges
    lo, hi = min(lo, mean), max(hi, mean)
    return MCEstimate(mean=mean, ci_low=lo, ci_high=hi, samples=n, seed=seed, hits=hits)


def batch_sizes(samples: int, batch_size: int) -> list[int]:
    full, rest = divmod(samples, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def batch_generators(seed: int, n_batches: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n_batches)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def run_batches(count_fn: Callable[[np.random.Generator, int], int], cfg: MCConfig) -> MCEstimate:
    """Sum ``count_fn(rng, batch_n)`` over the fixed batch partition of ``cfg.samples``."""
    sizes = batch_sizes(cfg.samples, cfg.batch_size)
    rngs = batch_generators(cfg.seed, len(sizes))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            counts = list(pool.map(count_fn, rngs, sizes))
    else:
        counts = [count_fn(g, m) for g, m in zip(rngs, sizes)]
    return estimate_from_hits(int(sum(counts)), cfg.samples, cfg.seed, cfg.confidence)
