"""Seeded Monte Carlo estimates built on exact draws of A.

Samples are grouped in fixed-size blocks.  Block ``k`` always draws from the
PCG64 stream keyed by ``SeedSequence(seed, spawn_key=(k,))`` and the per-block
partial results are merged in block order, so the output depends on
``(seed, samples)`` only and never on how many workers produced the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .capacity import CapacityResult, Method
from .channel import SystemConfig, moments, sample_a_batch

BLOCK_SIZE = 1 << 14
LN2 = math.log(2.0)


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 0
    workers: int = 1
    histogram_bins: int = 200
    histogram_max: float | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.histogram_bins < 2:
            raise ValueError(f"histogram_bins must be >= 2, got {self.histogram_bins}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class McEstimate:
    point: float
    std_err: float
    samples_used: int

    def as_capacity(self) -> CapacityResult:
        return CapacityResult(self.point, Method.MONTE_CARLO, self.std_err)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    samples_used: int


@dataclass(frozen=True)
class PdfEstimate:
    edges: np.ndarray
    density: np.ndarray
    std_err: np.ndarray
    samples_used: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


def block_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _block_sizes(samples):
    full, rest = divmod(samples, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _map_blocks(cfg, mc, fn):
    """Apply ``fn(draws)`` to every block; results come back in block order."""
    sizes = _block_sizes(mc.samples)

    def run(index):
        return fn(sample_a_batch(cfg.n_units, block_rng(mc.seed, index), sizes[index]))

    if mc.workers == 1 or len(sizes) == 1:
        return [run(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=mc.workers) as pool:
        return list(pool.map(run, range(len(sizes))))


def draw_samples(cfg: SystemConfig, mc: McConfig) -> np.ndarray:
    """All ``mc.samples`` draws of A, concatenated in block order."""
    return np.concatenate(_map_blocks(cfg, mc, lambda a: a))


def estimate_ec(cfg: SystemConfig, mc: McConfig) -> McEstimate:
    """Sample mean of log2(1 + rho_t A^2) and its standard error."""
    rho = cfg.rho_t_linear

    def block_stats(a):
        v = np.log1p(rho * a * a) / LN2
        m = float(v.mean())
        return v.size, m, float(np.sum((v - m) ** 2))

    n, mean, m2 = 0, 0.0, 0.0
    # Chan et al. pairwise merge, applied in fixed block order.
    for nb, mb, m2b in _map_blocks(cfg, mc, block_stats):
        delta = mb - mean
        tot = n + nb
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    return McEstimate(mean, se, n)


def sample_moments(cfg: SystemConfig, mc: McConfig) -> MomentEstimate:
    """Empirical mean and variance of A with their standard errors."""
    shift = moments(cfg)[0]

    def power_sums(a):
        d = a - shift
        d2 = d * d
        return np.array([d.sum(), d2.sum(), (d2 * d).sum(), (d2 * d2).sum()])

    sums = np.zeros(4)
    for s in _map_blocks(cfg, mc, power_sums):
        sums += s
    n = mc.samples
    r1, r2, r3, r4 = sums / n
    c2 = r2 - r1 * r1
    c4 = r4 - 4 * r1 * r3 + 6 * r1 * r1 * r2 - 3 * r1**4
    variance = c2 * n / (n - 1) if n > 1 else 0.0
    return MomentEstimate(
        mean=shift + r1,
        variance=variance,
        mean_se=math.sqrt(c2 / n),
        variance_se=math.sqrt(max(c4 - c2 * c2, 0.0) / n),
        samples_used=n,
    )


def default_histogram_max(cfg: SystemConfig) -> float:
    mean, var = moments(cfg)
    return mean + 8.0 * math.sqrt(var)


def estimate_pdf(cfg: SystemConfig, mc: McConfig) -> PdfEstimate:
    """Histogram density of A on ``[0, histogram_max]``.

    Densities are normalized by the total sample count, so mass falling past
    the upper edge shows up as a total slightly below one.
    """
    upper = mc.histogram_max if mc.histogram_max is not None else default_histogram_max(cfg)
    edges = np.linspace(0.0, upper, mc.histogram_bins + 1)
    counts = np.zeros(mc.histogram_bins, dtype=np.int64)
    for c in _map_blocks(cfg, mc, lambda a: np.histogram(a, bins=edges)[0]):
        counts += c
    n = mc.samples
    width = np.diff(edges)
    p = counts / n
    return PdfEstimate(edges, p / width, np.sqrt(p * (1.0 - p) / n) / width, n)


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov statistic of ``samples`` against a vectorized CDF."""
    x = np.sort(samples)
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    hi = np.arange(1, n + 1) / n - f
    lo = f - np.arange(n) / n
    return float(max(hi.max(), lo.max()))
