"""Statistics of the equivalent end-to-end channel A = sum_i |h_i| |g_i|.

The magnitudes |h_i|, |g_i| are Rayleigh with density x exp(-x^2/2), so
E|h| = sqrt(pi/2) and E|h|^2 = 2.  Under that convention a single product
|h||g| has density x K0(x), mean pi/2 and variance 4 (1 - pi^2/16).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .specfun import bessel_k01, gamma_fn, ln_gamma

# Variance of a single double-Rayleigh product under E|h|^2 = 2.
_UNIT_VARIANCE = 4.0 * (1.0 - math.pi**2 / 16.0)


@dataclass(frozen=True)
class SystemConfig:
    """Number of reflecting units and transmit SNR (dB)."""

    n_units: int
    rho_t_db: float

    def __post_init__(self):
        if int(self.n_units) != self.n_units or self.n_units < 1:
            raise ValueError(f"n_units must be a positive integer, got {self.n_units}")
        if not math.isfinite(self.rho_t_db):
            raise ValueError(f"rho_t_db must be finite, got {self.rho_t_db}")

    @property
    def rho_t_linear(self) -> float:
        return db_to_linear(self.rho_t_db)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class GammaFitParams:
    """Parameters of the Gamma-shaped (first Laguerre term) density of A.

    ``a`` is the shape minus one, ``b`` the scale; ``k1`` is E[A] and ``k2``
    the second fit constant, 4 N (1 - pi^2/16).
    """

    a: float
    b: float
    k1: float
    k2: float

    @property
    def shape(self) -> float:
        return self.a + 1.0


def fit_params(cfg: SystemConfig) -> GammaFitParams:
    n = cfg.n_units
    k1 = n * math.pi / 2.0
    k2 = 4.0 * n * (1.0 - math.pi**2 / 16.0)
    return GammaFitParams(a=k1 * k1 / k2 - 1.0, b=k2 / k1, k1=k1, k2=k2)


def moments(cfg: SystemConfig) -> tuple[float, float]:
    """Exact mean and variance of A: (N pi/2, 4 N (1 - pi^2/16))."""
    n = cfg.n_units
    return n * math.pi / 2.0, n * _UNIT_VARIANCE


def _check_nonneg(x):
    if x < 0:
        raise ValueError(f"density argument must be >= 0, got {x}")


def pdf_a(params: GammaFitParams, x: float) -> float:
    """Gamma-fit density x^a exp(-x/b) / (b^(a+1) Gamma(a+1))."""
    _check_nonneg(x)
    a, b = params.a, params.b
    if x == 0.0:
        # a > 0 for every N >= 1 (a ~ 1.61 N - 1)
        return 0.0
    if a + 1.0 < 150.0:
        try:
            return x**a * math.exp(-x / b) / (b ** (a + 1.0) * gamma_fn(a + 1.0))
        except OverflowError:
            pass
    return math.exp(a * math.log(x) - x / b - (a + 1.0) * math.log(b) - ln_gamma(a + 1.0))


def cdf_a(params: GammaFitParams, x):
    """CDF of the Gamma fit (regularized lower incomplete Gamma)."""
    return gammainc(params.a + 1.0, np.asarray(x, dtype=float) / params.b)


def pdf_a_single(x: float) -> float:
    """Exact N = 1 (double-Rayleigh) density x K0(x)."""
    _check_nonneg(x)
    if x == 0.0:
        return 0.0
    return x * bessel_k01(x)[0]


def cdf_a_single(x: float) -> float:
    """Exact N = 1 CDF, 1 - x K1(x)."""
    _check_nonneg(x)
    if x == 0.0:
        return 0.0
    return 1.0 - x * bessel_k01(x)[1]


def rayleigh_magnitudes(rng: np.random.Generator, size) -> np.ndarray:
    """Inverse-transform Rayleigh draws with density x exp(-x^2/2)."""
    # 1 - U lies in (0, 1], keeping the log finite.
    return np.sqrt(-2.0 * np.log(1.0 - rng.random(size)))


def sample_a_batch(n_units: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` exact samples of A by inverse-transform Rayleigh magnitudes."""
    total = np.zeros(size)
    for _ in range(n_units):
        h = rayleigh_magnitudes(rng, size)
        g = rayleigh_magnitudes(rng, size)
        total += h * g
    return total


def sample_a(cfg: SystemConfig, rng: np.random.Generator) -> float:
    """One exact draw of A."""
    mags = rayleigh_magnitudes(rng, 2 * cfg.n_units)
    return float(np.dot(mags[0::2], mags[1::2]))
