"""Special functions used by the capacity formulas.

Gamma-family functions (Lanczos), digamma, the Pochhammer symbol, modified
Bessel functions of the second kind for orders 0, 1 and 2, a direct power
series for the generalized hypergeometric function and a Mellin-Barnes
quadrature for three fixed Meijer G-function instances.

Everything here is pure and works on Python floats; the complex Gamma used
along the Mellin-Barnes contour is vectorized with numpy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

EULER_GAMMA = 0.57721566490153286061

# Lanczos approximation, g = 7, 9 terms (~15 significant digits).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Largest x with a finite double-precision Gamma(x).
GAMMA_MAX_ARG = 171.6243769563027

# Even Bernoulli numbers B_2 .. B_16 for the digamma asymptotic series.
_BERNOULLI_EVEN = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


class ConvergenceError(ArithmeticError):
    """A series or quadrature stopped before reaching its tolerance.

    ``estimate`` holds the best error estimate available when it gave up.
    """

    def __init__(self, message, estimate=math.nan):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy shared by the series and contour evaluators.

    ``contour_shift`` is the real part of the Mellin-Barnes integration
    line; ``None`` picks the per-instance default in ``MEIJER_DEFAULT_SHIFT``.
    """

    rel_tol: float = 1e-12
    max_terms: int = 10_000
    contour_points: int = 2_000
    contour_shift: float | None = None

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms}")
        if self.contour_points < 16:
            raise ValueError(f"contour_points must be >= 16, got {self.contour_points}")


DEFAULT_CONTROL = SeriesControl()


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------


def _lanczos_sum(x):
    s = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        s += _LANCZOS_COEF[k] / (x + k)
    return s


def gamma_fn(x: float) -> float:
    """Gamma function for real ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"gamma_fn requires x > 0, got {x}")
    if x > GAMMA_MAX_ARG:
        raise OverflowError(f"gamma_fn({x}) exceeds the double range")
    if x < 0.5:
        # Reflection keeps the Lanczos sum in its accurate region.
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    if x == math.floor(x) and x <= 30:
        return float(math.prod(range(1, int(x))))
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    # Split the power so t**(x - 1/2) cannot overflow before exp(-t) applies.
    half = t ** (0.5 * (xm + 0.5))
    return _SQRT_2PI * half * (half * math.exp(-t)) * _lanczos_sum(xm)


def ln_gamma(x: float) -> float:
    """Natural log of Gamma(x) for real ``x > 0``; finite far beyond 171."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"ln_gamma requires x > 0, got {x}")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - ln_gamma(1.0 - x)
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (xm + 0.5) * math.log(t) - t + math.log(_lanczos_sum(xm))


def complex_gamma(z):
    """Gamma on complex input (scalar or ndarray) via Lanczos with reflection."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    left = z.real < 0.5
    if np.any(left):
        zl = z[left]
        out[left] = np.pi / (np.sin(np.pi * zl) * complex_gamma(1.0 - zl))
    right = ~left
    if np.any(right):
        zm = z[right] - 1.0
        t = zm + _LANCZOS_G + 0.5
        s = np.full_like(zm, _LANCZOS_COEF[0])
        for k in range(1, len(_LANCZOS_COEF)):
            s = s + _LANCZOS_COEF[k] / (zm + k)
        out[right] = _SQRT_2PI * np.exp((zm + 0.5) * np.log(t) - t) * s
    return out if out.ndim else complex(out)


def digamma(x: float) -> float:
    """Digamma (psi) function for ``x > 0``.

    Upward recurrence to x >= 10, then the Bernoulli asymptotic series.
    """
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for k, b2k in enumerate(_BERNOULLI_EVEN, start=1):
        series += b2k / (2 * k) * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - series


def pochhammer(x: float, n: int) -> float:
    """Rising factorial (x)_n = x (x+1) ... (x+n-1), with (x)_0 = 1."""
    if n < 0:
        raise ValueError(f"pochhammer needs n >= 0, got {n}")
    out = 1.0
    for k in range(n):
        out *= x + k
    return out


# ---------------------------------------------------------------------------
# Modified Bessel functions of the second kind
# ---------------------------------------------------------------------------

_SMALL_X = 2.0


def _k01_series(x):
    """K0, K1 by their ascending series; accurate for 0 < x <= 2."""
    q = 0.25 * x * x
    log_half = math.log(0.5 * x)
    # k-th terms: q^k/(k!)^2 and q^k/(k!(k+1)!), digammas psi(k+1), psi(k+2)
    term0 = 1.0
    term1 = 1.0
    psi1 = -EULER_GAMMA
    psi2 = 1.0 - EULER_GAMMA
    i0 = i1s = 0.0
    s0 = s1 = 0.0
    for k in range(60):
        i0 += term0
        i1s += term1
        s0 += term0 * psi1
        s1 += term1 * (psi1 + psi2)
        if term0 < 1e-18 * i0:
            break
        term0 *= q / ((k + 1) * (k + 1))
        term1 *= q / ((k + 1) * (k + 2))
        psi1 += 1.0 / (k + 1)
        psi2 += 1.0 / (k + 2)
    k0 = -log_half * i0 + s0
    i1 = 0.5 * x * i1s
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1
    return k0, k1


def _k01_continued_fraction(x):
    """K0, K1 by Steed's evaluation of Temme's continued fraction; x >= 2."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, 10_000):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < 1e-17:
            break
    else:
        raise ConvergenceError(f"Bessel K continued fraction stalled at x={x}")
    h *= a1
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def bessel_k01(x: float) -> tuple[float, float]:
    """Return (K0(x), K1(x)) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"Bessel K requires x > 0, got {x}")
    if x <= _SMALL_X:
        return _k01_series(x)
    return _k01_continued_fraction(x)


def bessel_k(order: int, x: float) -> float:
    """Modified Bessel function of the second kind, order 0, 1 or 2."""
    if order not in (0, 1, 2):
        raise ValueError(f"bessel_k supports orders 0, 1, 2; got {order}")
    k0, k1 = bessel_k01(x)
    if order == 0:
        return k0
    if order == 1:
        return k1
    return k0 + 2.0 * k1 / x


# ---------------------------------------------------------------------------
# Generalized hypergeometric series
# ---------------------------------------------------------------------------


def _is_nonpositive_int(v):
    return v <= 0 and v == math.floor(v)


@dataclass(frozen=True)
class PFQParams:
    upper: tuple[float, ...]
    lower: tuple[float, ...]
    argument: float

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        for b in self.lower:
            if _is_nonpositive_int(b):
                raise ValueError(f"lower parameter {b} is a pole of the pFq series")


def pfq_with_magnitude(params: PFQParams, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Sum the pFq power series; return ``(value, sum_of_abs_terms)``.

    The second number bounds the rounding error of the alternating sum
    (roughly eps times it) and is what the capacity error analysis uses.
    """
    z = params.argument
    if z == 0.0:
        return 1.0, 1.0
    upper, lower = params.upper, params.lower
    # Terms may shrink and then grow again while a lower parameter is still
    # negative, so the stopping rule is only armed past that index.
    armed_from = max([0] + [math.ceil(-b) + 1 for b in lower if b < 0])
    term = 1.0
    total = 1.0
    mag = 1.0
    small_run = 0
    for k in range(ctrl.max_terms):
        num = z
        for a in upper:
            num *= a + k
        den = k + 1.0
        for b in lower:
            den *= b + k
        term *= num / den
        total += term
        mag += abs(term)
        if term == 0.0:
            return total, mag
        if k + 1 >= armed_from and abs(term) <= ctrl.rel_tol * abs(total):
            small_run += 1
            if small_run == 3:
                return total, mag
        else:
            small_run = 0
    raise ConvergenceError(
        f"pFq series did not converge in {ctrl.max_terms} terms",
        estimate=abs(term / total) if total else math.inf,
    )


def pfq(params: PFQParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Generalized hypergeometric function pFq(upper; lower; z) by its series."""
    return pfq_with_magnitude(params, ctrl)[0]


# ---------------------------------------------------------------------------
# Meijer G instances
# ---------------------------------------------------------------------------


class MeijerKind(enum.Enum):
    # G^{3,1}_{1,3}(z | -1; -1, -1, 0)
    C1 = "C1"
    # G^{3,1}_{1,3}(z | -1/2; -1/2, -1/2, -1/2)
    C2 = "C2"
    # G^{4,1}_{2,4}(z | -1, 0; -1, -1, -1, 1)
    C3 = "C3"


# Midway between the rightmost pole of the Gamma(1 - a + s) factor and the
# leftmost pole of the Gamma(b - s) factors.
MEIJER_DEFAULT_SHIFT = {MeijerKind.C1: -1.5, MeijerKind.C2: -1.0, MeijerKind.C3: -1.5}
_MEIJER_POLE_WINDOW = {
    MeijerKind.C1: (-2.0, -1.0),
    MeijerKind.C2: (-1.5, -0.5),
    MeijerKind.C3: (-2.0, -1.0),
}


@dataclass(frozen=True)
class MeijerGInstance:
    kind: MeijerKind
    argument: float

    def __post_init__(self):
        if not self.argument > 0.0:
            raise ValueError(f"Meijer G argument must be > 0, got {self.argument}")


def _meijer_kernel(kind, s):
    """Gamma-ratio part of the Mellin-Barnes integrand (without z**s)."""
    if kind is MeijerKind.C1:
        return complex_gamma(-1.0 - s) ** 2 * complex_gamma(-s) * complex_gamma(2.0 + s)
    if kind is MeijerKind.C2:
        return complex_gamma(-0.5 - s) ** 3 * complex_gamma(1.5 + s)
    # Gamma(1 - s) / Gamma(-s) = -s
    return -s * complex_gamma(-1.0 - s) ** 3 * complex_gamma(2.0 + s)


@dataclass
class MeijerGResult:
    value: float
    error: float
    imag_residue: float
    half_width: float = field(repr=False, default=0.0)


def meijer_g_detailed(
    instance: MeijerGInstance, ctrl: SeriesControl = DEFAULT_CONTROL, target: float = 1e-8
) -> MeijerGResult:
    """Meijer G by trapezoidal quadrature along Re(s) = shift.

    The integrand is analytic in a strip around the line and decays like
    exp(-2 pi |Im s|), so the trapezoidal rule converges geometrically; the
    error estimate is the difference against the half-resolution rule plus
    the rounding floor.
    """
    kind = instance.kind
    shift = MEIJER_DEFAULT_SHIFT[kind] if ctrl.contour_shift is None else ctrl.contour_shift
    lo, hi = _MEIJER_POLE_WINDOW[kind]
    if not lo < shift < hi:
        raise ValueError(f"contour shift {shift} must lie in ({lo}, {hi}) for {kind.name}")
    log_z = math.log(instance.argument)

    def integrand(t):
        s = shift + 1j * np.asarray(t, dtype=float)
        return _meijer_kernel(kind, s) * np.exp(s * log_z)

    peak = abs(integrand(0.0))
    # Walk out until the envelope has fallen far below the tolerance.
    half_width = 1.0
    cutoff = 1e-3 * ctrl.rel_tol * peak
    while half_width < 200.0:
        tail = np.abs(integrand(np.array([half_width, -half_width]))).max()
        if tail < cutoff:
            break
        half_width += 1.0
    else:
        raise ConvergenceError(f"Meijer G {kind.name} integrand did not decay")

    n = ctrl.contour_points | 1  # odd, so the half rule reuses every other node
    t = np.linspace(-half_width, half_width, n)
    h = t[1] - t[0]
    f = integrand(t)
    fine = h * f.sum()
    coarse = 2.0 * h * f[::2].sum()
    # (1/2 pi i) ds with ds = i dt
    value = fine / (2.0 * math.pi)
    err = abs(fine - coarse) / (2.0 * math.pi)
    err += 1e-15 * h * np.abs(f).sum() / (2.0 * math.pi) * math.sqrt(n)
    result = MeijerGResult(float(value.real), float(err), float(abs(value.imag)), half_width)
    if err > target * abs(result.value):
        raise ConvergenceError(
            f"Meijer G {kind.name}({instance.argument}) reached relative error "
            f"{err / abs(result.value):.3g} > {target:g}",
            estimate=err,
        )
    return result


def meijer_g(instance: MeijerGInstance, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Value of one of the three fixed Meijer G instances."""
    return meijer_g_detailed(instance, ctrl).value
