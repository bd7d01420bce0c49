"""Scalar special-function kernel: Jacobi/Legendre polynomials and the gamma function.

All routines are pure and reentrant.  Polynomials are evaluated by forward
three-term recurrence, which is stable on [-1, 1] for every parameter pair
with alpha, beta > -1.  Inputs that overshoot the interval by rounding
(|x| <= 1 + 1e-12) are clamped; anything further out is rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "JacobiParams",
    "jacobi_p",
    "jacobi_table",
    "legendre_p",
    "legendre_table",
    "gamma_fn",
    "gamma_ratio",
]

_X_OVERSHOOT = 1e-12
_GAMMA_MAX_ARG = 170.0

# Lanczos approximation, g = 7 with 9 coefficients.  Relative accuracy is
# a few ulp over the positive axis, well inside the 1e-13 budget.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
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


@dataclass(frozen=True)
class JacobiParams:
    """Exponent pair (alpha, beta) of the Jacobi weight (1-x)^alpha (1+x)^beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1.0 and self.beta > -1.0):
            raise ValueError(
                "Jacobi parameters require alpha > -1 and beta > -1, got "
                f"({self.alpha}, {self.beta})"
            )


def _clamp_unit(x):
    """Clamp |x| <= 1 + 1e-12 onto [-1, 1]; reject anything further out."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1.0 + _X_OVERSHOOT):
        raise ValueError("argument outside [-1 - 1e-12, 1 + 1e-12]")
    return np.clip(arr, -1.0, 1.0)


def jacobi_table(nmax: int, params: JacobiParams, x) -> np.ndarray:
    """Values of P_0..P_nmax at x, stacked along the first axis.

    Returns an array of shape (nmax + 1,) + shape(x).
    """
    if nmax < 0:
        raise ValueError("degree must be nonnegative")
    a, b = params.alpha, params.beta
    xs = _clamp_unit(x)
    out = np.empty((nmax + 1,) + xs.shape, dtype=float)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = 0.5 * (a - b + (a + b + 2.0) * xs)
    for n in range(2, nmax + 1):
        c1 = 2.0 * n * (n + a + b) * (2.0 * n + a + b - 2.0)
        c2 = (2.0 * n + a + b - 1.0) * (a * a - b * b)
        c3 = (2.0 * n + a + b - 2.0) * (2.0 * n + a + b - 1.0) * (2.0 * n + a + b)
        c4 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * (2.0 * n + a + b)
        out[n] = ((c2 + c3 * xs) * out[n - 1] - c4 * out[n - 2]) / c1
    return out


def jacobi_p(n: int, params: JacobiParams, x):
    """Jacobi polynomial P_n^{alpha,beta}(x) for x in [-1, 1]."""
    tab = jacobi_table(n, params, x)
    val = tab[n]
    return float(val) if val.ndim == 0 else val


def legendre_table(nmax: int, x) -> np.ndarray:
    """Values of the Legendre polynomials P_0..P_nmax at x."""
    if nmax < 0:
        raise ValueError("degree must be nonnegative")
    xs = _clamp_unit(x)
    out = np.empty((nmax + 1,) + xs.shape, dtype=float)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = xs
    for n in range(2, nmax + 1):
        out[n] = ((2.0 * n - 1.0) * xs * out[n - 1] - (n - 1.0) * out[n - 2]) / n
    return out


def legendre_p(n: int, x):
    """Legendre polynomial P_n(x); the (alpha, beta) = (0, 0) Jacobi case."""
    tab = legendre_table(n, x)
    val = tab[n]
    return float(val) if val.ndim == 0 else val


def _lanczos_positive(x: float) -> float:
    # valid for x >= 0.5
    acc = _LANCZOS_COEFFS[0]
    for i in range(1, len(_LANCZOS_COEFFS)):
        acc += _LANCZOS_COEFFS[i] / (x - 1.0 + i)
    t = x - 0.5 + _LANCZOS_G
    return math.sqrt(2.0 * math.pi) * t ** (x - 0.5) * math.exp(-t) * acc


def gamma_fn(x: float) -> float:
    """Euler gamma function on the real line, |x| <= 170.

    Raises ValueError at the poles (nonpositive integers) and OverflowError
    outside the guarded range.
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"gamma pole at nonpositive integer x={x}")
    if abs(x) > _GAMMA_MAX_ARG:
        raise OverflowError(f"gamma argument |x|={abs(x)} exceeds guard {_GAMMA_MAX_ARG}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * _lanczos_positive(1.0 - x))
    return _lanczos_positive(x)


def _gamma_sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    # sign alternates between consecutive poles on the negative axis
    return -1.0 if math.ceil(-x) % 2 else 1.0


def gamma_ratio(num: float, den: float) -> float:
    """Gamma(num) / Gamma(den) without overflow, via log-gamma.

    A pole in the denominator yields 0 (the reciprocal gamma is entire);
    a pole in the numerator raises.
    """
    num = float(num)
    den = float(den)
    if den <= 0.0 and den == math.floor(den):
        return 0.0
    if num <= 0.0 and num == math.floor(num):
        raise ValueError(f"gamma pole at nonpositive integer x={num}")
    sign = _gamma_sign(num) * _gamma_sign(den)
    return sign * math.exp(math.lgamma(num) - math.lgamma(den))
