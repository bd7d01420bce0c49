"""Riemann-Liouville fractional derivatives of the basis families.

Closed forms cover the two basis families (Legendre polynomials and the
temporal fractional bases) plus the power/Taylor building blocks used by
manufactured solutions.  ``rl_oracle`` is the independent brute-force check:
it discretizes the defining integral with a Gauss-Jacobi rule that absorbs
the kernel singularity and applies Richardson-extrapolated central
differences for the outer integer derivative.

Sign conventions follow the standard definitions: the left operator carries
(d/dx)^n, the right operator (-d/dx)^n, applied to the fractional integral
of order n - sigma with n = ceil(sigma).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_jacobi_rule
from .specfun import JacobiParams, gamma_ratio, jacobi_table, legendre_p

__all__ = [
    "Side",
    "BasisKind",
    "FracOrder",
    "SeriesConvergenceError",
    "OracleResult",
    "frac_deriv_legendre",
    "frac_deriv_temporal_basis",
    "frac_deriv_power",
    "frac_deriv_taylor",
    "sine_series",
    "rl_oracle",
]

_ENDPOINT_TOL = 1e-14
DEFAULT_SERIES_TOL = 1e-13
DEFAULT_MAX_TERMS = 20000


class Side(enum.Enum):
    """Terminal of the fractional operator: LEFT integrates from a, RIGHT from b."""

    LEFT = enum.auto()
    RIGHT = enum.auto()


class BasisKind(enum.Enum):
    """Temporal family selector: TRIAL vanishes at t=0, TEST at t=T."""

    TRIAL = enum.auto()
    TEST = enum.auto()


@dataclass(frozen=True)
class FracOrder:
    """Half-order sigma in (0, 1) as it appears in the weak form."""

    sigma: float

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0):
            raise ValueError(f"half-order must lie in (0, 1), got {self.sigma}")


class SeriesConvergenceError(RuntimeError):
    """Raised when a reflection/Taylor series fails to meet tolerance."""


def _half_order(sigma) -> float:
    return sigma.sigma if isinstance(sigma, FracOrder) else float(sigma)


def frac_deriv_legendre(n: int, sigma, side: Side, x):
    """Fractional derivative of order sigma in (0,1) of the Legendre P_n.

    Left:  Gamma(n+1)/Gamma(n-s+1) (1+x)^(-s) P_n^{s,-s}(x)
    Right: Gamma(n+1)/Gamma(n-s+1) (1-x)^(-s) P_n^{-s,s}(x)
    """
    s = _half_order(sigma)
    if n < 0:
        raise ValueError("degree must be nonnegative")
    xs = np.asarray(x, dtype=float)
    if side is Side.LEFT:
        if np.any(1.0 + xs <= _ENDPOINT_TOL):
            raise ValueError("left fractional derivative is singular at x = -1")
        params = JacobiParams(s, -s)
        fac = (1.0 + xs) ** (-s)
    else:
        if np.any(1.0 - xs <= _ENDPOINT_TOL):
            raise ValueError("right fractional derivative is singular at x = +1")
        params = JacobiParams(-s, s)
        fac = (1.0 - xs) ** (-s)
    val = gamma_ratio(n + 1.0, n - s + 1.0) * fac * jacobi_table(n, params, xs)[n]
    return float(val) if np.ndim(val) == 0 else val


def frac_deriv_temporal_basis(n: int, tau, kind: BasisKind, eta):
    """Order-tau derivative of the temporal basis member n >= 1.

    Both families collapse onto the same scaled Legendre polynomial,
    Gamma(n+tau)/Gamma(n) * P_{n-1}(eta): the TRIAL member is
    differentiated from the left terminal, the TEST member from the right.
    """
    t = _half_order(tau)
    if n < 1:
        raise ValueError("temporal basis index starts at 1")
    if not (0.0 < t < 1.0):
        raise ValueError(f"temporal half-order must lie in (0, 1), got {t}")
    if kind not in (BasisKind.TRIAL, BasisKind.TEST):
        raise ValueError(f"unknown basis kind {kind!r}")
    val = gamma_ratio(n + t, float(n)) * legendre_p(n - 1, eta)
    return float(val) if np.ndim(val) == 0 else val


def frac_deriv_power(
    p: float,
    sigma: float,
    side: Side,
    x,
    tol: float = DEFAULT_SERIES_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
):
    """Fractional derivative of (1+x)^p, order sigma in (0, 2).

    The left side is the exact power rule.  The right side reflects to the
    left terminal and expands (2 - (1+y))^p binomially; each term then
    obeys the power rule.  The expansion converges geometrically with ratio
    (1-x)/2, so the term budget grows as x approaches -1.
    """
    p = float(p)
    sigma = float(sigma)
    if p <= -1.0:
        raise ValueError(f"power exponent must exceed -1, got {p}")
    if not (0.0 < sigma < 2.0):
        raise ValueError(f"order must lie in (0, 2), got {sigma}")
    if p - sigma <= -1.0:
        raise ValueError(f"p - sigma = {p - sigma} not integrable near the terminal")
    xs = np.asarray(x, dtype=float)
    if side is Side.LEFT:
        val = gamma_ratio(p + 1.0, p + 1.0 - sigma) * (1.0 + xs) ** (p - sigma)
        return float(val) if np.ndim(val) == 0 else val

    one_minus = 1.0 - xs
    if np.any(one_minus <= _ENDPOINT_TOL):
        raise ValueError("right fractional derivative is singular at x = +1")
    total = np.zeros_like(one_minus)
    # c_k = binom(p, k) (-1)^k 2^(p-k); g_k = Gamma(k+1)/Gamma(k+1-sigma)
    c = 2.0**p
    g = gamma_ratio(1.0, 1.0 - sigma)
    pw = one_minus ** (-sigma)
    settle = int(math.ceil(p)) + 2
    for k in range(max_terms):
        term = c * g * pw
        total = total + term
        if k >= settle:
            scale = np.maximum(np.abs(total), 1e-300)
            if np.all(np.abs(term) <= tol * scale):
                return float(total) if np.ndim(total) == 0 else total
        c *= -(p - k) / (2.0 * (k + 1.0))
        if c == 0.0:  # integer p: the expansion terminates exactly
            return float(total) if np.ndim(total) == 0 else total
        g *= (k + 1.0) / (k + 1.0 - sigma)
        pw = pw * one_minus
    raise SeriesConvergenceError(
        f"reflection series for (1+x)^{p} at order {sigma} did not reach "
        f"tol={tol} within {max_terms} terms"
    )


def frac_deriv_taylor(series_coeffs, sigma: float, side: Side, x, tol: float = DEFAULT_SERIES_TOL):
    """Termwise fractional derivative of sum_j c_j (1+x)^(p_j).

    ``series_coeffs`` is a sequence of (exponent, coefficient) pairs with
    exponents > -1.  Terms run through ``frac_deriv_power``; accumulation
    stops early once contributions stay below tol relative to the sum.
    """
    sigma = float(sigma)
    xs = np.asarray(x, dtype=float)
    total = np.zeros_like(xs)
    tiny_streak = 0
    for pexp, coeff in series_coeffs:
        if coeff == 0.0:
            continue
        term = coeff * frac_deriv_power(float(pexp), sigma, side, xs, tol=tol)
        total = total + term
        scale = np.maximum(np.abs(total), 1e-300)
        if np.all(np.abs(term) <= tol * scale):
            tiny_streak += 1
            if tiny_streak >= 2:
                break
        else:
            tiny_streak = 0
    return float(total) if np.ndim(total) == 0 else total


def sine_series(n_freq: int, coeff_floor: float = 1e-18):
    """(exponent, coefficient) expansion of sin(n pi (1+x)) about x = -1.

    Truncated once the coefficients can no longer contribute above
    ``coeff_floor`` anywhere on [-1, 1].
    """
    w = n_freq * math.pi
    terms = []
    c = w
    j = 0
    while True:
        pexp = 2 * j + 1
        terms.append((float(pexp), c))
        if abs(c) * 2.0**pexp < coeff_floor and j > 2:
            return terms
        c *= -(w * w) / ((2 * j + 2) * (2 * j + 3))
        j += 1
        if j > 200:
            raise SeriesConvergenceError("sine expansion failed to decay")


@dataclass(frozen=True)
class OracleResult:
    """Value and accuracy report of one brute-force derivative evaluation."""

    value: float
    error_estimate: float

    @property
    def flagged(self) -> bool:
        return self.error_estimate > 1e-6


def _frac_integral_smooth_factor(g, sigma, side, terminal_exponent, quad_order):
    """Split I^rho g(y) = W(y)^(rho+lam) * G(y) with W the scaled terminal distance.

    rho = ceil(sigma) - sigma; lam is the known algebraic exponent of g at
    its terminal, absorbed into the Gauss-Jacobi rule so G stays smooth.
    W(y) = (1+y)/2 for the left terminal, (1-y)/2 for the right.
    """
    n_int = int(math.ceil(sigma))
    rho = n_int - sigma
    lam = float(terminal_exponent)
    inv_gamma = 1.0 / math.gamma(rho)
    if side is Side.LEFT:
        rule = gauss_jacobi_rule(quad_order, rho - 1.0, lam)

        def G(y):
            s = -1.0 + (1.0 + y) * (1.0 + rule.nodes) / 2.0
            gt = np.asarray(g(s), dtype=float)
            if lam != 0.0:
                gt = gt / (1.0 + s) ** lam
            return inv_gamma * float(rule.weights @ gt)

    else:
        rule = gauss_jacobi_rule(quad_order, lam, rho - 1.0)

        def G(y):
            s = 1.0 - (1.0 - y) * (1.0 - rule.nodes) / 2.0
            gt = np.asarray(g(s), dtype=float)
            if lam != 0.0:
                gt = gt / (1.0 - s) ** lam
            return inv_gamma * float(rule.weights @ gt)

    return n_int, rho + lam, G


def rl_oracle(
    g,
    sigma: float,
    side: Side,
    x: float,
    h: float | None = None,
    terminal_exponent: float = 0.0,
    quad_order: int = 96,
) -> OracleResult:
    """Brute-force Riemann-Liouville derivative on (-1, 1) from the definition.

    The fractional integral F = I^(n - sigma) g is evaluated by a
    Gauss-Jacobi rule that absorbs the kernel singularity (and, optionally,
    a known algebraic factor of g at its terminal), written as
    F(y) = W(y)^c G(y) with G smooth.  The outer n-th derivative applies
    Richardson-extrapolated central differences (steps h and h/2) to G;
    powers of W are differentiated exactly through the product rule, which
    keeps the oracle accurate arbitrarily close to the terminal.
    """
    sigma = float(sigma)
    if not (0.0 < sigma < 2.0) or abs(sigma - 1.0) < 1e-12:
        raise ValueError(f"oracle order must lie in (0,2) excluding 1, got {sigma}")
    x = float(x)
    dist = min(1.0 + x, 1.0 - x)
    if dist <= 0.0:
        raise ValueError("evaluation point must be strictly interior")
    n_int, cexp, G = _frac_integral_smooth_factor(g, sigma, side, terminal_exponent, quad_order)
    if h is None:
        h = 5e-3
    h = min(h, dist / 8.0)

    g0 = G(x)
    gp1, gm1 = G(x + h), G(x - h)
    gp2, gm2 = G(x + h / 2.0), G(x - h / 2.0)
    d1a = (gp1 - gm1) / (2.0 * h)
    d1b = (gp2 - gm2) / h
    d1 = (4.0 * d1b - d1a) / 3.0
    d1_est = abs(d1b - d1a) / 3.0

    w0 = (1.0 + x) / 2.0 if side is Side.LEFT else (1.0 - x) / 2.0
    dw = 0.5 if side is Side.LEFT else -0.5
    if n_int == 1:
        value = cexp * dw * w0 ** (cexp - 1.0) * g0 + w0**cexp * d1
        if side is Side.RIGHT:
            value = -value
        est = w0**cexp * d1_est + 1e-15 * (abs(g0) + 1.0) / h
    else:
        d2a = (gp1 - 2.0 * g0 + gm1) / (h * h)
        d2b = (gp2 - 2.0 * g0 + gm2) / (h * h / 4.0)
        d2 = (4.0 * d2b - d2a) / 3.0
        d2_est = abs(d2b - d2a) / 3.0
        value = (
            cexp * (cexp - 1.0) * dw * dw * w0 ** (cexp - 2.0) * g0
            + 2.0 * cexp * dw * w0 ** (cexp - 1.0) * d1
            + w0**cexp * d2
        )
        est = (
            abs(cexp) * w0 ** (cexp - 1.0) * d1_est
            + w0**cexp * d2_est
            + 1e-15 * (abs(g0) + 1.0) / (h * h)
        )
    return OracleResult(value=float(value), error_estimate=float(est))
