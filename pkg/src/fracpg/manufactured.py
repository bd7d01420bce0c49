"""Exact solutions and the forcings obtained by applying the strong operator.

Two families are supplied: a finite-regularity product of fractional powers
whose value at the right boundary cancels by construction, and a smooth
sine solution.  Forcings are evaluated pointwise-analytically (power rule
on the left, reflected binomial/Taylor series on the right) so the error
floor of the forcing stays far below the smallest discretization errors.

The spatial factor of the first family tensorizes over dimensions for
d > 1; quantitative reference data exists only for d = 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fraccalc import (
    DEFAULT_MAX_TERMS,
    DEFAULT_SERIES_TOL,
    SeriesConvergenceError,
    Side,
    frac_deriv_power,
    frac_deriv_taylor,
    sine_series,
)
from .pg_assembly import ProblemSpec, SeparableForcingTerm
from .specfun import gamma_ratio

__all__ = [
    "CaseKind",
    "ManufacturedCase",
    "case_i",
    "case_ii",
    "exact_solution",
    "exact_time_factor",
    "exact_space_factor",
    "exact_time_frac_deriv",
    "exact_space_frac_deriv",
    "forcing_strong",
    "forcing_terms",
]


class CaseKind(enum.Enum):
    CASE_I = "case1"
    CASE_II = "case2"


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact-solution family with its exponents / frequency.

    CASE_I:  u = t^p1 [ (1+x)^p2 - eps (1+x)^p3 ],  eps = 2^(p2-p3)
    CASE_II: u = t^p1 sin(n pi (1+x))
    """

    kind: CaseKind
    p1: float = 5.05
    p2: float = 5.75
    p3: float = 5.2
    n_freq: int = 1

    def __post_init__(self):
        if self.kind is CaseKind.CASE_I and not (self.p2 > self.p3 > 0.0):
            raise ValueError("spatial exponents must satisfy p2 > p3 > 0")
        if self.kind is CaseKind.CASE_II and self.n_freq < 1:
            raise ValueError("sine frequency must be a positive integer")

    @property
    def eps(self) -> float:
        return 2.0 ** (self.p2 - self.p3)


def case_i(p1: float = 5.05, p2: float = 5.75, p3: float = 5.2) -> ManufacturedCase:
    """Finite-regularity family; defaults are p1=5+1/20, p2=5+3/4, p3=5+1/5."""
    return ManufacturedCase(kind=CaseKind.CASE_I, p1=p1, p2=p2, p3=p3)


def case_ii(p1: float = 5.05, n_freq: int = 1) -> ManufacturedCase:
    """Smooth sine family."""
    return ManufacturedCase(kind=CaseKind.CASE_II, p1=p1, n_freq=n_freq)


def exact_time_factor(case: ManufacturedCase, t):
    return np.asarray(t, dtype=float) ** case.p1


def exact_space_factor(case: ManufacturedCase, xi):
    """Spatial factor on the reference interval [-1, 1]."""
    xi = np.asarray(xi, dtype=float)
    if case.kind is CaseKind.CASE_I:
        return (1.0 + xi) ** case.p2 - case.eps * (1.0 + xi) ** case.p3
    return np.sin(case.n_freq * math.pi * (1.0 + xi))


def exact_solution(case: ManufacturedCase, point):
    """u_ext at (t, x_1, ..., x_d); spatial factors multiply across dimensions."""
    t = np.asarray(point[0], dtype=float)
    val = exact_time_factor(case, t)
    for x in point[1:]:
        val = val * exact_space_factor(case, x)
    return float(val) if np.ndim(val) == 0 else val


def exact_time_frac_deriv(case: ManufacturedCase, order: float, t):
    """Left fractional derivative (terminal t=0) of t^p1 by the power rule."""
    t = np.asarray(t, dtype=float)
    val = gamma_ratio(case.p1 + 1.0, case.p1 + 1.0 - order) * t ** (case.p1 - order)
    return float(val) if np.ndim(val) == 0 else val


def exact_space_frac_deriv(case: ManufacturedCase, order: float, side: Side, xi,
                           tol: float = DEFAULT_SERIES_TOL, max_terms: int = DEFAULT_MAX_TERMS):
    """Fractional derivative of the reference spatial factor, order in (0, 2).

    CASE_I left is the exact two-term power rule.  CASE_I right expands both
    powers about the right terminal with the constant terms cancelling
    analytically (the factor vanishes at x = 1), which avoids catastrophic
    cancellation next to the singular endpoint.  CASE_II differentiates the
    sine expansion termwise on either side.
    """
    xi = np.asarray(xi, dtype=float)
    if case.kind is CaseKind.CASE_II:
        series = sine_series(case.n_freq)
        if side is Side.LEFT:
            val = frac_deriv_taylor(series, order, Side.LEFT, xi, tol=tol)
        else:
            # reflection: sin(n pi (1+x)) -> -sin(n pi (1+y)) under y = -x
            val = -frac_deriv_taylor(series, order, Side.LEFT, -xi, tol=tol)
        return float(val) if np.ndim(val) == 0 else val

    p2, p3, eps = case.p2, case.p3, case.eps
    if side is Side.LEFT:
        val = (
            gamma_ratio(p2 + 1.0, p2 + 1.0 - order) * (1.0 + xi) ** (p2 - order)
            - eps * gamma_ratio(p3 + 1.0, p3 + 1.0 - order) * (1.0 + xi) ** (p3 - order)
        )
        return float(val) if np.ndim(val) == 0 else val

    one_minus = 1.0 - xi
    if np.any(one_minus <= 1e-14):
        raise ValueError("right fractional derivative is singular at x = +1")
    total = np.zeros_like(one_minus)
    # combined reflected expansion sum_k a_k (1-x)^k of the spatial factor;
    # a_0 = 0 by the choice of eps, so the sum starts at k = 1
    c2 = 2.0**p2
    c3 = eps * 2.0**p3
    g = gamma_ratio(1.0, 1.0 - order)  # Gamma(k+1)/Gamma(k+1-order) at k = 0
    pw = one_minus ** (1.0 - order)
    settle = int(math.ceil(p2)) + 2
    for k in range(1, max_terms):
        c2 *= -(p2 - (k - 1.0)) / (2.0 * k)
        c3 *= -(p3 - (k - 1.0)) / (2.0 * k)
        g *= k / (k - order)
        term = (c2 - c3) * g * pw
        total = total + term
        if k >= settle:
            scale = np.maximum(np.abs(total), 1e-300)
            if np.all(np.abs(term) <= tol * scale):
                return float(total) if np.ndim(total) == 0 else total
        pw = pw * one_minus
    raise SeriesConvergenceError(
        f"combined reflection series did not reach tol={tol} within {max_terms} terms"
    )


def _operator_spatial_terms(case, spec, j):
    """Per-dimension (coefficient, fn, weights) derivative pieces of dim j."""
    out = []
    mu2 = 2.0 * spec.mu[j]
    nu2 = 2.0 * spec.nu[j]
    a, b = spec.intervals[j]
    jac = (b - a) / 2.0

    def deriv_fn(order, side):
        scale = jac ** (-order)

        def fn(x):
            xi = 2.0 * (np.asarray(x, dtype=float) - a) / (b - a) - 1.0
            return scale * exact_space_frac_deriv(case, order, side, xi)

        return fn

    if spec.c_left[j] != 0.0:
        out.append((spec.c_left[j], deriv_fn(mu2, Side.LEFT), (0.0, 2.0 - mu2)))
    if spec.c_right[j] != 0.0:
        out.append((spec.c_right[j], deriv_fn(mu2, Side.RIGHT), (2.0 - mu2, 0.0)))
    if spec.kappa_left[j] != 0.0:
        out.append((-spec.kappa_left[j], deriv_fn(nu2, Side.LEFT), (0.0, 2.0 - nu2)))
    if spec.kappa_right[j] != 0.0:
        out.append((-spec.kappa_right[j], deriv_fn(nu2, Side.RIGHT), (2.0 - nu2, 0.0)))
    return out


def _space_factor_fn(case, spec, j):
    a, b = spec.intervals[j]

    def fn(x):
        xi = 2.0 * (np.asarray(x, dtype=float) - a) / (b - a) - 1.0
        return exact_space_factor(case, xi)

    return fn


def forcing_strong(case: ManufacturedCase, spec: ProblemSpec, point):
    """Pointwise forcing: strong operator applied to u_ext, solved for f.

    f = D_t^{2 tau} u + sum_i [c_l D_L^{2 mu} + c_r D_R^{2 mu}] u
        - sum_j [k_l D_L^{2 nu} + k_r D_R^{2 nu}] u - gamma u
    """
    t = np.asarray(point[0], dtype=float)
    xs = [np.asarray(x, dtype=float) for x in point[1:]]
    if len(xs) != spec.d:
        raise ValueError(f"expected {spec.d} spatial coordinates, got {len(xs)}")
    factors = []
    for j in range(spec.d):
        xi = 2.0 * (xs[j] - spec.intervals[j][0]) / (spec.intervals[j][1] - spec.intervals[j][0]) - 1.0
        factors.append(exact_space_factor(case, xi))

    def others(j):
        prod = 1.0
        for i, f in enumerate(factors):
            if i != j:
                prod = prod * f
        return prod

    total = exact_time_frac_deriv(case, 2.0 * spec.tau, t)
    for f in factors:
        total = total * f

    tpow = exact_time_factor(case, t)
    for j in range(spec.d):
        for coeff, fn, _ in _operator_spatial_terms(case, spec, j):
            total = total + coeff * tpow * fn(xs[j]) * others(j)
    if spec.gamma_coeff != 0.0:
        gamma_part = spec.gamma_coeff * tpow
        for f in factors:
            gamma_part = gamma_part * f
        total = total - gamma_part
    val = total
    return float(val) if np.ndim(val) == 0 else val


def forcing_terms(case: ManufacturedCase, spec: ProblemSpec):
    """Tensor-separable decomposition of the forcing for load assembly.

    Each term carries matched Jacobi weight exponents for the dimension in
    which its spatial factor has an algebraic endpoint singularity; all
    other directions integrate with plain Gauss-Legendre.
    """
    terms = []
    smooth = tuple(_space_factor_fn(case, spec, j) for j in range(spec.d))
    no_weight = tuple((0.0, 0.0) for _ in range(spec.d))
    # time factors are pure powers of t: declaring their exponent as a
    # Jacobi weight makes the temporal load integrals exact
    dt_weight = (0.0, case.p1 - 2.0 * spec.tau)
    plain_weight = (0.0, case.p1)

    terms.append(
        SeparableForcingTerm(
            time_fn=lambda t: exact_time_frac_deriv(case, 2.0 * spec.tau, t),
            space_fns=smooth,
            space_weights=no_weight,
            time_weight=dt_weight,
        )
    )
    tpow = lambda t: exact_time_factor(case, t)  # noqa: E731
    for j in range(spec.d):
        for coeff, fn, wexp in _operator_spatial_terms(case, spec, j):
            fns = list(smooth)
            fns[j] = fn
            weights = list(no_weight)
            weights[j] = wexp
            terms.append(
                SeparableForcingTerm(
                    time_fn=(lambda c: lambda t: c * tpow(t))(coeff),
                    space_fns=tuple(fns),
                    space_weights=tuple(weights),
                    time_weight=plain_weight,
                )
            )
    if spec.gamma_coeff != 0.0:
        terms.append(
            SeparableForcingTerm(
                time_fn=lambda t: -spec.gamma_coeff * tpow(t),
                space_fns=smooth,
                space_weights=no_weight,
                time_weight=plain_weight,
            )
        )
    return terms
