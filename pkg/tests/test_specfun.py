"""Jacobi/Legendre recurrence and gamma-function checks.

Derived reference values were computed with a 40-digit mpmath oracle before
implementation and frozen here.
"""

import math

import numpy as np
import pytest

from fracpg.specfun import (
    JacobiParams,
    gamma_fn,
    gamma_ratio,
    jacobi_p,
    jacobi_table,
    legendre_p,
)


def test_jacobi_degree_zero_is_one():
    assert jacobi_p(0, JacobiParams(0.3, -0.2), 0.3) == 1.0


def test_jacobi_degree_one_legendre_case():
    assert jacobi_p(1, JacobiParams(0.0, 0.0), 0.5) == pytest.approx(0.5, abs=1e-15)


def test_jacobi_degree_two_mixed_params():
    # symbolic expansion of the recurrence (mpmath oracle)
    assert jacobi_p(2, JacobiParams(0.5, -0.5), 0.0) == pytest.approx(-0.375, rel=1e-14)


def test_jacobi_rejects_bad_params():
    with pytest.raises(ValueError):
        JacobiParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        JacobiParams(0.0, -1.5)


def test_jacobi_rejects_far_outside_argument():
    with pytest.raises(ValueError):
        jacobi_p(3, JacobiParams(0.0, 0.0), 1.0 + 1e-9)


def test_jacobi_clamps_rounding_overshoot():
    v = jacobi_p(5, JacobiParams(0.0, 0.0), 1.0 + 5e-13)
    assert v == pytest.approx(1.0, abs=1e-12)


def test_legendre_closed_forms():
    assert legendre_p(2, 0.0) == pytest.approx(-0.5, abs=1e-15)
    assert legendre_p(5, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert legendre_p(7, -1.0) == pytest.approx(-1.0, abs=1e-14)


def test_legendre_equals_jacobi_zero_zero():
    xs = np.linspace(-1.0, 1.0, 31)
    for n in range(0, 14):
        a = legendre_p(n, xs)
        b = jacobi_p(n, JacobiParams(0.0, 0.0), xs)
        assert np.max(np.abs(a - b)) <= 1e-14 * max(1.0, np.max(np.abs(a)))


def test_recurrence_consistency_random_params():
    rng = np.random.default_rng(1234)
    for _ in range(100):
        a = rng.uniform(-0.95, 2.0)
        b = rng.uniform(-0.95, 2.0)
        x = rng.uniform(-1.0, 1.0)
        tab = jacobi_table(30, JacobiParams(a, b), np.asarray(x))
        for n in range(2, 31):
            c1 = 2.0 * n * (n + a + b) * (2.0 * n + a + b - 2.0)
            c2 = (2.0 * n + a + b - 1.0) * (a * a - b * b)
            c3 = (2.0 * n + a + b - 2.0) * (2.0 * n + a + b - 1.0) * (2.0 * n + a + b)
            c4 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * (2.0 * n + a + b)
            resid = c1 * tab[n] - (c2 + c3 * x) * tab[n - 1] + c4 * tab[n - 2]
            scale = max(abs(c1 * tab[n]), abs(c4 * tab[n - 2]), 1.0)
            assert abs(resid) <= 1e-12 * scale


def test_endpoint_value():
    rng = np.random.default_rng(99)
    for _ in range(20):
        a = rng.uniform(-0.9, 1.5)
        b = rng.uniform(-0.9, 1.5)
        n = int(rng.integers(0, 12))
        want = gamma_ratio(n + a + 1.0, a + 1.0) / math.gamma(n + 1)
        got = jacobi_p(n, JacobiParams(a, b), 1.0)
        assert got == pytest.approx(want, rel=1e-12)


def test_reflection():
    rng = np.random.default_rng(7)
    for _ in range(50):
        a = rng.uniform(-0.9, 1.5)
        b = rng.uniform(-0.9, 1.5)
        n = int(rng.integers(0, 15))
        x = rng.uniform(-1.0, 1.0)
        lhs = jacobi_p(n, JacobiParams(a, b), -x)
        rhs = (-1.0) ** n * jacobi_p(n, JacobiParams(b, a), x)
        assert lhs == pytest.approx(rhs, abs=1e-13 * max(1.0, abs(rhs)))


def test_gamma_values():
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma_fn(0.5) == pytest.approx(1.7724538509055160273, rel=1e-13)
    assert gamma_fn(5.05) == pytest.approx(25.884267625383910651, rel=1e-13)


def test_gamma_pole_and_overflow():
    for bad in (0.0, -1.0, -7.0):
        with pytest.raises(ValueError):
            gamma_fn(bad)
    with pytest.raises(OverflowError):
        gamma_fn(171.0)


def test_gamma_functional_equation():
    rng = np.random.default_rng(42)
    for _ in range(500):
        x = rng.uniform(0.1, 80.0)
        assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=1e-12)


def test_gamma_reflection_branch():
    # x < 0.5 goes through the reflection formula
    assert gamma_fn(-0.5) == pytest.approx(-2.0 * math.sqrt(math.pi), rel=1e-13)
    assert gamma_fn(0.25) == pytest.approx(3.6256099082219083, rel=1e-13)


def test_gamma_ratio_matches_direct():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.uniform(0.2, 30.0)
        b = rng.uniform(0.2, 30.0)
        assert gamma_ratio(a, b) == pytest.approx(gamma_fn(a) / gamma_fn(b), rel=1e-12)


def test_gamma_ratio_pole_handling():
    assert gamma_ratio(2.0, 0.0) == 0.0
    assert gamma_ratio(2.0, -3.0) == 0.0
    with pytest.raises(ValueError):
        gamma_ratio(-1.0, 2.0)
    # negative non-integer arguments keep their sign
    assert gamma_ratio(2.0, -0.5) == pytest.approx(1.0 / gamma_fn(-0.5), rel=1e-12)
