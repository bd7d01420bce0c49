"""Gauss-Jacobi and Gauss-Legendre rules via Golub-Welsch, with a rule cache.

Nodes and weights come from the eigen-decomposition of the symmetric
tridiagonal recurrence matrix (Golub-Welsch), which stays robust for the
singular weights (1-x)^(-sigma) (1+x)^(-sigma) used by the fractional
stiffness integrands.  Rules are cached by (q, alpha, beta) with the
exponents quantized at 1e-14; the cache is guarded by a lock so concurrent
callers are safe.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .specfun import gamma_fn

__all__ = [
    "QuadratureRule",
    "gauss_jacobi_rule",
    "gauss_legendre_rule",
    "integrate",
]

_QUANTUM = 1e-14

_cache: dict = {}
_cache_lock = threading.Lock()


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights of a rule for the weight (1-x)^alpha (1+x)^beta on (-1, 1)."""

    nodes: np.ndarray
    weights: np.ndarray
    weight_exponents: tuple[float, float]

    def __len__(self):
        return self.nodes.size


def _recurrence(q: int, a: float, b: float):
    """Diagonal and off-diagonal of the symmetric Jacobi recurrence matrix."""
    k = np.arange(q, dtype=float)
    apb = a + b
    diag = np.empty(q)
    diag[0] = (b - a) / (apb + 2.0)
    if q > 1:
        kk = k[1:]
        diag[1:] = (b * b - a * a) / ((2.0 * kk + apb) * (2.0 * kk + apb + 2.0))
        kk = k[1:]
        num = 4.0 * kk * (kk + a) * (kk + b) * (kk + apb)
        den = (2.0 * kk + apb) ** 2 * (2.0 * kk + apb + 1.0) * (2.0 * kk + apb - 1.0)
        off = np.sqrt(num / den)
    else:
        off = np.empty(0)
    return diag, off


def gauss_jacobi_rule(q: int, alpha: float, beta: float) -> QuadratureRule:
    """q-point rule, exact for (1-x)^alpha (1+x)^beta * p(x), deg p <= 2q-1."""
    if q < 1:
        raise ValueError(f"node count must be >= 1, got {q}")
    if not (alpha > -1.0 and beta > -1.0):
        raise ValueError(f"weight exponents must exceed -1, got ({alpha}, {beta})")
    key = (int(q), round(alpha / _QUANTUM), round(beta / _QUANTUM))
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit

    diag, off = _recurrence(q, alpha, beta)
    nodes, vecs = eigh_tridiagonal(diag, off)
    mu0 = (
        2.0 ** (alpha + beta + 1.0)
        * gamma_fn(alpha + 1.0)
        * gamma_fn(beta + 1.0)
        / gamma_fn(alpha + beta + 2.0)
    )
    weights = mu0 * vecs[0, :] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    rule = QuadratureRule(nodes=nodes, weights=weights, weight_exponents=(alpha, beta))
    with _cache_lock:
        _cache[key] = rule
    return rule


def gauss_legendre_rule(q: int) -> QuadratureRule:
    """q-point Gauss-Legendre rule; identical to gauss_jacobi_rule(q, 0, 0)."""
    return gauss_jacobi_rule(q, 0.0, 0.0)


def integrate(rule: QuadratureRule, f) -> float:
    """Sum w_i f(x_i).

    The rule's weight function is implicit: the caller must pass f with the
    singular factor already removed when using a weighted rule.
    """
    vals = np.asarray(f(rule.nodes), dtype=float)
    vals = np.broadcast_to(vals, rule.nodes.shape)
    if not np.all(np.isfinite(vals)):
        bad = rule.nodes[~np.isfinite(vals)]
        raise ValueError(f"integrand not finite at nodes {bad[:3]}")
    return float(rule.weights @ vals)
