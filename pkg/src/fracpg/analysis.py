"""Error norms, convergence sweeps, and the discrete inf-sup estimate.

The relative L2 error integrates the squared pointwise difference with
tensor Gauss rules; the energy-norm error adds the temporal and two-sided
spatial fractional seminorms, each integrated with a Gauss-Jacobi rule
matched to its singular endpoint factor (the right-sided temporal term
does not appear, matching the reported norm).

Observed convergence rates are the negative least-squares slope of
log(error) against log(order) over the last three sweep points.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .fraccalc import Side
from .manufactured import (
    ManufacturedCase,
    exact_solution,
    exact_space_factor,
    exact_space_frac_deriv,
    exact_time_factor,
    exact_time_frac_deriv,
    forcing_terms,
)
from .pg_assembly import (
    ProblemSpec,
    Resolution,
    build_operator_matrices,
    load_vector_separable,
    spatial_frac_bracket,
    spatial_gram_matrices,
    spatial_mass_matrix,
    spatial_phi_values,
    temporal_gram_matrices,
    temporal_matrices,
    temporal_trial_values,
)
from .quadrature import gauss_jacobi_rule, gauss_legendre_rule
from .solver import (
    SingularMatrixError,
    SpectralSolution,
    _kron_chain,
    assemble_global,
    solve_direct,
)
from .specfun import gamma_ratio, legendre_table

__all__ = [
    "SweepAxis",
    "ConvergenceRecord",
    "solve_manufactured",
    "l2_rel_error",
    "energy_error",
    "observed_rate",
    "convergence_sweep",
    "discrete_inf_sup",
]


class SweepAxis(enum.Enum):
    TEMPORAL = "temporal"
    SPATIAL = "spatial"


@dataclass
class ConvergenceRecord:
    """Per-resolution errors of one p-refinement sweep plus fitted tail rates."""

    axis: SweepAxis
    orders_swept: list
    l2_errors: list
    energy_errors: list
    observed_rate_l2: Optional[float]
    observed_rate_energy: Optional[float]
    wall_times_ms: list = field(default_factory=list)


def solve_manufactured(spec: ProblemSpec, case: ManufacturedCase, res: Resolution) -> SpectralSolution:
    """Assemble and solve the scheme with the forcing derived from u_ext."""
    mats = build_operator_matrices(spec, res)
    load = load_vector_separable(spec, res, forcing_terms(case, spec))
    return solve_direct(assemble_global(spec, res, mats, load))


def _tensor_eval(tables, coeffs) -> np.ndarray:
    """Contract a coefficient tensor against per-direction value tables.

    tables[i] has shape (modes_i, nodes_i); the result carries the node axes
    in the original direction order.
    """
    acc = coeffs
    for tab in tables:
        acc = np.tensordot(acc, tab, axes=(0, 0))
    return acc


def _exact_grid(case, spec, t, xis) -> np.ndarray:
    vals = exact_time_factor(case, t)
    for xi in xis:
        vals = np.multiply.outer(vals, exact_space_factor(case, xi))
    return vals


def l2_rel_error(sol: SpectralSolution, case: ManufacturedCase, quad_order=None) -> float:
    """Relative L2(Omega) error against u_ext by tensor Gauss-Legendre quadrature."""
    spec, res = sol.spec, sol.res
    q = quad_order or (max(res.n_time, *res.m_space) + 10)
    rule = gauss_legendre_rule(q)
    eta = rule.nodes
    t = (1.0 + eta) * spec.T / 2.0

    tables = [temporal_trial_values(spec.tau, res.n_time, eta)]
    for j in range(spec.d):
        tables.append(spatial_phi_values(res.m_space[j], rule.nodes))
    u_num = _tensor_eval(tables, sol.coeffs)
    u_ex = _exact_grid(case, spec, t, [rule.nodes] * spec.d)

    w = rule.weights
    wgrid = w
    for _ in range(spec.d):
        wgrid = np.multiply.outer(wgrid, w)
    num = float((wgrid * (u_num - u_ex) ** 2).sum())
    den = float((wgrid * u_ex**2).sum())
    if den < 1e-300:
        raise ZeroDivisionError("exact solution has vanishing L2 norm")
    return float(np.sqrt(num / den))


def _energy_piece(spec, wt_rule, wx_rule, num_t, num_x, ex_t, ex_x, t_deflate, x_deflate,
                  coeffs) -> tuple:
    """Squared seminorm of (numerical - exact) and of exact, one tensor piece.

    num_t/num_x: value tables of the discrete factors on the rule nodes.
    ex_t/ex_x: exact factor values on the same nodes.
    t_deflate/x_deflate: pointwise divisors moving the integrand into the
    rule's weight class.
    """
    u_num = _tensor_eval([num_t, num_x], coeffs)
    u_ex = np.multiply.outer(ex_t, ex_x)
    diff = (u_num - u_ex) * np.multiply.outer(t_deflate, x_deflate)
    exd = u_ex * np.multiply.outer(t_deflate, x_deflate)
    wgrid = np.multiply.outer(wt_rule.weights, wx_rule.weights)
    return float((wgrid * diff**2).sum()), float((wgrid * exd**2).sum())


def energy_error(sol: SpectralSolution, case: ManufacturedCase, quad_order=None) -> float:
    """Relative error in the energy norm (L2 + temporal + two-sided spatial terms).

    d = 1 only, matching the reported norm.  Each seminorm integrates with
    rules matched to the singular endpoint factors of the integrands.
    """
    spec, res = sol.spec, sol.res
    if spec.d != 1:
        raise ValueError("energy norm is defined for d = 1")
    tau, nu = spec.tau, spec.nu[0]
    n_time, m_count = res.n_time, res.m_space[0]
    q = quad_order or (max(n_time, m_count) + 10)
    a, b = spec.intervals[0]
    jac = (b - a) / 2.0
    t_scale = spec.T / 2.0

    gfac = np.array([gamma_ratio(n + tau, float(n)) for n in range(1, n_time + 1)])

    # time rules: weighted for pieces containing the (1+eta)^tau trial factor,
    # plain for the smooth temporal-derivative piece
    rule_t_w = gauss_jacobi_rule(q, 0.0, 2.0 * tau)
    rule_t_gl = gauss_legendre_rule(q)
    # space rules: plain, left-deflated, right-deflated
    rule_x_gl = gauss_legendre_rule(q)
    rule_x_l = gauss_jacobi_rule(q, 0.0, 2.0 - 2.0 * nu)
    rule_x_r = gauss_jacobi_rule(q, 2.0 - 2.0 * nu, 0.0)

    def tvals(rule):
        return (1.0 + rule.nodes) * spec.T / 2.0

    num_sq = 0.0
    den_sq = 0.0

    # L2 piece
    eta = rule_t_w.nodes
    psi = temporal_trial_values(tau, n_time, eta)
    phi = spatial_phi_values(m_count, rule_x_gl.nodes)
    nsq, dsq = _energy_piece(
        spec, rule_t_w, rule_x_gl,
        psi, phi,
        exact_time_factor(case, tvals(rule_t_w)), exact_space_factor(case, rule_x_gl.nodes),
        (1.0 + eta) ** (-tau), np.ones_like(rule_x_gl.nodes),
        sol.coeffs,
    )
    num_sq += t_scale * jac * nsq
    den_sq += t_scale * jac * dsq

    # temporal fractional seminorm: both factors smooth on the GL grid
    eta = rule_t_gl.nodes
    dpsi = (2.0 / spec.T) ** tau * gfac[:, None] * legendre_table(n_time - 1, eta)
    nsq, dsq = _energy_piece(
        spec, rule_t_gl, rule_x_gl,
        dpsi, phi,
        exact_time_frac_deriv(case, tau, tvals(rule_t_gl)),
        exact_space_factor(case, rule_x_gl.nodes),
        np.ones_like(eta), np.ones_like(rule_x_gl.nodes),
        sol.coeffs,
    )
    num_sq += t_scale * jac * nsq
    den_sq += t_scale * jac * dsq

    # spatial fractional seminorms, left then right
    eta = rule_t_w.nodes
    psi_w = temporal_trial_values(tau, n_time, eta)
    t_def = (1.0 + eta) ** (-tau)
    ex_t = exact_time_factor(case, tvals(rule_t_w))
    for rule_x, left in ((rule_x_l, True), (rule_x_r, False)):
        xi = rule_x.nodes
        endpoint = (1.0 + xi) if left else (1.0 - xi)
        bracket = spatial_frac_bracket(m_count, nu, left, xi)
        dnum_x = jac ** (-nu) * endpoint ** (-nu) * bracket
        side = Side.LEFT if left else Side.RIGHT
        dex_x = jac ** (-nu) * exact_space_frac_deriv(case, nu, side, xi)
        nsq, dsq = _energy_piece(
            spec, rule_t_w, rule_x,
            psi_w, dnum_x,
            ex_t, dex_x,
            t_def, endpoint ** (nu - 1.0),
            sol.coeffs,
        )
        num_sq += t_scale * jac * nsq
        den_sq += t_scale * jac * dsq

    if den_sq < 1e-300:
        raise ZeroDivisionError("exact solution has vanishing energy norm")
    return float(np.sqrt(num_sq / den_sq))


def observed_rate(orders, errors) -> float:
    """Negative tail slope of log(error) vs log(order), last three points."""
    orders = np.asarray(orders, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if orders.size < 2:
        raise ValueError("rate fitting needs at least two sweep points")
    if np.any(errors <= 0.0):
        raise ValueError("errors must be strictly positive for log-log fitting")
    k = min(3, orders.size)
    lx = np.log(orders[-k:])
    ly = np.log(errors[-k:])
    slope = np.polyfit(lx, ly, 1)[0]
    return float(-slope)


def convergence_sweep(spec: ProblemSpec, case: ManufacturedCase, axis: SweepAxis,
                      orders, fixed_other_order: int, quad_order=None) -> ConvergenceRecord:
    """Run assemble -> solve -> error over a p-refinement sweep."""
    orders = [int(o) for o in orders]
    if not orders or any(b <= a for a, b in zip(orders, orders[1:])):
        raise ValueError("sweep orders must be nonempty and strictly increasing")
    l2s, energies, times = [], [], []
    for o in orders:
        if axis is SweepAxis.TEMPORAL:
            res = Resolution(n_time=o, m_space=(fixed_other_order,) * spec.d)
        else:
            res = Resolution(n_time=fixed_other_order, m_space=(o,) * spec.d)
        t0 = time.perf_counter()
        try:
            sol = solve_manufactured(spec, case, res)
        except SingularMatrixError as exc:
            raise RuntimeError(f"sweep aborted at order {o}: {exc}") from exc
        l2s.append(l2_rel_error(sol, case, quad_order))
        energies.append(energy_error(sol, case, quad_order) if spec.d == 1 else float("nan"))
        times.append((time.perf_counter() - t0) * 1e3)
    rate_l2 = observed_rate(orders, l2s) if len(orders) >= 2 else None
    rate_energy = (
        observed_rate(orders, energies)
        if len(orders) >= 2 and np.all(np.isfinite(energies))
        else None
    )
    return ConvergenceRecord(
        axis=axis,
        orders_swept=orders,
        l2_errors=l2s,
        energy_errors=energies,
        observed_rate_l2=rate_l2,
        observed_rate_energy=rate_energy,
        wall_times_ms=times,
    )


def _gram_matrices(spec: ProblemSpec, res: Resolution):
    """Trial/test Gram matrices of the solution- and test-space norms."""
    g_uu, g_vv = temporal_gram_matrices(spec.tau, res.n_time, spec.T, res.quad_order)
    s_t, _ = temporal_matrices(spec.tau, res.n_time, spec.T, res.quad_order)
    masses, sames = [], []
    for j in range(spec.d):
        masses.append(spatial_mass_matrix(res.m_space[j], spec.intervals[j]))
        s_ll, s_rr = spatial_gram_matrices(spec.nu[j], res.m_space[j], spec.intervals[j],
                                           res.quad_order)
        sames.append(s_ll + s_rr)

    def build(temporal_mass):
        g = _kron_chain([temporal_mass] + masses)
        g = g + _kron_chain([s_t] + masses)
        for j in range(spec.d):
            blocks = [temporal_mass] + list(masses)
            blocks[1 + j] = sames[j]
            g = g + _kron_chain(blocks)
        return g

    return build(g_uu), build(g_vv)


def discrete_inf_sup(spec: ProblemSpec, res: Resolution) -> float:
    """Smallest singular value of the norm-scaled global operator.

    beta_N = sigma_min(L_V^{-1} A L_U^{-T}) where G_U = L_U L_U^T and
    G_V = L_V L_V^T are the Grams of the trial/test norms.
    """
    mats = build_operator_matrices(spec, res)
    lhs = assemble_global(spec, res, mats, np.zeros(res.total_dim)).lhs
    g_u, g_v = _gram_matrices(spec, res)
    try:
        l_u = sla.cholesky(g_u, lower=True)
        l_v = sla.cholesky(g_v, lower=True)
    except sla.LinAlgError as exc:
        raise RuntimeError(f"norm Gram matrix not positive definite: {exc}") from exc
    half = sla.solve_triangular(l_v, lhs, lower=True)
    scaled = sla.solve_triangular(l_u, half.T, lower=True).T
    return float(np.linalg.svd(scaled, compute_uv=False).min())
