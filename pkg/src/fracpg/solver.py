"""Kronecker-structured global system assembly and linear solves.

Global ordering is fixed: the temporal index runs slowest, spatial
dimensions follow in declaration order.  The left-hand side is

    S_t (x) M_1 (x) ... (x) M_d
  + sum_i M_t (x) ... (x) (c_li S_i^{mu,L} + c_ri S_i^{mu,R}) (x) ... (x) M_d
  - sum_j M_t (x) ... (x) (k_lj S_j^{nu,L} + k_rj S_j^{nu,R}) (x) ... (x) M_d
  + gamma M_t (x) M_1 (x) ... (x) M_d

with the minus sign on the dispersive pairs and plus on the reaction term.
Solves are dense LU with one step of iterative refinement (extended-precision
residual); the d=1 Sylvester path demonstrates the Lyapunov structure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg as sla

from .fraccalc import BasisKind, frac_deriv_temporal_basis
from .pg_assembly import (
    OperatorMatrices,
    ProblemSpec,
    Resolution,
    spatial_frac_bracket,
    spatial_phi_values,
    temporal_test_values,
    temporal_trial_values,
)
from .quadrature import gauss_jacobi_rule, gauss_legendre_rule

__all__ = [
    "GlobalSystem",
    "SpectralSolution",
    "SingularMatrixError",
    "assemble_global",
    "solve_direct",
    "solve_sylvester_1d",
    "evaluate",
    "bilinear_form_quadrature",
]

_PIVOT_FLOOR = 1e-14
_RESIDUAL_BOUND = 1e-10


class SingularMatrixError(RuntimeError):
    """Raised when the global matrix is numerically singular."""


@dataclass
class GlobalSystem:
    """Dense lhs/rhs of the discrete scheme plus its provenance."""

    lhs: np.ndarray
    rhs: np.ndarray
    spec: ProblemSpec
    res: Resolution


@dataclass
class SpectralSolution:
    """Coefficient tensor of the discrete solution over the trial basis."""

    coeffs: np.ndarray
    spec: ProblemSpec
    res: Resolution


def _kron_chain(mats) -> np.ndarray:
    return reduce(np.kron, mats)


def assemble_global(spec: ProblemSpec, res: Resolution, mats: OperatorMatrices,
                    load: np.ndarray) -> GlobalSystem:
    """Build the dense global operator by explicit Kronecker products."""
    dim = res.total_dim
    load = np.asarray(load, dtype=float).reshape(-1)
    if load.size != dim:
        raise ValueError(f"load vector has size {load.size}, expected {dim}")
    if mats.temporal_stiffness.shape != (res.n_time,) * 2:
        raise ValueError("temporal block has inconsistent shape")
    for j in range(spec.d):
        if mats.spatial_mass[j].shape != (res.m_space[j],) * 2:
            raise ValueError(f"spatial block {j} has inconsistent shape")

    lhs = _kron_chain([mats.temporal_stiffness] + list(mats.spatial_mass))
    for i in range(spec.d):
        if spec.c_left[i] == 0.0 and spec.c_right[i] == 0.0:
            continue
        combo = spec.c_left[i] * mats.stiff_mu_left[i] + spec.c_right[i] * mats.stiff_mu_right[i]
        blocks = [mats.temporal_mass] + list(mats.spatial_mass)
        blocks[1 + i] = combo
        lhs = lhs + _kron_chain(blocks)
    for j in range(spec.d):
        if spec.kappa_left[j] == 0.0 and spec.kappa_right[j] == 0.0:
            continue
        combo = spec.kappa_left[j] * mats.stiff_nu_left[j] + spec.kappa_right[j] * mats.stiff_nu_right[j]
        blocks = [mats.temporal_mass] + list(mats.spatial_mass)
        blocks[1 + j] = combo
        lhs = lhs - _kron_chain(blocks)
    if spec.gamma_coeff != 0.0:
        lhs = lhs + spec.gamma_coeff * _kron_chain([mats.temporal_mass] + list(mats.spatial_mass))
    return GlobalSystem(lhs=lhs, rhs=load, spec=spec, res=res)


def _refined_solve(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """LU solve plus one iterative-refinement step with a long-double residual."""
    lu, piv = sla.lu_factor(lhs)
    diag = np.abs(np.diag(lu))
    if diag.min() <= _PIVOT_FLOOR * diag.max():
        raise SingularMatrixError(
            f"pivot ratio {diag.min() / diag.max():.2e} below {_PIVOT_FLOOR}; "
            "system numerically singular"
        )
    x = sla.lu_solve((lu, piv), rhs)
    a_ld = lhs.astype(np.longdouble)
    r = np.asarray(rhs, dtype=np.longdouble) - a_ld @ x.astype(np.longdouble)
    x = x + sla.lu_solve((lu, piv), r.astype(float))
    return x


def solve_direct(sys: GlobalSystem) -> SpectralSolution:
    """Pivoted dense solve of the global system with a residual guarantee."""
    x = _refined_solve(sys.lhs, sys.rhs)
    res_norm = np.linalg.norm(sys.lhs @ x - sys.rhs)
    rhs_norm = np.linalg.norm(sys.rhs)
    if rhs_norm > 0 and res_norm > _RESIDUAL_BOUND * rhs_norm:
        raise SingularMatrixError(
            f"solve residual {res_norm:.3e} exceeds {_RESIDUAL_BOUND:.0e} * ||rhs||"
        )
    shape = (sys.res.n_time,) + tuple(sys.res.m_space)
    return SpectralSolution(coeffs=x.reshape(shape), spec=sys.spec, res=sys.res)


def combined_spatial_operator(spec: ProblemSpec, mats: OperatorMatrices, j: int = 0) -> np.ndarray:
    """Advection + dispersion + reaction combination of the dim-j spatial blocks."""
    return (
        spec.c_left[j] * mats.stiff_mu_left[j]
        + spec.c_right[j] * mats.stiff_mu_right[j]
        - spec.kappa_left[j] * mats.stiff_nu_left[j]
        - spec.kappa_right[j] * mats.stiff_nu_right[j]
        + spec.gamma_coeff * mats.spatial_mass[j]
    )


def solve_sylvester_1d(s_t, m_t, spatial_combo, m_x, f_mat, spec=None, res=None) -> SpectralSolution:
    """Solve S_t U M_x^T + M_t U A^T = F for d = 1 via a Sylvester transform.

    A is the combined spatial operator (advection + dispersion + reaction).
    Falls back to the dense path with a warning when the transform fails.
    """
    f_mat = np.asarray(f_mat, dtype=float)
    n_time, m_count = f_mat.shape
    if res is None:
        res = Resolution(n_time=n_time, m_space=(m_count,))
    try:
        p = sla.solve(m_t, s_t)
        q = sla.solve(m_x, spatial_combo).T
        r = sla.solve(m_x, sla.solve(m_t, f_mat).T).T
        u = sla.solve_sylvester(p, q, r)
        resid = s_t @ u @ m_x.T + m_t @ u @ spatial_combo.T - f_mat
        scale = max(float(np.linalg.norm(f_mat)), 1e-300)
        if not np.all(np.isfinite(u)) or np.linalg.norm(resid) > 1e-8 * scale:
            raise sla.LinAlgError("sylvester residual too large")
    except (sla.LinAlgError, ValueError) as exc:
        warnings.warn(f"Sylvester transform failed ({exc}); falling back to dense solve")
        lhs = np.kron(s_t, m_x) + np.kron(m_t, spatial_combo)
        u = _refined_solve(lhs, f_mat.reshape(-1)).reshape(n_time, m_count)
    return SpectralSolution(coeffs=u, spec=spec, res=res)


def evaluate(sol: SpectralSolution, point) -> float:
    """Value of the discrete solution at one space-time point (t, x_1, ..., x_d)."""
    spec, res = sol.spec, sol.res
    if spec is None:
        raise ValueError("solution carries no problem description")
    eta = 2.0 * float(point[0]) / spec.T - 1.0
    if not -1.0 - 1e-12 <= eta <= 1.0 + 1e-12:
        raise ValueError("t outside [0, T]")
    acc = np.tensordot(temporal_trial_values(spec.tau, res.n_time, eta), sol.coeffs, axes=(0, 0))
    for j in range(spec.d):
        a, b = spec.intervals[j]
        xi = 2.0 * (float(point[1 + j]) - a) / (b - a) - 1.0
        acc = np.tensordot(spatial_phi_values(res.m_space[j], xi), acc, axes=(0, 0))
    return float(acc)


def bilinear_form_quadrature(spec: ProblemSpec, res: Resolution, trial_idx, test_idx,
                             quad_order=None) -> float:
    """Direct space-time quadrature of a(u, v) for one trial/test basis pair.

    Every term is summed over the full tensor grid of its matched rule,
    deliberately avoiding the Kronecker bookkeeping of ``assemble_global``.
    Used to validate the assembled global matrix entrywise.
    """
    n, m = trial_idx[0], tuple(np.atleast_1d(trial_idx[1]))
    k, r = test_idx[0], tuple(np.atleast_1d(test_idx[1]))
    q = quad_order or res.quad_order or (max(res.n_time, *res.m_space) + 10)
    jacs = spec.jacobians()
    tau = spec.tau

    def grid_sum(taxis, xaxes):
        """Full tensor-grid weighted sum of a separable integrand.

        taxis/xaxes are (values, weights, scale) triples per direction.
        """
        vals = taxis[0]
        wgts = taxis[1]
        scale = taxis[2]
        for xv, xw, xs in xaxes:
            vals = np.multiply.outer(vals, xv)
            wgts = np.multiply.outer(wgts, xw)
            scale *= xs
        return scale * float((vals * wgts).sum())

    def mass_axis(j):
        gl = gauss_legendre_rule(q)
        pm = spatial_phi_values(m[j], gl.nodes)[m[j] - 1]
        pr = spatial_phi_values(r[j], gl.nodes)[r[j] - 1]
        return (pm * pr, gl.weights, jacs[j])

    def stiff_axis(j, sigma, trial_left):
        gj = gauss_jacobi_rule(q, -sigma, -sigma)
        bm = spatial_frac_bracket(m[j], sigma, trial_left, gj.nodes)[m[j] - 1]
        br = spatial_frac_bracket(r[j], sigma, not trial_left, gj.nodes)[r[j] - 1]
        return (bm * br, gj.weights, jacs[j] ** (1.0 - 2.0 * sigma))

    gl_t = gauss_legendre_rule(q)
    dtr = frac_deriv_temporal_basis(n, tau, BasisKind.TRIAL, gl_t.nodes)
    dte = frac_deriv_temporal_basis(k, tau, BasisKind.TEST, gl_t.nodes)
    t_stiff = (dtr * dte, gl_t.weights, (2.0 / spec.T) ** (2.0 * tau) * (spec.T / 2.0))

    gj_t = gauss_jacobi_rule(q, tau, tau)
    tr_vals = temporal_trial_values(tau, n, gj_t.nodes)[n - 1] / (1.0 + gj_t.nodes) ** tau
    te_vals = temporal_test_values(tau, k, gj_t.nodes)[k - 1] / (1.0 - gj_t.nodes) ** tau
    t_mass = (tr_vals * te_vals, gj_t.weights, spec.T / 2.0)

    value = grid_sum(t_stiff, [mass_axis(j) for j in range(spec.d)])
    for i in range(spec.d):
        for coeff, left in ((spec.c_left[i], True), (spec.c_right[i], False)):
            if coeff == 0.0:
                continue
            axes = [stiff_axis(j, spec.mu[j], left) if j == i else mass_axis(j)
                    for j in range(spec.d)]
            value += coeff * grid_sum(t_mass, axes)
    for i in range(spec.d):
        for coeff, left in ((spec.kappa_left[i], True), (spec.kappa_right[i], False)):
            if coeff == 0.0:
                continue
            axes = [stiff_axis(j, spec.nu[j], left) if j == i else mass_axis(j)
                    for j in range(spec.d)]
            value -= coeff * grid_sum(t_mass, axes)
    if spec.gamma_coeff != 0.0:
        value += spec.gamma_coeff * grid_sum(t_mass, [mass_axis(j) for j in range(spec.d)])
    return value
