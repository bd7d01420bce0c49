"""Trial/test bases and the 1-D operator matrices of the space-time scheme.

The temporal trial basis is (1+eta)^tau P_{n-1}^{-tau,tau}(eta), the test
basis its mirror image (1-eta)^tau P_{k-1}^{tau,-tau}(eta); both share the
spatial factors P_{m+1}(xi) - P_{m-1}(xi), which vanish at the interval
ends.  Fractional derivatives of the spatial factors are assembled
analytically as gamma-scaled Jacobi brackets so the singular endpoint
factors move into the quadrature weight exactly.

Affine maps: eta = 2t/T - 1 and xi_j = 2(x_j - a_j)/(b_j - a_j) - 1.  Every
Jacobian power is applied here in the matrix/vector builders; basis
evaluation itself stays on the reference element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .quadrature import gauss_jacobi_rule, gauss_legendre_rule
from .specfun import JacobiParams, gamma_ratio, jacobi_table, legendre_table

__all__ = [
    "ProblemSpec",
    "Resolution",
    "OperatorMatrices",
    "SeparableForcingTerm",
    "eval_trial_basis",
    "eval_test_basis",
    "temporal_matrices",
    "temporal_gram_matrices",
    "spatial_matrices",
    "spatial_gram_matrices",
    "build_operator_matrices",
    "load_vector",
    "load_vector_separable",
]

_ORDER_TOL = 1e-12
_DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    """Orders, coefficients, geometry and forcing of the strong-form problem.

    Half-orders are stored: tau for the temporal operator of order 2*tau,
    mu_i for the advective pairs of order 2*mu_i in (0,1), nu_j for the
    dispersive pairs of order 2*nu_j in (1,2).  Homogeneous Dirichlet
    data is implied throughout.
    """

    d: int
    T: float
    intervals: tuple
    tau: float
    mu: tuple
    nu: tuple
    c_left: tuple
    c_right: tuple
    kappa_left: tuple
    kappa_right: tuple
    gamma_coeff: float = 0.0
    forcing: Optional[Callable] = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("spatial dimension must be >= 1")
        if not self.T > 0.0:
            raise ValueError("final time must be positive")
        object.__setattr__(self, "intervals", tuple(tuple(map(float, ab)) for ab in self.intervals))
        for name in ("mu", "nu", "c_left", "c_right", "kappa_left", "kappa_right"):
            object.__setattr__(self, name, tuple(map(float, getattr(self, name))))
        for name in ("intervals", "mu", "nu", "c_left", "c_right", "kappa_left", "kappa_right"):
            if len(getattr(self, name)) != self.d:
                raise ValueError(f"{name} must have length d={self.d}")
        for a, b in self.intervals:
            if not a < b:
                raise ValueError(f"degenerate interval ({a}, {b})")
        two_tau = 2.0 * self.tau
        if not (0.0 < two_tau < 2.0) or abs(two_tau - 1.0) < _ORDER_TOL:
            raise ValueError(f"temporal order 2*tau must lie in (0,2) excluding 1, got {two_tau}")
        for m in self.mu:
            if not (0.0 < 2.0 * m < 1.0):
                raise ValueError(f"advective order 2*mu must lie in (0,1), got {2.0 * m}")
        for n in self.nu:
            if not (1.0 < 2.0 * n < 2.0):
                raise ValueError(f"dispersive order 2*nu must lie in (1,2), got {2.0 * n}")

    def jacobians(self) -> np.ndarray:
        return np.array([(b - a) / 2.0 for a, b in self.intervals])


@dataclass(frozen=True)
class Resolution:
    """Expansion orders: n_time temporal modes, m_space modes per dimension."""

    n_time: int
    m_space: tuple
    quad_order: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "m_space", tuple(int(m) for m in np.atleast_1d(self.m_space)))
        if self.n_time < 1 or any(m < 1 for m in self.m_space):
            raise ValueError("all expansion orders must be >= 1")

    @property
    def total_dim(self) -> int:
        return self.n_time * int(np.prod(self.m_space))


@dataclass
class OperatorMatrices:
    """1-D temporal/spatial blocks feeding the Kronecker-structured system."""

    temporal_stiffness: np.ndarray
    temporal_mass: np.ndarray
    spatial_mass: list = field(default_factory=list)
    stiff_mu_left: list = field(default_factory=list)
    stiff_mu_right: list = field(default_factory=list)
    stiff_nu_left: list = field(default_factory=list)
    stiff_nu_right: list = field(default_factory=list)


def _map_time(spec: ProblemSpec, t):
    return 2.0 * np.asarray(t, dtype=float) / spec.T - 1.0


def _map_space(spec: ProblemSpec, j: int, x):
    a, b = spec.intervals[j]
    return 2.0 * (np.asarray(x, dtype=float) - a) / (b - a) - 1.0


def _check_inside(val, lo, hi, label):
    arr = np.asarray(val, dtype=float)
    span = hi - lo
    if np.any(arr < lo - _DOMAIN_TOL * span) or np.any(arr > hi + _DOMAIN_TOL * span):
        raise ValueError(f"{label} outside [{lo}, {hi}]")


def temporal_trial_values(tau: float, n_time: int, eta) -> np.ndarray:
    """Rows n=1..N of (1+eta)^tau P_{n-1}^{-tau,tau}(eta)."""
    eta = np.asarray(eta, dtype=float)
    tab = jacobi_table(n_time - 1, JacobiParams(-tau, tau), eta)
    return (1.0 + eta) ** tau * tab


def temporal_test_values(tau: float, n_time: int, eta) -> np.ndarray:
    """Rows k=1..N of (1-eta)^tau P_{k-1}^{tau,-tau}(eta)."""
    eta = np.asarray(eta, dtype=float)
    tab = jacobi_table(n_time - 1, JacobiParams(tau, -tau), eta)
    return (1.0 - eta) ** tau * tab


def spatial_phi_values(m_count: int, xi) -> np.ndarray:
    """Rows m=1..M of phi_m(xi) = P_{m+1}(xi) - P_{m-1}(xi)."""
    xi = np.asarray(xi, dtype=float)
    tab = legendre_table(m_count + 1, xi)
    return tab[2 : m_count + 2] - tab[0:m_count]


def spatial_frac_bracket(m_count: int, sigma: float, left: bool, xi) -> np.ndarray:
    """Gamma-scaled Jacobi bracket B_m with D^sigma phi_m = (1 -/+ xi)^(-sigma) B_m.

    left=True gives the bracket of the left-sided derivative (singular
    factor (1+xi)^(-sigma)); left=False the right-sided one.
    """
    xi = np.asarray(xi, dtype=float)
    params = JacobiParams(sigma, -sigma) if left else JacobiParams(-sigma, sigma)
    tab = jacobi_table(m_count + 1, params, xi)
    out = np.empty((m_count,) + xi.shape, dtype=float)
    for m in range(1, m_count + 1):
        hi = gamma_ratio(m + 2.0, m + 2.0 - sigma)
        lo = gamma_ratio(float(m), m - sigma)
        out[m - 1] = hi * tab[m + 1] - lo * tab[m - 1]
    return out


def eval_trial_basis(spec: ProblemSpec, n: int, m, point):
    """Trial basis value at a space-time point (t, x_1, ..., x_d)."""
    m = tuple(np.atleast_1d(m))
    t, xs = point[0], point[1:]
    _check_inside(t, 0.0, spec.T, "t")
    eta = _map_time(spec, t)
    val = temporal_trial_values(spec.tau, n, np.asarray(eta))[n - 1]
    for j in range(spec.d):
        a, b = spec.intervals[j]
        _check_inside(xs[j], a, b, f"x_{j + 1}")
        xi = _map_space(spec, j, xs[j])
        val = val * spatial_phi_values(m[j], np.asarray(xi))[m[j] - 1]
    return float(val) if np.ndim(val) == 0 else val


def eval_test_basis(spec: ProblemSpec, k: int, r, point):
    """Test basis value at a space-time point; spatial factors match the trial's."""
    r = tuple(np.atleast_1d(r))
    t, xs = point[0], point[1:]
    _check_inside(t, 0.0, spec.T, "t")
    eta = _map_time(spec, t)
    val = temporal_test_values(spec.tau, k, np.asarray(eta))[k - 1]
    for j in range(spec.d):
        a, b = spec.intervals[j]
        _check_inside(xs[j], a, b, f"x_{j + 1}")
        xi = _map_space(spec, j, xs[j])
        val = val * spatial_phi_values(r[j], np.asarray(xi))[r[j] - 1]
    return float(val) if np.ndim(val) == 0 else val


def _frac_factors(tau: float, n_time: int) -> np.ndarray:
    return np.array([gamma_ratio(n + tau, float(n)) for n in range(1, n_time + 1)])


def temporal_matrices(tau: float, n_time: int, T: float, quad_order: Optional[int] = None,
                      check_quadrature: bool = False):
    """Temporal stiffness S_t[k][n] = (D^tau psi_n, D^tau_R Psi_k) and mass M_t.

    Chain-rule factors: (2/T)^tau per fractional derivative and T/2 for the
    measure, applied exactly once here.
    """
    if not (0.0 < 2.0 * tau < 2.0) or abs(2.0 * tau - 1.0) < _ORDER_TOL:
        raise ValueError(f"temporal order 2*tau must lie in (0,2) excluding 1, got {2 * tau}")

    def build(q):
        gl = gauss_legendre_rule(q)
        fac = _frac_factors(tau, n_time)
        leg = legendre_table(n_time - 1, gl.nodes)
        dtr = fac[:, None] * leg
        s_t = (2.0 / T) ** (2.0 * tau) * (T / 2.0) * (dtr * gl.weights) @ dtr.T
        gj = gauss_jacobi_rule(q, tau, tau)
        a_tab = jacobi_table(n_time - 1, JacobiParams(-tau, tau), gj.nodes)
        b_tab = jacobi_table(n_time - 1, JacobiParams(tau, -tau), gj.nodes)
        m_t = (T / 2.0) * (b_tab * gj.weights) @ a_tab.T
        return s_t, m_t

    q = quad_order or (n_time + 10)
    s_t, m_t = build(q)
    if check_quadrature:
        s2, m2 = build(2 * q)
        for coarse, fine in ((s_t, s2), (m_t, m2)):
            scale = np.abs(fine).max()
            if np.abs(coarse - fine).max() > 1e-11 * scale:
                raise ValueError("temporal quadrature under-resolved; raise quad_order")
    return s_t, m_t


def temporal_gram_matrices(tau: float, n_time: int, T: float, quad_order: Optional[int] = None):
    """Same-family temporal L2 Grams: (psi_n, psi_n') and (Psi_k, Psi_k')."""
    q = quad_order or (n_time + 10)
    gj_u = gauss_jacobi_rule(q, 0.0, 2.0 * tau)
    a_tab = jacobi_table(n_time - 1, JacobiParams(-tau, tau), gj_u.nodes)
    g_uu = (T / 2.0) * (a_tab * gj_u.weights) @ a_tab.T
    gj_v = gauss_jacobi_rule(q, 2.0 * tau, 0.0)
    b_tab = jacobi_table(n_time - 1, JacobiParams(tau, -tau), gj_v.nodes)
    g_vv = (T / 2.0) * (b_tab * gj_v.weights) @ b_tab.T
    return g_uu, g_vv


def spatial_mass_matrix(m_count: int, interval) -> np.ndarray:
    """Closed-form Gram of phi_m = P_{m+1} - P_{m-1}; pentadiagonal in structure."""
    a, b = interval
    jac = (b - a) / 2.0
    mat = np.zeros((m_count, m_count))
    for m in range(1, m_count + 1):
        mat[m - 1, m - 1] = 2.0 / (2.0 * m - 1.0) + 2.0 / (2.0 * m + 3.0)
        if m + 2 <= m_count:
            mat[m - 1, m + 1] = mat[m + 1, m - 1] = -2.0 / (2.0 * m + 3.0)
    return jac * mat


def spatial_matrices(sigma: float, m_count: int, interval, quad_order: Optional[int] = None,
                     check_quadrature: bool = False):
    """Half-order stiffness pair (S^L, S^R) and the mass matrix on (a, b).

    S^L[r][m] pairs the left derivative of the trial factor with the right
    derivative of the test factor; S^R swaps the sides.  Both integrands
    carry the weight (1-xi)^(-sigma) (1+xi)^(-sigma), absorbed by the
    Gauss-Jacobi rule.  The interval scale enters as J^(1-2*sigma).
    """
    if not (0.0 < sigma < 1.0):
        raise ValueError(f"half-order must lie in (0,1), got {sigma}")
    a, b = interval
    jac = (b - a) / 2.0
    scale = jac ** (1.0 - 2.0 * sigma)

    def build(q):
        gj = gauss_jacobi_rule(q, -sigma, -sigma)
        bl = spatial_frac_bracket(m_count, sigma, True, gj.nodes)
        br = spatial_frac_bracket(m_count, sigma, False, gj.nodes)
        s_left = scale * (br * gj.weights) @ bl.T
        s_right = scale * (bl * gj.weights) @ br.T
        return s_left, s_right

    q = quad_order or (m_count + 10)
    s_left, s_right = build(q)
    if check_quadrature:
        f_left, f_right = build(2 * q)
        for coarse, fine in ((s_left, f_left), (s_right, f_right)):
            if np.abs(coarse - fine).max() > 1e-11 * np.abs(fine).max():
                raise ValueError("spatial quadrature under-resolved; raise quad_order")
    return s_left, s_right, spatial_mass_matrix(m_count, interval)


def spatial_gram_matrices(sigma: float, m_count: int, interval, quad_order: Optional[int] = None):
    """Same-side derivative Grams (D_L phi, D_L phi) and (D_R phi, D_R phi).

    The brackets vanish at the singular terminal, so one factor of the
    terminal distance is deflated and the remaining weight exponent is
    2 - 2*sigma, always integrable.
    """
    a, b = interval
    jac = (b - a) / 2.0
    scale = jac ** (1.0 - 2.0 * sigma)
    q = quad_order or (m_count + 10)

    gj_l = gauss_jacobi_rule(q, 0.0, 2.0 - 2.0 * sigma)
    cl = spatial_frac_bracket(m_count, sigma, True, gj_l.nodes) / (1.0 + gj_l.nodes)
    s_ll = scale * (cl * gj_l.weights) @ cl.T

    gj_r = gauss_jacobi_rule(q, 2.0 - 2.0 * sigma, 0.0)
    cr = spatial_frac_bracket(m_count, sigma, False, gj_r.nodes) / (1.0 - gj_r.nodes)
    s_rr = scale * (cr * gj_r.weights) @ cr.T
    return s_ll, s_rr


def build_operator_matrices(spec: ProblemSpec, res: Resolution) -> OperatorMatrices:
    """All 1-D blocks for (spec, res) at the default quadrature order."""
    s_t, m_t = temporal_matrices(spec.tau, res.n_time, spec.T, res.quad_order)
    mats = OperatorMatrices(temporal_stiffness=s_t, temporal_mass=m_t)
    for j in range(spec.d):
        mcount = res.m_space[j]
        q = res.quad_order
        sl_mu, sr_mu, mass = spatial_matrices(spec.mu[j], mcount, spec.intervals[j], q)
        sl_nu, sr_nu, _ = spatial_matrices(spec.nu[j], mcount, spec.intervals[j], q)
        mats.spatial_mass.append(mass)
        mats.stiff_mu_left.append(sl_mu)
        mats.stiff_mu_right.append(sr_mu)
        mats.stiff_nu_left.append(sl_nu)
        mats.stiff_nu_right.append(sr_nu)
    return mats


@dataclass(frozen=True)
class SeparableForcingTerm:
    """One tensor-separable forcing contribution g(t) * prod_j s_j(x_j).

    ``space_weights`` lists per-dimension Jacobi exponents (alpha, beta)
    describing an algebraic endpoint factor of s_j that the load quadrature
    should absorb; (0, 0) means plain Gauss-Legendre.  ``time_weight`` does
    the same for g on top of the (1-eta)^tau test factor, so pure-power time
    factors integrate exactly.
    """

    time_fn: Callable
    space_fns: tuple
    space_weights: tuple
    time_weight: tuple = (0.0, 0.0)


def _temporal_load_component(spec: ProblemSpec, n_time: int, q: int, g,
                             time_weight=(0.0, 0.0)) -> np.ndarray:
    """Vector of integral_0^T g(t) Psi_k(t) dt using the (1-eta)^tau-weighted rule."""
    aexp, bexp = time_weight
    rule = gauss_jacobi_rule(q, spec.tau + aexp, bexp)
    t = (1.0 + rule.nodes) * spec.T / 2.0
    gv = np.asarray(g(t), dtype=float)
    if not np.all(np.isfinite(gv)):
        raise ValueError("forcing time factor not finite at quadrature nodes")
    if aexp != 0.0:
        gv = gv * (1.0 - rule.nodes) ** (-aexp)
    if bexp != 0.0:
        gv = gv * (1.0 + rule.nodes) ** (-bexp)
    b_tab = jacobi_table(n_time - 1, JacobiParams(spec.tau, -spec.tau), rule.nodes)
    return (spec.T / 2.0) * (b_tab * rule.weights) @ gv


def _spatial_load_component(spec, j, m_count, q, s_fn, weight_exp) -> np.ndarray:
    """Vector of integral_a^b s(x) phi_r(x) dx with a matched Jacobi weight."""
    aexp, bexp = weight_exp
    a, b = spec.intervals[j]
    jac = (b - a) / 2.0
    rule = gauss_jacobi_rule(q, aexp, bexp) if (aexp, bexp) != (0.0, 0.0) else gauss_legendre_rule(q)
    xi = rule.nodes
    x = a + (1.0 + xi) * jac
    sv = np.asarray(s_fn(x), dtype=float)
    if not np.all(np.isfinite(sv)):
        raise ValueError(f"forcing spatial factor not finite at nodes of dim {j + 1}")
    if aexp != 0.0:
        sv = sv * (1.0 - xi) ** (-aexp)
    if bexp != 0.0:
        sv = sv * (1.0 + xi) ** (-bexp)
    phi = spatial_phi_values(m_count, xi)
    return jac * (phi * rule.weights) @ sv


def load_vector_separable(spec: ProblemSpec, res: Resolution, terms, quad_order=None) -> np.ndarray:
    """Load vector from tensor-separable forcing terms with matched weights.

    Entries follow the global ordering: temporal index slowest, then the
    spatial dimensions in declaration order.
    """
    q = quad_order or res.quad_order or (max(res.n_time, *res.m_space) + 10)
    total = np.zeros((res.n_time,) + tuple(res.m_space))
    for term in terms:
        vec = _temporal_load_component(spec, res.n_time, q, term.time_fn, term.time_weight)
        parts = [vec]
        for j in range(spec.d):
            parts.append(
                _spatial_load_component(spec, j, res.m_space[j], q, term.space_fns[j],
                                        term.space_weights[j])
            )
        acc = parts[0]
        for p in parts[1:]:
            acc = np.multiply.outer(acc, p)
        total += acc
    return total.reshape(-1)


def load_vector(spec: ProblemSpec, res: Resolution, forcing_eval, quad_order=None,
                spatial_weight_exponents=None) -> np.ndarray:
    """Load vector (f, v_{k,r}) by tensor-product quadrature of a pointwise forcing.

    The temporal direction always uses the Gauss-Jacobi (alpha=tau, beta=0)
    rule absorbing the (1-eta)^tau test factor.  Spatial directions default
    to Gauss-Legendre; pass per-dimension (alpha, beta) exponents when the
    forcing carries known algebraic endpoint factors.
    """
    q = quad_order or res.quad_order or (max(res.n_time, *res.m_space) + 10)
    trule = gauss_jacobi_rule(q, spec.tau, 0.0)
    t = (1.0 + trule.nodes) * spec.T / 2.0
    b_tab = jacobi_table(res.n_time - 1, JacobiParams(spec.tau, -spec.tau), trule.nodes)

    if spatial_weight_exponents is None:
        spatial_weight_exponents = [(0.0, 0.0)] * spec.d
    xrules, xcoords, phis, jacs = [], [], [], []
    for j in range(spec.d):
        aexp, bexp = spatial_weight_exponents[j]
        rule = gauss_jacobi_rule(q, aexp, bexp) if (aexp, bexp) != (0.0, 0.0) else gauss_legendre_rule(q)
        a, b = spec.intervals[j]
        jac = (b - a) / 2.0
        xrules.append(rule)
        xcoords.append(a + (1.0 + rule.nodes) * jac)
        phis.append(spatial_phi_values(res.m_space[j], rule.nodes))
        jacs.append(jac)

    grids = np.meshgrid(t, *xcoords, indexing="ij")
    fv = np.asarray(forcing_eval(*grids), dtype=float)
    fv = np.broadcast_to(fv, grids[0].shape).copy()
    if not np.all(np.isfinite(fv)):
        idx = np.argwhere(~np.isfinite(fv))[0]
        loc = tuple(g[tuple(idx)] for g in grids)
        raise ValueError(f"forcing not finite at node {loc}")

    for j in range(spec.d):
        aexp, bexp = spatial_weight_exponents[j]
        if (aexp, bexp) != (0.0, 0.0):
            xi = xrules[j].nodes
            shape = [1] * (spec.d + 1)
            shape[j + 1] = xi.size
            fv = fv * ((1.0 - xi) ** (-aexp) * (1.0 + xi) ** (-bexp)).reshape(shape)

    # contract the forcing grid against the weighted basis tables, time first
    acc = np.tensordot(b_tab * trule.weights, fv, axes=(1, 0)) * (spec.T / 2.0)
    for j in range(spec.d):
        w_phi = phis[j] * xrules[j].weights * jacs[j]
        # quadrature axis of dimension j sits at position j+1 after the
        # previous contractions
        acc = np.moveaxis(np.tensordot(acc, w_phi, axes=(j + 1, 1)), -1, j + 1)
    return acc.reshape(-1)
