"""Linearized CMC and Willmore boundary-value problems on the hemisphere:
closed-form first-order graph functions, residual verification, an
independent mode-by-mode ODE solver, and the Lagrange multipliers.

With principal curvatures kappa_1, kappa_2 of the boundary at the
attachment point (H = kappa_1 + kappa_2), the first-order deviation u' of
the critical half-sphere solves

  CMC:      (Lap + 2) u' = 5 (k1 w1^2 + k2 w2^2) w3 - H w3 + (3/8) H
  Willmore: Lap (Lap + 2) u' = Lap(5 (k1 w1^2 + k2 w2^2) w3 - H w3) - H

with Neumann data du'/deta = -(k1 w1^2 + k2 w2^2) on the equator, the
third-order condition d(Lap + 2)u'/deta = 7 (k1 w1^2 + k2 w2^2) - H in the
Willmore case, and the mass/center constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import expr as ex
from . import quadrature as hq
from . import sphere

__all__ = [
    "LinearizedProblem", "LinearizedSolution", "ResidualReport",
    "ShootingDiverged", "ConstraintSingular",
    "closed_form_uprime", "uprime_expr", "pde_rhs_expr",
    "residual_check", "solve_ode_modes", "multipliers",
]

ODE_RTOL = 1e-11
ODE_ATOL = 1e-13
THETA_START = 1e-3


class ShootingDiverged(Exception):
    pass


class ConstraintSingular(Exception):
    pass


@dataclass(frozen=True)
class LinearizedProblem:
    case: str          # 'cmc' or 'willmore'
    kappa1: float
    kappa2: float

    def __post_init__(self):
        if self.case.lower() not in ("cmc", "willmore"):
            raise ValueError(f"unknown case {self.case!r}")
        object.__setattr__(self, "case", self.case.lower())

    @property
    def H(self):
        return self.kappa1 + self.kappa2

    @property
    def K(self):
        return self.kappa1 * self.kappa2


@dataclass
class LinearizedSolution:
    u_prime: ex.Expr                       # closed form over omega
    samples: np.ndarray                    # rows (t, phi, u' numeric from ODE modes)
    alpha_prime: float
    beta_prime: np.ndarray
    mode_sup_errors: dict = field(default_factory=dict)


def _k(x):
    from fractions import Fraction
    return ex.const(Fraction(repr(float(x))))


_W1, _W2, _W3 = ex.var("w1"), ex.var("w2"), ex.var("w3")
_K1, _K2 = ex.var("k1"), ex.var("k2")


def uprime_expr(case: str) -> ex.Expr:
    """Closed-form u'(0) over omega with symbolic curvatures k1, k2.

    The CMC azimuthal-mode-2 rational factor is kept in the pole-regular
    factored form (2 + w3)/(3 (1 + w3)^2), algebraically equal to
    (2 - 3 w3 + w3^3)/(3 (1 - w3^2)^2) because 2 - 3t + t^3 = (1-t)^2 (t+2).
    """
    f_part = (_K1 * _W1 ** 2 + _K2 * _W2 ** 2) * _W3 / 2
    if case.lower() == "cmc":
        v1 = (_K1 + _K2) / 4 * (ex.const(3) / 4 - _W3)
        v2 = (_K1 - _K2) / 4 * (_W1 ** 2 - _W2 ** 2) * (2 + _W3) / (3 * (1 + _W3) ** 2)
        return v1 + v2 - f_part
    if case.lower() == "willmore":
        v1 = (_K1 + _K2) * (1 - ex.ln(ex.const(2)) + ex.ln(1 + _W3) / 2
                            - ex.const(3) / 4 * _W3)
        v2 = (_K1 - _K2) / 4 * (_W1 ** 2 - _W2 ** 2) / (1 + _W3)
        return v1 + v2 - f_part
    raise ValueError(f"unknown case {case!r}")


def closed_form_uprime(p: LinearizedProblem) -> ex.Expr:
    """The verified explicit solution with numeric curvatures."""
    return ex.substitute(uprime_expr(p.case),
                         {"k1": _k(p.kappa1), "k2": _k(p.kappa2)})


def pde_rhs_expr(case: str) -> ex.Expr:
    """Right-hand side of the linearized PDE over omega (symbolic k1, k2):
    the common field 5 (k1 w1^2 + k2 w2^2) w3 - H w3; the multiplier terms
    are added separately per case."""
    return (5 * (_K1 * _W1 ** 2 + _K2 * _W2 ** 2) - (_K1 + _K2)) * _W3


@dataclass
class ResidualReport:
    case: str
    interior: float
    neumann: float
    third_order: float            # NaN for CMC
    mass_constraint: float
    center_constraint: float

    def max_residual(self) -> float:
        vals = [self.interior, self.neumann, self.mass_constraint,
                self.center_constraint]
        if not math.isnan(self.third_order):
            vals.append(self.third_order)
        return max(vals)


def _sup_on_grid(e: ex.Expr, t_max=0.95, n_t=97, n_phi=64, extra=None):
    t = np.linspace(0.0, t_max, n_t)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    b = {"t": tt.ravel(), "phi": pp.ravel()}
    if extra:
        b.update(extra)
    return float(np.max(np.abs(ex.evaluate(e, b))))


def _sup_on_equator(e: ex.Expr, n_phi=256, extra=None):
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    b = {"t": np.zeros_like(phi), "phi": phi}
    if extra:
        b.update(extra)
    return float(np.max(np.abs(ex.evaluate(e, b))))


def residual_check(p: LinearizedProblem, u: ex.Expr,
                   grid: hq.QuadratureGrid = hq.QuadratureGrid()) -> ResidualReport:
    """Sup-norm residuals of the interior PDE, the Neumann data, the
    Willmore third-order condition, and the integral constraints, for any
    candidate u over omega (or already in (t, phi))."""
    kb = {"k1": float(p.kappa1), "k2": float(p.kappa2)}
    H = p.H
    ut = sphere.to_tphi(u) if ex.free_variables(u) & {"w1", "w2", "w3"} else u
    rhs = sphere.to_tphi(ex.substitute(pde_rhs_expr(p.case),
                                       {"k1": _k(p.kappa1), "k2": _k(p.kappa2)}))
    lap2_u = sphere.laplacian(ut) + 2 * ut
    kappa_form = sphere.to_tphi(
        ex.substitute(_K1 * _W1 ** 2 + _K2 * _W2 ** 2,
                      {"k1": _k(p.kappa1), "k2": _k(p.kappa2)}))
    if p.case == "cmc":
        interior = _sup_on_grid(lap2_u - rhs - _k(3 * H / 8), extra=kb)
        third = float("nan")
        mass_target = 0.0
    else:
        interior = _sup_on_grid(
            sphere.laplacian(lap2_u) - sphere.laplacian(rhs) + _k(H), extra=kb)
        third = _sup_on_equator(
            sphere.eta_derivative(lap2_u) - 7 * kappa_form + _k(H), extra=kb)
        mass_target = math.pi / 8.0 * H
    neumann = _sup_on_equator(sphere.eta_derivative(ut) + kappa_form, extra=kb)
    mass = abs(hq.integrate_tphi(ut, grid, extra=kb) - mass_target)
    center = max(
        abs(hq.integrate_tphi(ut * sphere.OMEGA[0], grid, extra=kb)),
        abs(hq.integrate_tphi(ut * sphere.OMEGA[1], grid, extra=kb)),
    )
    return ResidualReport(p.case, interior, neumann, third, mass, center)


# ---------------------------------------------------------------------------
# independent ODE-mode solver
# ---------------------------------------------------------------------------

def _integrate_mode(rhs, y0, theta0=THETA_START):
    sol = solve_ivp(rhs, (theta0, np.pi / 2), y0, method="DOP853",
                    rtol=ODE_RTOL, atol=ODE_ATOL, dense_output=True)
    if not sol.success:
        raise ShootingDiverged(sol.message)
    return sol


def _mode0_op(c):
    """g'' + cot(theta) g' + c g as a first-order system."""
    def rhs(theta, y):
        g, dg = y
        return [dg, -dg / math.tan(theta) - c * g + rhs.forcing(theta)]
    rhs.forcing = lambda theta: 0.0
    return rhs


def _mode2_op(c, forcing=None):
    """g'' + 5 cot(theta) g' + c g = forcing as a first-order system."""
    def rhs(theta, y):
        g, dg = y
        f = forcing(theta) if forcing is not None else 0.0
        return [dg, -5.0 * dg / math.tan(theta) - c * g + f]
    return rhs


def solve_cmc_modes():
    """CMC mode functions g1(theta), g2(theta) of u' = (k1+k2)/4 v1 +
    (k1-k2)/4 v2 - f/2 with v1 = g1, v2 = (w1^2 - w2^2) g2."""
    th0 = THETA_START
    # mode 0: g'' + cot g' + 2 g = 3/2, regular start g = g0 + (3/2 - 2 g0)/4 theta^2
    op = _mode0_op(2.0)
    op.forcing = lambda theta: 1.5
    a2 = 1.5 / 4.0
    part = _integrate_mode(op, [a2 * th0 ** 2, 2 * a2 * th0])
    op_h = _mode0_op(2.0)
    hom = _integrate_mode(op_h, [1.0 - th0 ** 2 / 2.0, -th0])
    # Neumann: g'(pi/2) = 1
    end = math.pi / 2
    g0 = (1.0 - part.sol(end)[1]) / hom.sol(end)[1]

    def g1(theta):
        return part.sol(theta)[0] + g0 * hom.sol(theta)[0]

    # mode 2: g'' + 5 cot g' - 4 g = 0, regular series 1 + theta^2/3; g'(pi/2) = 1
    reg = _integrate_mode(_mode2_op(-4.0), [1.0 + th0 ** 2 / 3.0, 2 * th0 / 3.0])
    scale = 1.0 / reg.sol(end)[1]

    def g2(theta):
        return scale * reg.sol(theta)[0]

    return g1, g2


def solve_willmore_modes():
    """Willmore mode functions v1(theta) and h(theta) of
    u' = (k1+k2) v1 + (k1-k2)/4 (w1^2 - w2^2) h - f/2, via the chained pair
    w = (Lap + 2)v (Poisson step) then the Helmholtz step, with the kernel
    constants fixed by the Neumann and mass constraints."""
    th0 = THETA_START
    end = math.pi / 2

    # mode 0, step 1: Lap w = -1 regular particular, w_p ~ -theta^2/4
    op_w = _mode0_op(0.0)
    op_w.forcing = lambda theta: -1.0
    wp = _integrate_mode(op_w, [-th0 ** 2 / 4.0, -th0 / 2.0])
    # step 2: (Lap + 2) P = w_p with regular series P ~ -theta^4/48
    op_p = _mode0_op(2.0)
    op_p.forcing = lambda theta: wp.sol(theta)[0]
    P = _integrate_mode(op_p, [-th0 ** 4 / 48.0, -th0 ** 3 / 12.0])
    # v1 = P + C0/2 + c cos(theta); Neumann v1'(pi/2) = 1/4, mass integral pi/4
    c_cos = P.sol(end)[1] - 0.25
    integral_P, _ = quad(lambda th: P.sol(th)[0] * math.sin(th), th0, end,
                         epsabs=1e-13, epsrel=1e-13)
    C0 = 2.0 * (0.125 - 0.5 * c_cos - integral_P)

    def v1(theta):
        return P.sol(theta)[0] + 0.5 * C0 + c_cos * math.cos(theta)

    # mode 2, step 1: homogeneous w'' + 5 cot w' - 6 w = 0 with w'(pi/2) = -4
    regw = _integrate_mode(_mode2_op(-6.0), [1.0 + th0 ** 2 / 2.0, th0])
    A = -4.0 / regw.sol(end)[1]

    def w2(theta):
        return A * regw.sol(theta)[0]

    # step 2: h'' + 5 cot h' - 4 h = w2 with regular particular h ~ w2(0)/12 theta^2
    part2 = _integrate_mode(_mode2_op(-4.0, forcing=w2),
                            [A * th0 ** 2 / 12.0, A * th0 / 6.0])
    regh = _integrate_mode(_mode2_op(-4.0), [1.0 + th0 ** 2 / 3.0, 2 * th0 / 3.0])
    B = (1.0 - part2.sol(end)[1]) / regh.sol(end)[1]

    def h(theta):
        return part2.sol(theta)[0] + B * regh.sol(theta)[0]

    return v1, h


def _mode_sup_error(numeric, closed, t_max=0.999, n=400):
    t = np.linspace(0.0, t_max, n)
    theta = np.arccos(t)
    theta = np.clip(theta, THETA_START, None)
    got = np.array([numeric(th) for th in theta])
    want = closed(np.cos(theta))
    return float(np.max(np.abs(got - want)))


def solve_ode_modes(p: LinearizedProblem,
                    n_t: int = 40, n_phi: int = 32) -> LinearizedSolution:
    """Numerically solve the azimuthal mode-0 and mode-2 problems by
    shooting from a two-term regular series start at theta = 1e-3, discard
    the singular homogeneous solutions, assemble u'(0) = modes - f/2 on a
    sample grid, and attach the closed form and multipliers."""
    if p.case == "cmc":
        m0, m2 = solve_cmc_modes()
        coef0 = (p.kappa1 + p.kappa2) / 4.0
        errs = {
            "mode0": _mode_sup_error(m0, lambda t: 0.75 - t),
            "mode2": _mode_sup_error(m2, lambda t: (2.0 + t) / (3.0 * (1.0 + t) ** 2)),
        }
    else:
        m0, m2 = solve_willmore_modes()
        coef0 = p.kappa1 + p.kappa2
        errs = {
            "mode0": _mode_sup_error(
                m0, lambda t: 1.0 - math.log(2.0) + 0.5 * np.log(1.0 + t) - 0.75 * t),
            "mode2": _mode_sup_error(m2, lambda t: 1.0 / (1.0 + t)),
        }
    coef2 = (p.kappa1 - p.kappa2) / 4.0

    t = np.linspace(0.0, math.cos(THETA_START), n_t)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    theta = np.arccos(np.clip(tt, -1.0, 1.0))
    w1, w2_, w3 = sphere.omega_values(tt, pp)
    mode0_vals = np.array([m0(th) for th in theta.ravel()]).reshape(theta.shape)
    mode2_vals = np.array([m2(th) for th in theta.ravel()]).reshape(theta.shape)
    f_half = 0.5 * (p.kappa1 * w1 ** 2 + p.kappa2 * w2_ ** 2) * w3
    u_vals = (coef0 * mode0_vals
              + coef2 * (w1 ** 2 - w2_ ** 2) * mode2_vals
              - f_half)
    samples = np.column_stack([tt.ravel(), pp.ravel(), u_vals.ravel()])
    alpha, beta = multipliers(p)
    return LinearizedSolution(
        u_prime=closed_form_uprime(p),
        samples=samples,
        alpha_prime=alpha,
        beta_prime=beta,
        mode_sup_errors=errs,
    )


# ---------------------------------------------------------------------------
# Lagrange multipliers
# ---------------------------------------------------------------------------

def multipliers(p: LinearizedProblem,
                grid: hq.QuadratureGrid = hq.QuadratureGrid()) -> tuple[float, np.ndarray]:
    """alpha'(0) and beta'(0) re-derived from the closed form by integrating
    the PDE and applying Gauss's theorem as boundary integrals, then
    cross-checked against the closed-form values -(3/8) H (CMC) and H/4
    (Willmore); beta' = (0, 0) in both cases."""
    kb = {"k1": float(p.kappa1), "k2": float(p.kappa2)}
    ut = sphere.to_tphi(closed_form_uprime(p))
    rhs = sphere.to_tphi(ex.substitute(
        pde_rhs_expr(p.case), {"k1": _k(p.kappa1), "k2": _k(p.kappa2)}))
    du_eta = sphere.eta_derivative(ut)
    int_rhs = hq.integrate_tphi(rhs, grid, extra=kb)
    bd_du = hq.integrate_boundary_tphi(du_eta, extra=kb)
    int_u = hq.integrate_tphi(ut, grid, extra=kb)

    if p.case == "cmc":
        alpha = (int_rhs + bd_du - 2.0 * int_u) / (2.0 * math.pi)
        beta = np.array([
            -hq.integrate_boundary_tphi(sphere.OMEGA[i] * du_eta, extra=kb)
            - hq.integrate_tphi(sphere.OMEGA[i] * rhs, grid, extra=kb)
            for i in (0, 1)
        ])
        closed = -3.0 / 8.0 * p.H
    else:
        lap2_u = sphere.laplacian(ut) + 2 * ut
        bd_third = hq.integrate_boundary_tphi(
            sphere.eta_derivative(lap2_u), extra=kb)
        bd_rhs = hq.integrate_boundary_tphi(
            sphere.eta_derivative(rhs), extra=kb)
        alpha = (-bd_third + bd_rhs) / (-8.0 * math.pi)
        beta = np.array([
            0.5 * (2.0 * hq.integrate_boundary_tphi(sphere.OMEGA[i] * du_eta, extra=kb)
                   - hq.integrate_boundary_tphi(
                       sphere.OMEGA[i] * sphere.eta_derivative(lap2_u), extra=kb))
            for i in (0, 1)
        ])
        closed = p.H / 4.0
    if abs(alpha - closed) > 1e-8:
        raise ConstraintSingular(
            f"numeric alpha'(0) = {alpha} disagrees with closed form {closed}")
    return alpha, beta
